//! Attack strategies θ(t), cost models, agent sets, and the full selection
//! scenario with its feasibility checks.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{consensus_conditions, step_count, system_matrix, GlobalSystem, LocalDynamics};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Set of agent IDs (1-based), always iterated in ascending order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentSet(BTreeSet<usize>);

impl AgentSet {
    pub fn new() -> Self {
        AgentSet(BTreeSet::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.contains(&id)
    }

    pub fn insert(&mut self, id: usize) -> bool {
        self.0.insert(id)
    }

    pub fn remove(&mut self, id: usize) -> bool {
        self.0.remove(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn with(&self, id: usize) -> AgentSet {
        let mut s = self.clone();
        s.insert(id);
        s
    }

    pub fn union(&self, other: &AgentSet) -> AgentSet {
        AgentSet(self.0.union(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &AgentSet) -> AgentSet {
        AgentSet(self.0.difference(&other.0).copied().collect())
    }

    pub fn is_subset(&self, other: &AgentSet) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Fails when any member lies outside `1..=n`.
    pub fn check_range(&self, n: usize) -> Result<()> {
        match self.iter().find(|&id| id == 0 || id > n) {
            Some(id) => Err(Error::AgentOutOfRange { id, n }),
            None => Ok(()),
        }
    }

    /// Bit `i - 1` set for every member `i`. Members must be `<= 64`.
    pub fn to_mask(&self) -> u64 {
        self.iter().fold(0u64, |acc, id| acc | (1u64 << (id - 1)))
    }

    pub fn from_mask(mask: u64) -> AgentSet {
        (0..64).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect()
    }
}

impl FromIterator<usize> for AgentSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        AgentSet(iter.into_iter().collect())
    }
}

impl<const N: usize> From<[usize; N]> for AgentSet {
    fn from(ids: [usize; N]) -> Self {
        ids.into_iter().collect()
    }
}

/// Serialized as `+`-joined ascending IDs, e.g. `1+2+5`; the empty set is "".
impl fmt::Display for AgentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join("+"))
    }
}

/// Accepts `+`, `,` or whitespace separators.
impl FromStr for AgentSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split(|c: char| c == '+' || c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("bad agent id {t:?}")))
            })
            .collect()
    }
}

/// `μ^A`: bit `i` is set iff agent `i + 1` is attacked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndicatorVector {
    bits: Vec<bool>,
}

impl IndicatorVector {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        IndicatorVector { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn to_set(&self) -> AgentSet {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i + 1).collect()
    }

    pub fn as_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.bits.len(), self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }))
    }

    /// `μ ⊗ θ`.
    pub fn kron(&self, theta: &DVector<f64>) -> DVector<f64> {
        let m = theta.len();
        let mut out = DVector::zeros(self.bits.len() * m);
        for (i, _) in self.bits.iter().enumerate().filter(|(_, &b)| b) {
            out.rows_mut(i * m, m).copy_from(theta);
        }
        out
    }
}

pub fn indicator(set: &AgentSet, n: usize) -> Result<IndicatorVector> {
    set.check_range(n)?;
    let mut bits = vec![false; n];
    for id in set.iter() {
        bits[id - 1] = true;
    }
    Ok(IndicatorVector { bits })
}

/// Injected signal θ(t) ∈ ℝ^m shared by every compromised agent.
#[derive(Clone, Debug, PartialEq)]
pub enum AttackStrategy {
    Constant { k: Vec<f64> },
    /// `K cos(t)`
    Cosine { k: Vec<f64> },
    /// `K sin(t)`
    Sine { k: Vec<f64> },
    /// `K e^{-t}`
    ExpDecay { k: Vec<f64> },
    /// Linear interpolation on a strictly increasing grid; no extrapolation.
    Sampled { times: Vec<f64>, values: Vec<Vec<f64>> },
    /// `K ⊙ ξ_⌊t/step⌋` with i.i.d. standard normal ξ, piecewise constant.
    GaussianNoise { k: Vec<f64>, seed: u64, step: f64 },
}

impl AttackStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            AttackStrategy::Constant { .. } => "constant",
            AttackStrategy::Cosine { .. } => "cos",
            AttackStrategy::Sine { .. } => "sin",
            AttackStrategy::ExpDecay { .. } => "expdecay",
            AttackStrategy::Sampled { .. } => "sampled",
            AttackStrategy::GaussianNoise { .. } => "gauss",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AttackStrategy::Constant { k }
            | AttackStrategy::Cosine { k }
            | AttackStrategy::Sine { k }
            | AttackStrategy::ExpDecay { k }
            | AttackStrategy::GaussianNoise { k, .. } => k.len(),
            AttackStrategy::Sampled { values, .. } => values.first().map_or(0, Vec::len),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, AttackStrategy::Constant { .. })
    }

    /// Structural checks: finite entries, consistent dimensions, increasing grid.
    pub fn check(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            AttackStrategy::Constant { k }
            | AttackStrategy::Cosine { k }
            | AttackStrategy::Sine { k }
            | AttackStrategy::ExpDecay { k } => {
                if k.is_empty() || !finite(k) {
                    return Err(Error::InvalidArgument("K must be a non-empty finite vector".into()));
                }
            }
            AttackStrategy::GaussianNoise { k, step, .. } => {
                if k.is_empty() || !finite(k) {
                    return Err(Error::InvalidArgument("K must be a non-empty finite vector".into()));
                }
                if !(*step > 0.0 && step.is_finite()) {
                    return Err(Error::InvalidArgument(format!("noise step must be positive, got {step}")));
                }
            }
            AttackStrategy::Sampled { times, values } => {
                if times.len() < 2 || times.len() != values.len() {
                    return Err(Error::InvalidArgument(
                        "sampled strategy needs >= 2 times and one value per time".into(),
                    ));
                }
                if !finite(times) || times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidArgument("sampled times must be strictly increasing".into()));
                }
                let m = values[0].len();
                if m == 0 || values.iter().any(|v| v.len() != m || !finite(v)) {
                    return Err(Error::InvalidArgument("sampled values must be finite and equal-length".into()));
                }
            }
        }
        Ok(())
    }

    pub fn theta_at(&self, t: f64) -> Result<DVector<f64>> {
        if !(t >= 0.0) {
            return Err(Error::InvalidTime(format!("attack time must be non-negative, got {t}")));
        }
        let scaled = |k: &[f64], s: f64| DVector::from_iterator(k.len(), k.iter().map(|v| v * s));
        Ok(match self {
            AttackStrategy::Constant { k } => DVector::from_column_slice(k),
            AttackStrategy::Cosine { k } => scaled(k, t.cos()),
            AttackStrategy::Sine { k } => scaled(k, t.sin()),
            AttackStrategy::ExpDecay { k } => scaled(k, (-t).exp()),
            AttackStrategy::Sampled { times, values } => {
                let (start, end) = (times[0], times[times.len() - 1]);
                if t < start || t > end {
                    return Err(Error::OutsideSampledRange { t, start, end });
                }
                let hi = times.partition_point(|&s| s < t).max(1);
                let lo = hi - 1;
                let w = (t - times[lo]) / (times[hi] - times[lo]);
                let a = DVector::from_column_slice(&values[lo]);
                let b = DVector::from_column_slice(&values[hi]);
                a * (1.0 - w) + b * w
            }
            AttackStrategy::GaussianNoise { k, seed, step } => {
                let index = (t / step).floor() as u64;
                let m = k.len() as u64;
                DVector::from_iterator(
                    k.len(),
                    k.iter()
                        .enumerate()
                        .map(|(c, kc)| kc * standard_normal(*seed, index * m + c as u64)),
                )
            }
        })
    }
}

/// Stateless standard-normal draw number `counter` of the stream `seed`
/// (Box–Muller over two 64-bit words at a fixed ChaCha word position).
fn standard_normal(seed: u64, counter: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(counter as u128 * 4);
    let to_unit = |w: u64| ((w >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
    let u1 = to_unit(rng.next_u64());
    let u2 = to_unit(rng.next_u64());
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Per-agent compromise cost `c(i)`.
#[derive(Clone, Debug, PartialEq)]
pub enum CostModel {
    Uniform { c: f64 },
    /// `c(i) = d_i`
    DegreeProportional,
    Explicit { values: Vec<f64> },
}

impl CostModel {
    pub fn name(&self) -> &'static str {
        match self {
            CostModel::Uniform { .. } => "uniform",
            CostModel::DegreeProportional => "degree",
            CostModel::Explicit { .. } => "explicit",
        }
    }

    /// Costs of agents `1..=n` in ID order.
    pub fn realize(&self, g: &Graph) -> Result<Vec<f64>> {
        match self {
            CostModel::Uniform { c } => Ok(vec![*c; g.n()]),
            CostModel::DegreeProportional => Ok(g.degrees().into_iter().map(|d| d as f64).collect()),
            CostModel::Explicit { values } => {
                if values.len() != g.n() {
                    return Err(Error::Dimension(format!(
                        "{} explicit costs for {} agents",
                        values.len(),
                        g.n()
                    )));
                }
                Ok(values.clone())
            }
        }
    }
}

/// A constraint of the selection problem that the scenario breaks.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// (a) max ‖θ(t)‖ on the quadrature grid exceeds ū.
    MagnitudeBound { max_norm: f64, u_bar: f64 },
    /// (b) ‖∫θ‖ exceeds ḡ.
    EnergyBound { norm: f64, g_bar: f64 },
    /// (c)
    Disconnected,
    /// (d)
    DbarRange { dbar: f64, limit: f64 },
    /// (e)
    NonPositiveCost { agent: usize, cost: f64 },
    /// (f) the unattacked system does not reach consensus.
    NoConsensus,
    /// θ could not be evaluated on [0, t_c].
    Strategy(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MagnitudeBound { max_norm, u_bar } => {
                write!(f, "u_bar: max |theta(t)| = {max_norm} exceeds u_bar = {u_bar}")
            }
            Violation::EnergyBound { norm, g_bar } => {
                write!(f, "g_bar: |integral of theta| = {norm} exceeds g_bar = {g_bar}")
            }
            Violation::Disconnected => write!(f, "graph: not connected"),
            Violation::DbarRange { dbar, limit } => {
                write!(f, "dbar: {dbar} outside (0, 1/d_max) = (0, {limit})")
            }
            Violation::NonPositiveCost { agent, cost } => {
                write!(f, "costs: agent {agent} has non-positive cost {cost}")
            }
            Violation::NoConsensus => write!(f, "dynamics: unattacked system does not reach consensus"),
            Violation::Strategy(msg) => write!(f, "strategy: {msg}"),
        }
    }
}

/// Result of [`validate_scenario`]; empty means feasible.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Everything that defines one attack-set selection problem.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackScenario {
    pub graph: Graph,
    pub local: LocalDynamics,
    pub dbar: f64,
    pub t_c: f64,
    pub strategy: AttackStrategy,
    pub costs: CostModel,
    pub budget: f64,
    pub u_bar: f64,
    pub g_bar: f64,
    pub quad_step: f64,
}

impl AttackScenario {
    /// Structural consistency only; feasibility is reported by
    /// [`validate_scenario`].
    pub fn check_structure(&self) -> Result<()> {
        self.strategy.check()?;
        if self.strategy.dim() != self.local.m() {
            return Err(Error::Dimension(format!(
                "strategy has dimension {} but agents have m = {}",
                self.strategy.dim(),
                self.local.m()
            )));
        }
        self.costs.realize(&self.graph)?;
        if !(self.t_c > 0.0 && self.t_c.is_finite()) {
            return Err(Error::InvalidTime(format!("t_c must be positive, got {}", self.t_c)));
        }
        if !(self.quad_step > 0.0 && self.quad_step.is_finite()) {
            return Err(Error::InvalidTime(format!("quad_step must be positive, got {}", self.quad_step)));
        }
        for (name, v) in [("dbar", self.dbar), ("budget", self.budget), ("u_bar", self.u_bar), ("g_bar", self.g_bar)] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite")));
            }
        }
        if self.budget < 0.0 || self.u_bar < 0.0 || self.g_bar < 0.0 {
            return Err(Error::InvalidArgument("budget, u_bar and g_bar must be non-negative".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn m(&self) -> usize {
        self.local.m()
    }

    pub fn cost_vector(&self) -> Result<Vec<f64>> {
        self.costs.realize(&self.graph)
    }

    /// `Σ_{i∈set} c(i)`.
    pub fn cost_of(&self, set: &AgentSet) -> Result<f64> {
        set.check_range(self.n())?;
        let c = self.cost_vector()?;
        Ok(set.iter().map(|i| c[i - 1]).sum())
    }

    pub fn system(&self) -> Result<GlobalSystem> {
        crate::dynamics::build_global(&self.local, &self.graph, self.dbar)
    }

    /// Fails with [`Error::Validation`] unless every constraint holds.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate_scenario(self)?;
        if report.is_ok() {
            Ok(())
        } else {
            Err(Error::Validation(report.violations))
        }
    }

    pub fn with_strategy(&self, strategy: AttackStrategy) -> Self {
        AttackScenario { strategy, ..self.clone() }
    }

    pub fn with_horizon(&self, t_c: f64) -> Self {
        AttackScenario { t_c, ..self.clone() }
    }

    pub fn with_budget(&self, budget: f64) -> Self {
        AttackScenario { budget, ..self.clone() }
    }

    pub fn with_costs(&self, costs: CostModel) -> Self {
        AttackScenario { costs, ..self.clone() }
    }

    pub fn with_graph(&self, graph: Graph) -> Self {
        AttackScenario { graph, ..self.clone() }
    }
}

/// Grid of `t_c / quad_step` intervals rounded up to an even count.
fn quadrature_grid(t_c: f64, quad_step: f64) -> (usize, f64) {
    let mut intervals = step_count(t_c, quad_step).max(2);
    if intervals % 2 == 1 {
        intervals += 1;
    }
    (intervals, t_c / intervals as f64)
}

/// Composite-Simpson `∫₀^{t_c} θ(τ) dτ` and `max ‖θ‖` over the same grid.
pub fn strategy_integral(strategy: &AttackStrategy, t_c: f64, quad_step: f64) -> Result<(DVector<f64>, f64)> {
    let (intervals, h) = quadrature_grid(t_c, quad_step);
    let mut acc = DVector::zeros(strategy.dim());
    let mut max_norm: f64 = 0.0;
    for i in 0..=intervals {
        let t = if i == intervals { t_c } else { i as f64 * h };
        let theta = strategy.theta_at(t)?;
        max_norm = max_norm.max(theta.norm());
        let w = if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += theta * w;
    }
    Ok((acc * (h / 3.0), max_norm))
}

/// Checks the magnitude and energy bounds, connectivity, the coupling range,
/// cost positivity and unattacked consensus. Violations are data; only a
/// structurally broken scenario is an error.
pub fn validate_scenario(s: &AttackScenario) -> Result<ValidationReport> {
    s.check_structure()?;
    let mut violations = Vec::new();

    match strategy_integral(&s.strategy, s.t_c, s.quad_step) {
        Ok((integral, max_norm)) => {
            if max_norm > s.u_bar {
                violations.push(Violation::MagnitudeBound { max_norm, u_bar: s.u_bar });
            }
            if integral.norm() > s.g_bar {
                violations.push(Violation::EnergyBound { norm: integral.norm(), g_bar: s.g_bar });
            }
        }
        Err(e) => violations.push(Violation::Strategy(e.to_string())),
    }

    if !s.graph.is_connected() {
        violations.push(Violation::Disconnected);
    }
    let dmax = s.graph.max_degree();
    let limit = if dmax == 0 { f64::INFINITY } else { 1.0 / dmax as f64 };
    if !(s.dbar > 0.0 && s.dbar < limit) {
        violations.push(Violation::DbarRange { dbar: s.dbar, limit });
    }
    for (i, c) in s.cost_vector()?.into_iter().enumerate() {
        if !(c > 0.0) {
            violations.push(Violation::NonPositiveCost { agent: i + 1, cost: c });
        }
    }
    let matrix = system_matrix(&s.local, &s.graph.laplacian(), s.dbar);
    if !consensus_conditions(&matrix, s.n(), s.m()).holds {
        violations.push(Violation::NoConsensus);
    }
    Ok(ValidationReport { violations })
}
