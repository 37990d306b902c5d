//! Bilinear form `h`, the ratio `γ`, marginal gains, and monotonicity and
//! submodularity verification, both from the definitions and from the
//! `h`-conditions for constant attacks.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::attack::{AgentSet, AttackScenario};
use crate::convergence::{build_influence_cache, conv_error, InfluenceCache, SpectralForm};
use crate::error::{Error, Result};

pub const EXHAUSTIVE_CAP: usize = 14;
pub const DEFINITION_TOL: f64 = 1e-9;
pub const CONDITION_TOL: f64 = 1e-10;

/// `h(A, B)` through the spectral form; constant strategies only.
pub fn pairwise_h(s: &AttackScenario, a: &AgentSet, b: &AgentSet) -> Result<f64> {
    SpectralForm::new(s)?.h(a, b)
}

/// `γ = ρ⁺_j(A) / ρ⁺_j(B)` with `ρ⁺_j(S) = f(S ∪ {j}) + f(S)`.
pub fn gamma_ratio(s: &AttackScenario, a: &AgentSet, b: &AgentSet, j: usize) -> Result<f64> {
    let cache = build_influence_cache(s)?;
    gamma_from_cache(&cache, a, b, j)
}

pub fn gamma_from_cache(cache: &InfluenceCache, a: &AgentSet, b: &AgentSet, j: usize) -> Result<f64> {
    check_chain(a, b, Some(j), cache.n())?;
    let plus = |set: &AgentSet| -> Result<f64> { Ok(conv_error(cache, &set.with(j))? + conv_error(cache, set)?) };
    let denom = plus(b)?;
    if denom == 0.0 {
        return Err(Error::Precondition(format!("rho+_{j}(B) is zero")));
    }
    Ok(plus(a)? / denom)
}

/// `ρ_j(S) = f(S ∪ {j}) − f(S)`.
pub fn marginal_gain(cache: &InfluenceCache, set: &AgentSet, j: usize) -> Result<f64> {
    if set.contains(j) {
        return Err(Error::Precondition(format!("agent {j} is already in {{{set}}}")));
    }
    AgentSet::from([j]).check_range(cache.n())?;
    Ok(conv_error(cache, &set.with(j))? - conv_error(cache, set)?)
}

fn check_chain(a: &AgentSet, b: &AgentSet, j: Option<usize>, n: usize) -> Result<()> {
    a.check_range(n)?;
    b.check_range(n)?;
    if !a.is_subset(b) {
        return Err(Error::Precondition(format!("{{{a}}} is not a subset of {{{b}}}")));
    }
    if let Some(j) = j {
        AgentSet::from([j]).check_range(n)?;
        if b.contains(j) {
            return Err(Error::Precondition(format!("agent {j} lies in {{{b}}}")));
        }
    }
    Ok(())
}

/// Evaluates the `h`-conditions against one precomputed spectral form.
#[derive(Clone, Debug)]
pub struct ConditionChecker {
    form: SpectralForm,
}

impl ConditionChecker {
    pub fn new(s: &AttackScenario) -> Result<Self> {
        Ok(ConditionChecker { form: SpectralForm::new(s)? })
    }

    pub fn form(&self) -> &SpectralForm {
        &self.form
    }

    pub fn h(&self, a: &AgentSet, b: &AgentSet) -> Result<f64> {
        self.form.h(a, b)
    }

    pub fn gamma(&self, a: &AgentSet, b: &AgentSet, j: usize) -> Result<f64> {
        check_chain(a, b, Some(j), self.form.n())?;
        let plus = |set: &AgentSet| -> Result<f64> { Ok(self.form.error(&set.with(j))? + self.form.error(set)?) };
        let denom = plus(b)?;
        if denom == 0.0 {
            return Err(Error::Precondition(format!("rho+_{j}(B) is zero")));
        }
        Ok(plus(a)? / denom)
    }

    /// `h(A ∪ B, B ∖ A) ≥ 0`.
    pub fn monotone_condition(&self, a: &AgentSet, b: &AgentSet) -> Result<bool> {
        check_chain(a, b, None, self.form.n())?;
        Ok(self.h(&a.union(b), &b.difference(a))? >= -CONDITION_TOL)
    }

    /// `h(A, {j}) ≥ ½(γ − 1) h({j}, {j}) + γ h(B, {j})`.
    pub fn submodular_condition(&self, a: &AgentSet, b: &AgentSet, j: usize) -> Result<bool> {
        let gamma = self.gamma(a, b, j)?;
        let js = AgentSet::from([j]);
        let lhs = self.h(a, &js)?;
        let rhs = 0.5 * (gamma - 1.0) * self.h(&js, &js)? + gamma * self.h(b, &js)?;
        Ok(lhs - rhs >= -CONDITION_TOL)
    }
}

pub fn check_monotone_condition(s: &AttackScenario, a: &AgentSet, b: &AgentSet) -> Result<bool> {
    ConditionChecker::new(s)?.monotone_condition(a, b)
}

pub fn check_submodular_condition(s: &AttackScenario, a: &AgentSet, b: &AgentSet, j: usize) -> Result<bool> {
    ConditionChecker::new(s)?.submodular_condition(a, b, j)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
}

impl VerifyMode {
    pub fn name(&self) -> &'static str {
        match self {
            VerifyMode::Exhaustive => "exhaustive",
            VerifyMode::Sampled { .. } => "sampled",
        }
    }
}

/// `f(A) > f(B)` although `A ⊆ B`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneWitness {
    pub a: AgentSet,
    pub b: AgentSet,
    pub f_a: f64,
    pub f_b: f64,
}

/// `ρ_j(A) < ρ_j(B)` although `A ⊆ B`, `j ∉ B`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubmodularWitness {
    pub a: AgentSet,
    pub b: AgentSet,
    pub j: usize,
    pub rho_a: f64,
    pub rho_b: f64,
}

/// Verdicts of the `h`-conditions and how often they disagree with the
/// definitional checks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConditionSummary {
    pub monotone: bool,
    pub submodular: bool,
    pub monotone_disagreements: u64,
    pub submodular_disagreements: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub mode: VerifyMode,
    pub strategy: String,
    pub monotone: bool,
    pub submodular: bool,
    pub checked_triples: u64,
    pub monotone_violation: Option<MonotoneWitness>,
    pub submodular_violation: Option<SubmodularWitness>,
    pub conditions: Option<ConditionSummary>,
}

impl VerificationReport {
    /// `A|B|j` for a submodularity witness, `A|B|` for a monotonicity one.
    pub fn witness(&self) -> String {
        if let Some(w) = &self.submodular_violation {
            format!("{}|{}|{}", w.a, w.b, w.j)
        } else if let Some(w) = &self.monotone_violation {
            format!("{}|{}|", w.a, w.b)
        } else {
            String::new()
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "mode,strategy,monotone,submodular,checked,violation")?;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            self.mode.name(),
            self.strategy,
            self.monotone,
            self.submodular,
            self.checked_triples,
            self.witness()
        )?;
        Ok(())
    }
}

/// Checks `f(A) ≤ f(B) + 1e−9` and `ρ_j(A) ≥ ρ_j(B) − 1e−9` over all chains
/// `A ⊆ B`, `j ∉ B` (exhaustive) or random ones (sampled). Constant
/// strategies also evaluate the `h`-conditions.
pub fn verify(s: &AttackScenario, mode: VerifyMode) -> Result<VerificationReport> {
    if mode == VerifyMode::Exhaustive && s.n() > EXHAUSTIVE_CAP {
        return Err(Error::TooLarge { n: s.n(), cap: EXHAUSTIVE_CAP, what: "exhaustive verification" });
    }
    let cache = build_influence_cache(s)?;
    let checker = if s.strategy.is_constant() { Some(ConditionChecker::new(s)?) } else { None };
    let tally = match mode {
        VerifyMode::Exhaustive => exhaustive(&cache, checker.as_ref()),
        VerifyMode::Sampled { samples, seed } => sampled(&cache, checker.as_ref(), samples, seed),
    };
    Ok(tally.into_report(mode, s.strategy.name().to_string(), checker.is_some()))
}

#[derive(Default)]
struct Tally {
    checked: u64,
    monotone: Option<MonotoneWitness>,
    submodular: Option<SubmodularWitness>,
    cond_monotone_fail: bool,
    cond_submodular_fail: bool,
    monotone_disagreements: u64,
    submodular_disagreements: u64,
}

fn lex_key(a: &AgentSet, b: &AgentSet, j: usize) -> (Vec<usize>, Vec<usize>, usize) {
    (a.iter().collect(), b.iter().collect(), j)
}

impl Tally {
    fn offer_monotone(&mut self, w: MonotoneWitness) {
        let better = match &self.monotone {
            None => true,
            Some(cur) => lex_key(&w.a, &w.b, 0) < lex_key(&cur.a, &cur.b, 0),
        };
        if better {
            self.monotone = Some(w);
        }
    }

    fn offer_submodular(&mut self, w: SubmodularWitness) {
        let better = match &self.submodular {
            None => true,
            Some(cur) => lex_key(&w.a, &w.b, w.j) < lex_key(&cur.a, &cur.b, cur.j),
        };
        if better {
            self.submodular = Some(w);
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.checked += other.checked;
        if let Some(w) = other.monotone {
            self.offer_monotone(w);
        }
        if let Some(w) = other.submodular {
            self.offer_submodular(w);
        }
        self.cond_monotone_fail |= other.cond_monotone_fail;
        self.cond_submodular_fail |= other.cond_submodular_fail;
        self.monotone_disagreements += other.monotone_disagreements;
        self.submodular_disagreements += other.submodular_disagreements;
        self
    }

    fn into_report(self, mode: VerifyMode, strategy: String, with_conditions: bool) -> VerificationReport {
        VerificationReport {
            mode,
            strategy,
            monotone: self.monotone.is_none(),
            submodular: self.submodular.is_none(),
            checked_triples: self.checked,
            monotone_violation: self.monotone,
            submodular_violation: self.submodular,
            conditions: with_conditions.then(|| ConditionSummary {
                monotone: !self.cond_monotone_fail,
                submodular: !self.cond_submodular_fail,
                monotone_disagreements: self.monotone_disagreements,
                submodular_disagreements: self.submodular_disagreements,
            }),
        }
    }
}

/// `f` and, for constant strategies, `⟨κ̂(S), r_j⟩` for every subset mask.
struct SubsetTables {
    n: usize,
    f: Vec<f64>,
    /// `hj[mask * n + (j − 1)] = h(mask, {j})`
    hj: Option<Vec<f64>>,
}

impl SubsetTables {
    fn build(cache: &InfluenceCache, checker: Option<&ConditionChecker>) -> Self {
        let n = cache.n();
        let f = subset_sums(cache.columns()).iter().map(|v| v.norm()).collect();
        let hj = checker.map(|c| {
            let responses: Vec<_> = (1..=n).map(|j| c.form().response(j).clone()).collect();
            subset_sums(&responses)
                .iter()
                .flat_map(|k| responses.iter().map(move |r| k.dot(r)).collect::<Vec<_>>())
                .collect()
        });
        SubsetTables { n, f, hj }
    }

    fn h_j(&self, mask: usize, j: usize) -> f64 {
        self.hj.as_ref().expect("conditions table")[mask * self.n + j - 1]
    }
}

fn subset_sums(columns: &[nalgebra::DVector<f64>]) -> Vec<nalgebra::DVector<f64>> {
    let dim = columns.first().map_or(0, |c| c.len());
    let mut sums = vec![nalgebra::DVector::zeros(dim); 1 << columns.len()];
    for mask in 1..sums.len() {
        let low = mask.trailing_zeros() as usize;
        sums[mask] = &sums[mask & (mask - 1)] + &columns[low];
    }
    sums
}

fn mask_set(mask: usize) -> AgentSet {
    AgentSet::from_mask(mask as u64)
}

/// Checks every `A ⊆ B` (and every `j ∉ B`) for one `B`.
fn check_b(t: &SubsetTables, b: usize, tally: &mut Tally) {
    let full = (1usize << t.n) - 1;
    let f = &t.f;
    let mut a = b;
    loop {
        if a != b {
            tally.checked += 1;
            let def_ok = f[a] <= f[b] + DEFINITION_TOL;
            if !def_ok {
                tally.offer_monotone(MonotoneWitness { a: mask_set(a), b: mask_set(b), f_a: f[a], f_b: f[b] });
            }
            if t.hj.is_some() {
                let d = b & !a;
                let h: f64 = (1..=t.n).filter(|j| d >> (j - 1) & 1 == 1).map(|j| t.h_j(b, j)).sum();
                let cond_ok = h >= -CONDITION_TOL;
                tally.cond_monotone_fail |= !cond_ok;
                tally.monotone_disagreements += u64::from(cond_ok != def_ok);
            }
        }
        let mut outside = full & !b;
        while outside != 0 {
            let jbit = outside & outside.wrapping_neg();
            outside &= outside - 1;
            let j = jbit.trailing_zeros() as usize + 1;
            tally.checked += 1;
            let rho_a = f[a | jbit] - f[a];
            let rho_b = f[b | jbit] - f[b];
            let def_ok = rho_a >= rho_b - DEFINITION_TOL;
            if !def_ok {
                tally.offer_submodular(SubmodularWitness { a: mask_set(a), b: mask_set(b), j, rho_a, rho_b });
            }
            if t.hj.is_some() {
                let denom = f[b | jbit] + f[b];
                if denom > 0.0 {
                    let gamma = (f[a | jbit] + f[a]) / denom;
                    let lhs = t.h_j(a, j);
                    let rhs = 0.5 * (gamma - 1.0) * t.h_j(jbit, j) + gamma * t.h_j(b, j);
                    let cond_ok = lhs - rhs >= -CONDITION_TOL;
                    tally.cond_submodular_fail |= !cond_ok;
                    tally.submodular_disagreements += u64::from(cond_ok != def_ok);
                }
            }
        }
        if a == 0 {
            break;
        }
        a = (a - 1) & b;
    }
}

fn exhaustive(cache: &InfluenceCache, checker: Option<&ConditionChecker>) -> Tally {
    let tables = SubsetTables::build(cache, checker);
    (0..1usize << cache.n())
        .into_par_iter()
        .fold(Tally::default, |mut tally, b| {
            check_b(&tables, b, &mut tally);
            tally
        })
        .reduce(Tally::default, Tally::merge)
}

fn sampled(cache: &InfluenceCache, checker: Option<&ConditionChecker>, samples: usize, seed: u64) -> Tally {
    let n = cache.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::default();
    let f = |set: &AgentSet| conv_error(cache, set).expect("in range");
    for _ in 0..samples {
        let (mut a, mut b) = (AgentSet::new(), AgentSet::new());
        for id in 1..=n {
            match rng.random_range(0..3) {
                0 => {
                    a.insert(id);
                    b.insert(id);
                }
                1 => {
                    b.insert(id);
                }
                _ => {}
            }
        }
        let (fa, fb) = (f(&a), f(&b));
        if a != b {
            tally.checked += 1;
            let def_ok = fa <= fb + DEFINITION_TOL;
            if !def_ok {
                tally.offer_monotone(MonotoneWitness { a: a.clone(), b: b.clone(), f_a: fa, f_b: fb });
            }
            if let Some(c) = checker {
                let cond_ok = c.monotone_condition(&a, &b).expect("valid chain");
                tally.cond_monotone_fail |= !cond_ok;
                tally.monotone_disagreements += u64::from(cond_ok != def_ok);
            }
        }
        let outside: Vec<usize> = (1..=n).filter(|id| !b.contains(*id)).collect();
        if outside.is_empty() {
            continue;
        }
        let j = outside[rng.random_range(0..outside.len())];
        tally.checked += 1;
        let rho_a = f(&a.with(j)) - fa;
        let rho_b = f(&b.with(j)) - fb;
        let def_ok = rho_a >= rho_b - DEFINITION_TOL;
        if !def_ok {
            tally.offer_submodular(SubmodularWitness { a: a.clone(), b: b.clone(), j, rho_a, rho_b });
        }
        if let Some(c) = checker {
            if let Ok(cond_ok) = c.submodular_condition(&a, &b, j) {
                tally.cond_submodular_fail |= !cond_ok;
                tally.submodular_disagreements += u64::from(cond_ok != def_ok);
            }
        }
    }
    tally
}
