//! Budget-constrained attack-set selection: cost-ratio greedy (plain and
//! budget-filtered), exhaustive search, and random and degree baselines.

use std::io::Write;
use std::time::Instant;

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::attack::{AgentSet, AttackScenario};
use crate::convergence::{build_influence_cache, conv_error, InfluenceCache};
use crate::error::{Error, Result};
use crate::report::fmt_g17;

pub const BRUTE_FORCE_CAP: usize = 20;
/// Relative gap under which two scores count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub agent: usize,
    pub gain: f64,
    pub gain_per_cost: f64,
    pub f_cum: f64,
}

#[derive(Clone, Debug)]
pub struct SelectionResult {
    pub algorithm: &'static str,
    pub omega: f64,
    pub set: AgentSet,
    pub f_value: f64,
    pub cost: f64,
    pub bound: f64,
    pub trace: Vec<TraceStep>,
    /// Seconds spent in the selection loop; the influence cache is excluded.
    pub wall_time: f64,
    /// Number of `f` evaluations on candidate sets.
    pub evaluations: usize,
}

impl SelectionResult {
    pub fn write_csv_header<W: Write>(mut out: W) -> Result<()> {
        writeln!(out, "algorithm,omega,cost,set,f_value,bound,wall_ms")?;
        Ok(())
    }

    pub fn write_csv_row<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            self.algorithm,
            fmt_g17(self.omega),
            fmt_g17(self.cost),
            self.set,
            fmt_g17(self.f_value),
            fmt_g17(self.bound),
            fmt_g17(self.wall_time * 1e3)
        )?;
        Ok(())
    }

    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iter,agent,gain,gain_per_cost,f_cum")?;
        for (i, t) in self.trace.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                i + 1,
                t.agent,
                fmt_g17(t.gain),
                fmt_g17(t.gain_per_cost),
                fmt_g17(t.f_cum)
            )?;
        }
        Ok(())
    }
}

/// `1 − e^{−cost/Ω}`.
pub fn suboptimality_bound(cost: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!("budget must be positive, got {omega}")));
    }
    if !(cost >= 0.0) {
        return Err(Error::InvalidArgument(format!("cost must be non-negative, got {cost}")));
    }
    Ok(1.0 - (-cost / omega).exp())
}

/// Zero budget admits only the empty set, whose bound is 0.
fn bound_or_zero(cost: f64, omega: f64) -> f64 {
    suboptimality_bound(cost, omega).unwrap_or(0.0)
}

fn prepare(s: &AttackScenario, cache: &InfluenceCache) -> Result<Vec<f64>> {
    if cache.n() != s.n() || !cache.is_for(s) {
        return Err(Error::Precondition("influence cache was built for another scenario".into()));
    }
    s.cost_vector()
}

fn finish(
    algorithm: &'static str,
    s: &AttackScenario,
    cache: &InfluenceCache,
    costs: &[f64],
    set: AgentSet,
    trace: Vec<TraceStep>,
    started: Instant,
    evaluations: usize,
) -> Result<SelectionResult> {
    let cost = set.iter().map(|i| costs[i - 1]).sum();
    let f_value = conv_error(cache, &set)?;
    Ok(SelectionResult {
        algorithm,
        omega: s.budget,
        bound: bound_or_zero(cost, s.budget),
        set,
        f_value,
        cost,
        trace,
        wall_time: started.elapsed().as_secs_f64(),
        evaluations,
    })
}

/// Index of the best score; scores within `TIE_TOL` relative of the maximum
/// are tied and the first (lowest ID) wins.
fn argmax_first(scores: &[(usize, f64)]) -> Option<(usize, f64)> {
    let best = scores.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    let slack = TIE_TOL * best.abs().max(f64::MIN_POSITIVE);
    scores.iter().copied().find(|&(_, v)| v >= best - slack)
}

struct GreedyState<'a> {
    cache: &'a InfluenceCache,
    costs: &'a [f64],
    set: AgentSet,
    sum: DVector<f64>,
    f: f64,
    cost: f64,
    trace: Vec<TraceStep>,
    evaluations: usize,
}

impl<'a> GreedyState<'a> {
    fn new(cache: &'a InfluenceCache, costs: &'a [f64]) -> Self {
        let dim = cache.columns().first().map_or(0, |c| c.len());
        GreedyState {
            cache,
            costs,
            set: AgentSet::new(),
            sum: DVector::zeros(dim),
            f: 0.0,
            cost: 0.0,
            trace: Vec::new(),
            evaluations: 0,
        }
    }

    /// Best `(agent, gain)` by gain per cost among `candidates`.
    fn pick(&mut self, candidates: impl Iterator<Item = usize>) -> Option<(usize, f64)> {
        let gains: Vec<(usize, f64)> = candidates
            .map(|a| (a, (&self.sum + self.cache.column(a)).norm() - self.f))
            .collect();
        self.evaluations += gains.len();
        let ratios: Vec<(usize, f64)> = gains.iter().map(|&(a, g)| (a, g / self.costs[a - 1])).collect();
        let (agent, _) = argmax_first(&ratios)?;
        gains.into_iter().find(|&(a, _)| a == agent)
    }

    fn add(&mut self, agent: usize, gain: f64) {
        self.sum += self.cache.column(agent);
        self.f = self.sum.norm();
        self.cost += self.costs[agent - 1];
        self.set.insert(agent);
        self.trace.push(TraceStep { agent, gain, gain_per_cost: gain / self.costs[agent - 1], f_cum: self.f });
    }
}

/// Cost-ratio greedy that keeps adding while `c(Â) ≤ Ω` and then drops the
/// last pick if it broke the budget.
pub fn fdi_assa(s: &AttackScenario) -> Result<SelectionResult> {
    let cache = build_influence_cache(s)?;
    fdi_assa_with(s, &cache)
}

pub fn fdi_assa_with(s: &AttackScenario, cache: &InfluenceCache) -> Result<SelectionResult> {
    let costs = prepare(s, cache)?;
    let started = Instant::now();
    let mut st = GreedyState::new(cache, &costs);
    let mut candidates: Vec<usize> = (1..=s.n()).collect();
    let mut last = None;
    while !candidates.is_empty() && st.cost <= s.budget {
        let Some((agent, gain)) = st.pick(candidates.iter().copied()) else { break };
        st.add(agent, gain);
        candidates.retain(|&a| a != agent);
        last = Some(agent);
    }
    if st.cost > s.budget {
        if let Some(agent) = last {
            st.set.remove(agent);
            st.trace.pop();
        }
    }
    let (set, trace, evaluations) = (st.set, st.trace, st.evaluations);
    finish("greedy", s, cache, &costs, set, trace, started, evaluations)
}

/// Cost-ratio greedy that only evaluates candidates still affordable.
pub fn ifdi_assa(s: &AttackScenario) -> Result<SelectionResult> {
    let cache = build_influence_cache(s)?;
    ifdi_assa_with(s, &cache)
}

pub fn ifdi_assa_with(s: &AttackScenario, cache: &InfluenceCache) -> Result<SelectionResult> {
    let costs = prepare(s, cache)?;
    let started = Instant::now();
    let mut st = GreedyState::new(cache, &costs);
    let mut candidates: Vec<usize> = (1..=s.n()).collect();
    while !candidates.is_empty() && st.cost < s.budget {
        let spent = st.cost;
        let affordable: Vec<usize> =
            candidates.iter().copied().filter(|&a| spent + costs[a - 1] <= s.budget).collect();
        let Some((agent, gain)) = st.pick(affordable.into_iter()) else { break };
        st.add(agent, gain);
        candidates.retain(|&a| a != agent);
    }
    let (set, trace, evaluations) = (st.set, st.trace, st.evaluations);
    finish("greedy-improved", s, cache, &costs, set, trace, started, evaluations)
}

/// Exact maximizer of `f` over affordable subsets; ties go to the
/// lexicographically smallest set.
pub fn brute_force(s: &AttackScenario) -> Result<SelectionResult> {
    if s.n() > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge { n: s.n(), cap: BRUTE_FORCE_CAP, what: "brute force" });
    }
    let cache = build_influence_cache(s)?;
    brute_force_with(s, &cache)
}

pub fn brute_force_with(s: &AttackScenario, cache: &InfluenceCache) -> Result<SelectionResult> {
    let n = s.n();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge { n, cap: BRUTE_FORCE_CAP, what: "brute force" });
    }
    let costs = prepare(s, cache)?;
    let started = Instant::now();

    // Gray-code walk: one column added or removed per step.
    let walk = |visit: &mut dyn FnMut(u64, f64)| {
        let dim = cache.columns().first().map_or(0, |c| c.len());
        let mut sum = DVector::<f64>::zeros(dim);
        let mut gray = 0u64;
        visit(0, 0.0);
        for k in 1u64..(1u64 << n) {
            let bit = k.trailing_zeros() as usize;
            gray ^= 1 << bit;
            if gray >> bit & 1 == 1 {
                sum += cache.column(bit + 1);
            } else {
                sum -= cache.column(bit + 1);
            }
            let cost: f64 = (0..n).filter(|i| gray >> i & 1 == 1).map(|i| costs[i]).sum();
            if cost <= s.budget {
                visit(gray, sum.norm());
            }
        }
    };

    let mut approx_max = 0.0f64;
    let mut evaluations = 0usize;
    walk(&mut |_, f| {
        evaluations += 1;
        approx_max = approx_max.max(f);
    });
    let mut near = Vec::new();
    walk(&mut |mask, f| {
        if f >= approx_max * (1.0 - 1e-9) {
            near.push(mask);
        }
    });
    let exact: Vec<(AgentSet, f64)> = near
        .into_iter()
        .map(|mask| {
            let set = AgentSet::from_mask(mask);
            let f = conv_error(cache, &set)?;
            Ok((set, f))
        })
        .collect::<Result<_>>()?;
    let best = exact.iter().map(|(_, f)| *f).fold(0.0, f64::max);
    let set = exact
        .into_iter()
        .filter(|(_, f)| *f >= best * (1.0 - TIE_TOL))
        .map(|(set, _)| set)
        .min_by(|a, b| a.iter().cmp(b.iter()))
        .unwrap_or_default();
    finish("brute", s, cache, &costs, set, Vec::new(), started, evaluations)
}

/// Agents in a seeded random order, each added if still affordable.
pub fn random_baseline(s: &AttackScenario, seed: u64) -> Result<SelectionResult> {
    let cache = build_influence_cache(s)?;
    random_baseline_with(s, &cache, seed)
}

pub fn random_baseline_with(s: &AttackScenario, cache: &InfluenceCache, seed: u64) -> Result<SelectionResult> {
    let mut order: Vec<usize> = (1..=s.n()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ordered_fill("random", s, cache, order)
}

/// Agents by degree (highest first, then lowest ID), each added if still
/// affordable.
pub fn degree_baseline(s: &AttackScenario) -> Result<SelectionResult> {
    let cache = build_influence_cache(s)?;
    degree_baseline_with(s, &cache)
}

pub fn degree_baseline_with(s: &AttackScenario, cache: &InfluenceCache) -> Result<SelectionResult> {
    let degrees = s.graph.degrees();
    let mut order: Vec<usize> = (1..=s.n()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(degrees[i - 1]), i));
    ordered_fill("degree", s, cache, order)
}

fn ordered_fill(
    algorithm: &'static str,
    s: &AttackScenario,
    cache: &InfluenceCache,
    order: Vec<usize>,
) -> Result<SelectionResult> {
    let costs = prepare(s, cache)?;
    let started = Instant::now();
    let mut st = GreedyState::new(cache, &costs);
    for agent in order {
        if st.cost + costs[agent - 1] <= s.budget {
            let gain = (&st.sum + cache.column(agent)).norm() - st.f;
            st.evaluations += 1;
            st.add(agent, gain);
        }
    }
    let (set, trace, evaluations) = (st.set, st.trace, st.evaluations);
    finish(algorithm, s, cache, &costs, set, trace, started, evaluations)
}
