//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the summary is always printed; exits non-zero on any FAIL.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use attacklab::attack::{AgentSet, AttackScenario, AttackStrategy, CostModel};
use attacklab::convergence::{
    build_influence_cache, conv_error, conv_error_oracle, oracle_response, SpectralForm,
};
use attacklab::dynamics::{simulate_trajectory, LocalDynamics};
use attacklab::experiments::fig7_rows;
use attacklab::graph::{spectral_decompose, Graph};
use attacklab::presets::{
    example2_scenario, fixed_graph, geometric_preset, reference_initial_state, reference_scenario, two_dim_k,
    two_dim_strategy,
};
use attacklab::selection::{brute_force_with, degree_baseline_with, fdi_assa_with, ifdi_assa_with, random_baseline_with};
use attacklab::submodularity::{verify, ConditionChecker, VerifyMode};

/// Collects sub-check outcomes for one criterion.
struct Checks {
    failed: Vec<String>,
    count: usize,
}

impl Checks {
    fn new() -> Self {
        Checks { failed: Vec::new(), count: 0 }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.count += 1;
        println!("    [{}] {what}", if ok { "ok" } else { "x" });
        if !ok {
            self.failed.push(what);
        }
    }

    fn abs(&mut self, label: &str, got: f64, want: f64, tol: f64) {
        self.check((got - want).abs() <= tol, format!("{label}: got {got:.6} want {want} ± {tol}"));
    }

    fn rel(&mut self, label: &str, got: f64, want: f64, tol: f64) {
        let err = ((got - want) / want).abs();
        self.check(err <= tol, format!("{label}: got {got:.4e} want {want:e} (rel err {err:.3}, tol {tol})"));
    }
}

fn constant() -> AttackScenario {
    reference_scenario(AttackStrategy::Constant { k: two_dim_k() }, 30.0)
}

fn scenario(kind: &str, t_c: f64) -> AttackScenario {
    reference_scenario(two_dim_strategy(kind, 1).unwrap(), t_c)
}

fn set(ids: &[usize]) -> AgentSet {
    ids.iter().copied().collect()
}

/// `i ↦ n + 1 − i`, the only non-trivial automorphism of a path.
fn reversed(s: &AgentSet, n: usize) -> AgentSet {
    s.iter().map(|i| n + 1 - i).collect()
}

fn subsets_up_to(n: usize, k: usize) -> Vec<AgentSet> {
    (0u64..1 << n).filter(|m| m.count_ones() as usize <= k).map(AgentSet::from_mask).collect()
}

fn criterion_1(c: &mut Checks) {
    let started = Instant::now();
    for t_c in [30.0, 60.0] {
        let s = scenario("constant", t_c);
        let r = fdi_assa_with(&s, &build_influence_cache(&s).unwrap()).unwrap();
        c.abs(&format!("constant t_c={t_c} f"), r.f_value, 1.0315, 0.005);
        let want = set(&[1, 2]);
        c.check(
            r.set == want || reversed(&r.set, 6) == want,
            format!("constant t_c={t_c} set {{{}}} ~ {{1,2}}", r.set),
        );
    }
    let greedy_f = |kind: &str, t_c: f64| {
        let s = scenario(kind, t_c);
        fdi_assa_with(&s, &build_influence_cache(&s).unwrap()).unwrap().f_value
    };
    c.abs("cos t_c=30 f", greedy_f("cos", 30.0), 0.1905, 0.002);
    c.abs("cos t_c=60 f", greedy_f("cos", 60.0), 0.2948, 0.003);
    c.abs("sin t_c=30 f", greedy_f("sin", 30.0), 0.2017, 0.002);
    c.abs("sin t_c=60 f", greedy_f("sin", 60.0), 0.3379, 0.003);
    c.rel("expdecay t_c=30 f", greedy_f("expdecay", 30.0), 4.3e-6, 0.05);
    c.rel("expdecay t_c=60 f", greedy_f("expdecay", 60.0), 8.15e-13, 0.10);
    let secs = started.elapsed().as_secs_f64();
    c.check(secs < 10.0, format!("runtime {secs:.2}s < 10s"));
}

fn criterion_2(c: &mut Checks) {
    let started = Instant::now();
    let checker = ConditionChecker::new(&constant()).unwrap();
    let a = set(&[1]);
    let b = set(&[1, 3, 4, 5]);
    let one = |j: usize| set(&[j]);
    let expected = [
        ("h(B,{3})", &b, one(3), 0.5008),
        ("h(B,{4})", &b, one(4), 0.3950),
        ("h(B,{5})", &b, one(5), 0.2846),
        ("h(A,{2})", &a, one(2), 0.1485),
        ("h(B,{2})", &b, one(2), 0.2622),
        ("h({2},{2})", &one(2), one(2), 0.4052),
        ("h(A,{6})", &a, one(6), -0.0012),
        ("h(B,{6})", &b, one(6), -0.0963),
        ("h({6},{6})", &one(6), one(6), 0.3845),
    ];
    for (label, x, y, want) in expected {
        c.abs(label, checker.h(x, &y).unwrap(), want, 0.002);
    }
    c.abs("gamma j=2", checker.gamma(&a, &b, 2).unwrap(), 0.5841, 0.005);
    c.abs("gamma j=6", checker.gamma(&a, &b, 6).unwrap(), 0.5270, 0.005);
    c.check(checker.monotone_condition(&a, &b).unwrap(), "condition (13) holds".into());
    for j in [2, 6] {
        c.check(checker.submodular_condition(&a, &b, j).unwrap(), format!("condition (14) holds for j={j}"));
    }
    let secs = started.elapsed().as_secs_f64();
    c.check(secs < 5.0, format!("runtime {secs:.2}s < 5s"));
}

fn criterion_3(c: &mut Checks) {
    let s = scenario("cos", 30.0);
    let cache = build_influence_cache(&s).unwrap();
    let f = |ids: &[usize]| conv_error(&cache, &set(ids)).unwrap();
    c.abs("f({1,2,3})", f(&[1, 2, 3]), 0.2312, 0.002);
    c.abs("f({1,2,4})", f(&[1, 2, 4]), 0.2375, 0.002);
    c.abs("f({1,2,3,4})", f(&[1, 2, 3, 4]), 0.2658, 0.002);
    c.abs("rho_4({1,2})", f(&[1, 2, 4]) - f(&[1, 2]), 0.0470, 0.002);
    c.abs("rho_4({1,2,3})", f(&[1, 2, 3, 4]) - f(&[1, 2, 3]), 0.0346, 0.002);
    let s60 = scenario("cos", 60.0);
    let r = fdi_assa_with(&s60, &build_influence_cache(&s60).unwrap()).unwrap();
    let want = set(&[3, 5]);
    c.check(r.set == want || reversed(&r.set, 6) == want, format!("cos t_c=60 greedy {{{}}} ~ {{3,5}}", r.set));
}

fn criterion_4(c: &mut Checks) {
    let s = constant();
    let cache = build_influence_cache(&s).unwrap();
    let form = SpectralForm::new(&s).unwrap();
    let (mut closed_worst, mut oracle_worst) = (0.0f64, 0.0f64);
    for a in subsets_up_to(6, 3).into_iter().filter(|a| !a.is_empty()) {
        let f = conv_error(&cache, &a).unwrap();
        closed_worst = closed_worst.max(((form.error(&a).unwrap() - f) / f).abs());
        oracle_worst = oracle_worst.max(((conv_error_oracle(&s, &a).unwrap() - f) / f).abs());
    }
    c.check(closed_worst <= 1e-8, format!("constant closed form vs cache: worst rel {closed_worst:.2e} <= 1e-8"));
    c.check(oracle_worst <= 1e-6, format!("constant cache vs oracle: worst rel {oracle_worst:.2e} <= 1e-6"));
    for kind in ["sin", "cos"] {
        let s = scenario(kind, 30.0);
        let cache = build_influence_cache(&s).unwrap();
        let mut worst = 0.0f64;
        for a in subsets_up_to(6, 3).into_iter().filter(|a| !a.is_empty()) {
            let f = conv_error(&cache, &a).unwrap();
            worst = worst.max(((conv_error_oracle(&s, &a).unwrap() - f) / f).abs());
        }
        c.check(worst <= 1e-6, format!("{kind} cache vs oracle: worst rel {worst:.2e} <= 1e-6"));
    }
}

fn criterion_5(c: &mut Checks) {
    let mut worst = f64::INFINITY;
    let mut cases = 0;
    for kind in ["constant", "sin", "cos"] {
        let base = scenario(kind, 30.0);
        let cache = build_influence_cache(&base).unwrap();
        for costs in [CostModel::Uniform { c: 1.0 }, CostModel::DegreeProportional] {
            for omega in 1..=4 {
                let s = base.with_costs(costs.clone()).with_budget(omega as f64);
                let greedy = fdi_assa_with(&s, &cache).unwrap();
                let best = brute_force_with(&s, &cache).unwrap();
                let slack = greedy.f_value - greedy.bound * best.f_value;
                worst = worst.min(slack);
                cases += 1;
                if slack < -1e-9 {
                    println!(
                        "      {kind} {} omega={omega}: greedy {} f={:.6} bound {:.4} brute f={:.6}",
                        costs.name(),
                        greedy.set,
                        greedy.f_value,
                        greedy.bound,
                        best.f_value
                    );
                }
            }
        }
    }
    c.check(worst >= -1e-9, format!("{cases} cases, min f(greedy) - bound*f(brute) = {worst:.3e} >= -1e-9"));
}

fn criterion_6(c: &mut Checks) {
    for (gname, graph) in [("path", Graph::path(6).unwrap()), ("cycle", Graph::cycle(6).unwrap())] {
        for kind in ["sin", "cos", "expdecay", "constant"] {
            let s = scenario(kind, 30.0).with_graph(graph.clone());
            let started = Instant::now();
            let r = verify(&s, VerifyMode::Exhaustive).unwrap();
            let secs = started.elapsed().as_secs_f64();
            c.check(
                r.monotone && r.submodular && secs < 60.0,
                format!(
                    "{gname} {kind}: monotone={} submodular={} witness [{}] ({} checks, {secs:.2}s)",
                    r.monotone,
                    r.submodular,
                    r.witness(),
                    r.checked_triples
                ),
            );
        }
    }
}

fn criterion_7(c: &mut Checks) {
    let violating: Vec<u64> = (1..=20)
        .filter(|&seed| {
            let s = reference_scenario(two_dim_strategy("gauss", seed).unwrap(), 30.0);
            !verify(&s, VerifyMode::Exhaustive).unwrap().submodular
        })
        .collect();
    c.check(!violating.is_empty(), format!("gauss seeds with a submodularity violation: {violating:?}"));
    let s = constant().with_graph(fixed_graph()).with_costs(CostModel::DegreeProportional);
    let r = verify(&s, VerifyMode::Exhaustive).unwrap();
    c.check(
        !(r.monotone && r.submodular),
        format!("fixed graph: monotone={} submodular={} witness [{}]", r.monotone, r.submodular, r.witness()),
    );
}

fn criterion_8(c: &mut Checks) {
    let mut presets: Vec<(String, AttackScenario)> = Vec::new();
    for kind in ["constant", "cos", "sin", "expdecay", "gauss"] {
        for t_c in [30.0, 60.0] {
            presets.push((format!("path {kind} t_c={t_c}"), scenario(kind, t_c)));
        }
    }
    presets.push(("cycle".into(), constant().with_graph(Graph::cycle(6).unwrap())));
    presets.push(("fixed".into(), constant().with_graph(fixed_graph())));
    presets.push(("geometric".into(), geometric_preset(CostModel::Uniform { c: 1.0 }).unwrap().scenario));
    let mut mismatches = Vec::new();
    let mut compared = 0;
    for (name, s) in &presets {
        let cache = build_influence_cache(s).unwrap();
        for omega in 0..=6 {
            let s = s.with_costs(CostModel::Uniform { c: 1.0 }).with_budget(omega as f64);
            let a = fdi_assa_with(&s, &cache).unwrap().set;
            let b = ifdi_assa_with(&s, &cache).unwrap().set;
            compared += 1;
            if a != b {
                mismatches.push(format!("{name} omega={omega}: {{{a}}} vs {{{b}}}"));
            }
        }
    }
    c.check(mismatches.is_empty(), format!("uniform costs, {compared} runs, differing sets: {mismatches:?}"));

    let s = example2_scenario();
    let cache = build_influence_cache(&s).unwrap();
    let fdi = fdi_assa_with(&s, &cache).unwrap();
    let ifdi = ifdi_assa_with(&s, &cache).unwrap();
    c.check(ifdi.cost <= 6.0, format!("example-2 improved cost {} <= 6", ifdi.cost));
    c.check(
        ifdi.f_value >= fdi.f_value - 1e-12,
        format!("example-2 f: improved {{{}}} {:.6} >= plain {{{}}} {:.6}", ifdi.set, ifdi.f_value, fdi.set, fdi.f_value),
    );

    let rows: Vec<_> = fig7_rows().unwrap().into_iter().filter(|r| r.costs == "degree").collect();
    let fdi_ms: f64 = rows.iter().map(|r| r.fdi.wall_time * 1e3).sum();
    let ifdi_ms: f64 = rows.iter().map(|r| r.ifdi.wall_time * 1e3).sum();
    let fdi_evals: usize = rows.iter().map(|r| r.fdi.evaluations).sum();
    let ifdi_evals: usize = rows.iter().map(|r| r.ifdi.evaluations).sum();
    c.check(
        ifdi_ms <= fdi_ms,
        format!(
            "50 agents, degree costs, omega 1..6: improved {ifdi_ms:.3} ms ({ifdi_evals} evals) <= plain {fdi_ms:.3} ms ({fdi_evals} evals)"
        ),
    );
}

/// Random connected graph: a random spanning tree plus extra edges.
fn random_scenario(seed: u64) -> AttackScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=8usize);
    let mut edges = Vec::new();
    for i in 2..=n {
        edges.push((rng.random_range(1..i), i));
    }
    for _ in 0..rng.random_range(0..=n) {
        let (i, j) = (rng.random_range(1..=n), rng.random_range(1..=n));
        let e = (i.min(j), i.max(j));
        if i != j && !edges.contains(&e) {
            edges.push(e);
        }
    }
    let graph = Graph::explicit(n, &edges).unwrap();
    let dbar = rng.random_range(0.05..0.95) / graph.max_degree() as f64;
    let costs = CostModel::Explicit { values: (0..n).map(|_| rng.random_range(0.5..3.0)).collect() };
    AttackScenario {
        graph,
        local: LocalDynamics::from_rows(2, &[-0.5, 0.0, 1.0, -1.0], &[0.1, 0.1, 0.5, 0.2]).unwrap(),
        dbar,
        t_c: 30.0,
        strategy: AttackStrategy::Constant { k: two_dim_k() },
        costs,
        budget: rng.random_range(0.0..6.0),
        u_bar: 1e6,
        g_bar: 1e6,
        quad_step: 1e-3,
    }
}

fn criterion_9(c: &mut Checks) {
    let s = constant();
    let cache = build_influence_cache(&s).unwrap();
    c.check(conv_error(&cache, &AgentSet::new()).unwrap() == 0.0, "f(empty) = 0".into());

    let mut worst = 0.0f64;
    for graph in [Graph::path(6).unwrap(), Graph::cycle(6).unwrap(), fixed_graph()] {
        for kind in ["constant", "sin"] {
            let s = scenario(kind, 30.0).with_graph(graph.clone());
            let cache = build_influence_cache(&s).unwrap();
            for a in subsets_up_to(6, 3) {
                let diff = cache.aggregate(&a).unwrap() - oracle_response(&s, &a).unwrap();
                worst = worst.max(diff.amax());
            }
        }
    }
    c.check(worst <= 1e-6, format!("linearity: worst componentwise gap {worst:.2e} <= 1e-6"));

    let sys = s.system().unwrap();
    let a = set(&[1, 2]);
    let mu = attacklab::attack::indicator(&a, 6).unwrap();
    let f = conv_error(&cache, &a).unwrap();
    let x_other = DVector::from_fn(12, |i, _| (i as f64 * 1.7).sin() * 5.0);
    for (label, x0) in [("reference x0", reference_initial_state()), ("other x0", x_other)] {
        let attacked = simulate_trajectory(&sys, &x0, Some((&mu, &s.strategy)), 30.0, 1e-3, 1000).unwrap();
        let clean = simulate_trajectory(&sys, &x0, None, 30.0, 1e-3, 1000).unwrap();
        let d = (attacked.last_state().unwrap() - clean.last_state().unwrap()).norm();
        c.check((d - f).abs() <= 2e-4, format!("{label}: |x_a - x_c|(t_c) = {d:.6} vs f = {f:.6}"));
    }

    let mut over = Vec::new();
    for seed in 0..100 {
        let s = random_scenario(seed);
        let cache = build_influence_cache(&s).unwrap();
        for r in [
            fdi_assa_with(&s, &cache).unwrap(),
            ifdi_assa_with(&s, &cache).unwrap(),
            brute_force_with(&s, &cache).unwrap(),
            random_baseline_with(&s, &cache, seed).unwrap(),
            degree_baseline_with(&s, &cache).unwrap(),
        ] {
            if r.cost > s.budget {
                over.push(format!("seed {seed} {}: {} > {}", r.algorithm, r.cost, s.budget));
            }
        }
    }
    c.check(over.is_empty(), format!("budget safety on 100 random scenarios: {over:?}"));

    let mut worst = 0.0f64;
    let mut graphs = vec![Graph::path(6).unwrap(), Graph::cycle(6).unwrap(), fixed_graph()];
    graphs.push(geometric_preset(CostModel::Uniform { c: 1.0 }).unwrap().scenario.graph);
    for g in graphs {
        let l = g.laplacian();
        worst = worst.max((spectral_decompose(&l).unwrap().reconstruct() - l).amax());
    }
    c.check(worst <= 1e-8, format!("eigendecomposition reconstruction error {worst:.2e} <= 1e-8"));
}

fn main() -> ExitCode {
    let criteria: [(&str, fn(&mut Checks)); 9] = [
        ("table regression", criterion_1),
        ("worked-example h and gamma", criterion_2),
        ("cosine marginal gains", criterion_3),
        ("oracle equivalence", criterion_4),
        ("greedy guarantee", criterion_5),
        ("time-variant submodularity", criterion_6),
        ("non-submodularity witnesses", criterion_7),
        ("algorithm equivalence and improvement", criterion_8),
        ("structural invariants", criterion_9),
    ];
    let mut summary = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        println!("criterion {} ({name})", i + 1);
        let mut checks = Checks::new();
        run(&mut checks);
        let line = if checks.failed.is_empty() {
            format!("PASS criterion {}: {name} ({} checks)", i + 1, checks.count)
        } else {
            format!("FAIL criterion {}: {name} ({} of {} checks failed)", i + 1, checks.failed.len(), checks.count)
        };
        println!("{line}");
        summary.push((checks.failed.is_empty(), line));
    }
    println!();
    for (_, line) in &summary {
        println!("{line}");
    }
    if summary.iter().all(|(ok, _)| *ok) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
