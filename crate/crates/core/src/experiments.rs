//! One-command reproduction of the reference experiments as CSV files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::attack::{AgentSet, AttackScenario, AttackStrategy, CostModel};
use crate::convergence::{build_influence_cache, InfluenceCache};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::presets::{self, example2_scenario, fixed_graph, geometric_preset, reference_scenario, two_dim_strategy};
use crate::report::fmt_g17;
use crate::selection::{
    brute_force_with, degree_baseline_with, fdi_assa_with, ifdi_assa_with, random_baseline_with, SelectionResult,
};
use crate::submodularity::{verify, ConditionChecker, VerifyMode};

pub const PRESETS: [&str; 7] = ["table1", "example1", "example2", "fig3", "fig4", "fig5", "fig7"];
pub const BASELINE_SEED: u64 = 42;
/// Noise seed of the table's Gaussian row.
pub const TABLE_GAUSS_SEED: u64 = 1;
pub const SWEEP_BUDGETS: [f64; 6] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
const TIMING_REPEATS: usize = 5;

/// Writes the preset's CSV files into `out_dir` and returns their paths.
pub fn reproduce(preset: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if !PRESETS.contains(&preset) {
        return Err(Error::InvalidArgument(format!(
            "unknown preset {preset:?}; expected one of {}",
            PRESETS.join(", ")
        )));
    }
    std::fs::create_dir_all(out_dir)?;
    let files: Vec<(String, String)> = match preset {
        "table1" => vec![("table1.csv".into(), table1()?)],
        "example1" => vec![("example1.csv".into(), example1()?)],
        "example2" => vec![("example2.csv".into(), example2()?)],
        "fig3" => vec![("fig3.csv".into(), fig3()?)],
        "fig4" => {
            let (sweep, verdicts) = fig4()?;
            vec![("fig4.csv".into(), sweep), ("fig4_verify.csv".into(), verdicts)]
        }
        "fig5" => {
            let (sweep, layout) = fig5()?;
            vec![("fig5.csv".into(), sweep), ("fig5_layout.csv".into(), layout)]
        }
        "fig7" => vec![("fig7.csv".into(), fig7()?)],
        _ => unreachable!("checked above"),
    };
    let mut paths = Vec::new();
    for (name, body) in files {
        let path = out_dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        w.write_all(body.as_bytes())?;
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

/// `(strategy, t_c)` rows with the greedy set and the exhaustive verdict.
pub fn table1_rows() -> Result<Vec<(String, f64, SelectionResult, bool, bool)>> {
    let points: Vec<(&str, f64)> = ["constant", "cos", "sin", "expdecay", "gauss"]
        .into_iter()
        .flat_map(|k| [30.0, 60.0].map(|t| (k, t)))
        .collect();
    points
        .into_par_iter()
        .map(|(kind, t_c)| {
            let s = reference_scenario(two_dim_strategy(kind, TABLE_GAUSS_SEED)?, t_c);
            let cache = build_influence_cache(&s)?;
            let greedy = fdi_assa_with(&s, &cache)?;
            let report = verify(&s, VerifyMode::Exhaustive)?;
            Ok((kind.to_string(), t_c, greedy, report.monotone, report.submodular))
        })
        .collect()
}

fn table1() -> Result<String> {
    let mut out = String::from("strategy,t_c,set,f_value,monotone,submodular\n");
    for (kind, t_c, r, monotone, submodular) in table1_rows()? {
        out += &format!("{kind},{},{},{},{monotone},{submodular}\n", fmt_g17(t_c), r.set, fmt_g17(r.f_value));
    }
    Ok(out)
}

/// The chain `A = {1}`, `B = {1, 3, 4, 5}` on the reference constant scenario.
pub fn example1_values() -> Result<Vec<(String, String)>> {
    let s = reference_scenario(AttackStrategy::Constant { k: presets::two_dim_k() }, presets::REFERENCE_HORIZON);
    let c = ConditionChecker::new(&s)?;
    let a = AgentSet::from([1]);
    let b = AgentSet::from([1, 3, 4, 5]);
    let one = |j: usize| AgentSet::from([j]);
    let mut rows = Vec::new();
    for (label, x, y) in [
        ("h(B,{3})", &b, one(3)),
        ("h(B,{4})", &b, one(4)),
        ("h(B,{5})", &b, one(5)),
        ("h(A,{2})", &a, one(2)),
        ("h(B,{2})", &b, one(2)),
        ("h({2},{2})", &one(2), one(2)),
        ("h(A,{6})", &a, one(6)),
        ("h(B,{6})", &b, one(6)),
        ("h({6},{6})", &one(6), one(6)),
    ] {
        rows.push((label.to_string(), fmt_g17(c.h(x, &y)?)));
    }
    for j in [2, 6] {
        rows.push((format!("gamma(j={j})"), fmt_g17(c.gamma(&a, &b, j)?)));
    }
    rows.push(("condition13".into(), c.monotone_condition(&a, &b)?.to_string()));
    for j in [2, 6] {
        rows.push((format!("condition14(j={j})"), c.submodular_condition(&a, &b, j)?.to_string()));
    }
    Ok(rows)
}

fn example1() -> Result<String> {
    let mut out = String::from("quantity,value\n");
    for (k, v) in example1_values()? {
        out += &format!("\"{k}\",{v}\n");
    }
    Ok(out)
}

fn selection_csv(results: &[SelectionResult]) -> Result<String> {
    let mut buf = Vec::new();
    SelectionResult::write_csv_header(&mut buf)?;
    for r in results {
        r.write_csv_row(&mut buf)?;
    }
    Ok(String::from_utf8(buf).expect("ascii csv"))
}

fn example2() -> Result<String> {
    let s = example2_scenario();
    let cache = build_influence_cache(&s)?;
    selection_csv(&[fdi_assa_with(&s, &cache)?, ifdi_assa_with(&s, &cache)?])
}

fn run_algorithm(name: &str, s: &AttackScenario, cache: &InfluenceCache) -> Result<SelectionResult> {
    match name {
        "greedy" => fdi_assa_with(s, cache),
        "greedy-improved" => ifdi_assa_with(s, cache),
        "brute" => brute_force_with(s, cache),
        "random" => random_baseline_with(s, cache, BASELINE_SEED),
        "degree" => degree_baseline_with(s, cache),
        other => Err(Error::InvalidArgument(format!("unknown algorithm {other:?}"))),
    }
}

/// One sweep point: `(graph, costs, strategy, result)`.
pub type SweepRow = (String, String, String, SelectionResult);

/// Every algorithm at every budget on each `(graph name, scenario)`, with
/// unit and degree costs.
pub fn budget_sweep(scenarios: &[(String, AttackScenario)], algorithms: &[&str]) -> Result<Vec<SweepRow>> {
    let caches = scenarios
        .par_iter()
        .map(|(_, s)| build_influence_cache(s))
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::new();
    for (idx, (graph, s)) in scenarios.iter().enumerate() {
        for costs in [CostModel::Uniform { c: 1.0 }, CostModel::DegreeProportional] {
            for omega in SWEEP_BUDGETS {
                for alg in algorithms {
                    points.push((idx, graph.clone(), s.with_costs(costs.clone()).with_budget(omega), *alg));
                }
            }
        }
    }
    points
        .into_par_iter()
        .map(|(idx, graph, s, alg)| {
            let r = run_algorithm(alg, &s, &caches[idx])?;
            Ok((graph, s.costs.name().to_string(), s.strategy.name().to_string(), r))
        })
        .collect()
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("graph,costs,strategy,algorithm,omega,cost,set,f_value\n");
    for (graph, costs, strategy, r) in rows {
        out += &format!(
            "{graph},{costs},{strategy},{},{},{},{},{}\n",
            r.algorithm,
            fmt_g17(r.omega),
            fmt_g17(r.cost),
            r.set,
            fmt_g17(r.f_value)
        );
    }
    out
}

const SIX_AGENT_ALGORITHMS: [&str; 4] = ["brute", "greedy", "random", "degree"];

pub fn fig3_rows() -> Result<Vec<SweepRow>> {
    let scenarios: Vec<(String, AttackScenario)> = ["constant", "sin"]
        .into_iter()
        .map(|k| Ok(("path".to_string(), reference_scenario(two_dim_strategy(k, 0)?, presets::REFERENCE_HORIZON))))
        .collect::<Result<_>>()?;
    budget_sweep(&scenarios, &SIX_AGENT_ALGORITHMS)
}

fn fig3() -> Result<String> {
    Ok(sweep_csv(&fig3_rows()?))
}

fn six_agent_graphs() -> Result<Vec<(String, Graph)>> {
    Ok(vec![("path".into(), Graph::path(6)?), ("cycle".into(), Graph::cycle(6)?), ("fixed".into(), fixed_graph())])
}

pub fn fig4_rows() -> Result<Vec<SweepRow>> {
    let base = reference_scenario(AttackStrategy::Constant { k: presets::two_dim_k() }, presets::REFERENCE_HORIZON);
    let scenarios: Vec<(String, AttackScenario)> =
        six_agent_graphs()?.into_iter().map(|(name, g)| (name, base.with_graph(g))).collect();
    budget_sweep(&scenarios, &SIX_AGENT_ALGORITHMS)
}

fn fig4() -> Result<(String, String)> {
    let base = reference_scenario(AttackStrategy::Constant { k: presets::two_dim_k() }, presets::REFERENCE_HORIZON);
    let mut verdicts = String::from("graph,mode,strategy,monotone,submodular,checked,violation\n");
    for (name, g) in six_agent_graphs()? {
        let r = verify(&base.with_graph(g), VerifyMode::Exhaustive)?;
        verdicts += &format!(
            "{name},{},{},{},{},{},{}\n",
            r.mode.name(),
            r.strategy,
            r.monotone,
            r.submodular,
            r.checked_triples,
            r.witness()
        );
    }
    Ok((sweep_csv(&fig4_rows()?), verdicts))
}

fn fig5() -> Result<(String, String)> {
    let preset = geometric_preset(CostModel::Uniform { c: 1.0 })?;
    let name = format!("geometric-seed{}", preset.seed);
    let rows = budget_sweep(&[(name, preset.scenario.clone())], &["greedy", "random", "degree"])?;
    let mut layout = String::from("seed,dbar,agent,x,y,degree\n");
    let degrees = preset.scenario.graph.degrees();
    for (i, p) in preset.positions.iter().enumerate() {
        layout += &format!(
            "{},{},{},{},{},{}\n",
            preset.seed,
            fmt_g17(preset.scenario.dbar),
            i + 1,
            fmt_g17(p[0]),
            fmt_g17(p[1]),
            degrees[i]
        );
    }
    Ok((sweep_csv(&rows), layout))
}

/// Both greedy variants on the geometric layout; wall times are the minimum
/// over a few repeats.
#[derive(Clone, Debug)]
pub struct TimingRow {
    pub costs: String,
    pub omega: f64,
    pub fdi: SelectionResult,
    pub ifdi: SelectionResult,
}

pub fn fig7_rows() -> Result<Vec<TimingRow>> {
    let preset = geometric_preset(CostModel::Uniform { c: 1.0 })?;
    let cache = build_influence_cache(&preset.scenario)?;
    let mut rows = Vec::new();
    for costs in [CostModel::Uniform { c: 1.0 }, CostModel::DegreeProportional] {
        for omega in SWEEP_BUDGETS {
            let s = preset.scenario.with_costs(costs.clone()).with_budget(omega);
            let fastest = |run: &dyn Fn() -> Result<SelectionResult>| -> Result<SelectionResult> {
                let mut best = run()?;
                for _ in 1..TIMING_REPEATS {
                    let r = run()?;
                    if r.wall_time < best.wall_time {
                        best = r;
                    }
                }
                Ok(best)
            };
            let fdi = fastest(&|| fdi_assa_with(&s, &cache))?;
            let ifdi = fastest(&|| ifdi_assa_with(&s, &cache))?;
            rows.push(TimingRow { costs: costs.name().to_string(), omega, fdi, ifdi });
        }
    }
    Ok(rows)
}

fn fig7() -> Result<String> {
    let mut out =
        String::from("costs,omega,fdi_ms,ifdi_ms,fdi_evaluations,ifdi_evaluations,fdi_f,ifdi_f,fdi_set,ifdi_set\n");
    for r in fig7_rows()? {
        out += &format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.costs,
            fmt_g17(r.omega),
            fmt_g17(r.fdi.wall_time * 1e3),
            fmt_g17(r.ifdi.wall_time * 1e3),
            r.fdi.evaluations,
            r.ifdi.evaluations,
            fmt_g17(r.fdi.f_value),
            fmt_g17(r.ifdi.f_value),
            r.fdi.set,
            r.ifdi.set
        );
    }
    Ok(out)
}
