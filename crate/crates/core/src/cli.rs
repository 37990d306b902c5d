//! Subcommand implementations. Each returns the process exit status:
//! 0 on success, 1 for bad input, 2 when the computation itself fails.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use crate::attack::{indicator, AgentSet};
use crate::config::parse_config;
use crate::convergence::build_influence_cache;
use crate::dynamics::simulate_trajectory;
use crate::error::{Error, Result};
use crate::experiments::reproduce;
use crate::report::fmt_g17;
use crate::selection::{
    brute_force_with, degree_baseline_with, fdi_assa_with, ifdi_assa_with, random_baseline_with, SelectionResult,
};
use crate::submodularity::{verify, VerifyMode, EXHAUSTIVE_CAP};

pub const ALGORITHMS: [&str; 5] = ["greedy", "greedy-improved", "brute", "random", "degree"];
pub const DEFAULT_SAMPLES: usize = 10_000;

fn fail(code: i32, err: impl std::fmt::Display) -> i32 {
    eprintln!("error: {err}");
    code
}

/// `<dir>/<stem><suffix>.csv` next to `out`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}.csv"))
}

fn write_with<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes the selection row to `out` and the greedy trace to `<stem>_trace.csv`.
pub fn cmd_select(config: &Path, algorithm: &str, seed: Option<u64>, out: &Path) -> i32 {
    if !ALGORITHMS.contains(&algorithm) {
        return fail(1, format!("unknown algorithm {algorithm:?}; expected one of {}", ALGORITHMS.join(", ")));
    }
    if algorithm == "random" && seed.is_none() {
        return fail(1, "the random baseline needs --seed");
    }
    let s = match parse_config(config) {
        Ok(s) => s,
        Err(e) => return fail(1, e),
    };
    let run = || -> Result<SelectionResult> {
        let cache = build_influence_cache(&s)?;
        match algorithm {
            "greedy" => fdi_assa_with(&s, &cache),
            "greedy-improved" => ifdi_assa_with(&s, &cache),
            "brute" => brute_force_with(&s, &cache),
            "random" => random_baseline_with(&s, &cache, seed.expect("checked above")),
            _ => degree_baseline_with(&s, &cache),
        }
    };
    let result = match run() {
        Ok(r) => r,
        Err(e) => return fail(2, e),
    };
    let written = write_with(out, |w| {
        SelectionResult::write_csv_header(&mut *w)?;
        result.write_csv_row(&mut *w)
    })
    .and_then(|_| write_with(&sibling(out, "_trace"), |w| result.write_trace_csv(w)));
    match written {
        Ok(()) => 0,
        Err(e) => fail(2, e),
    }
}

pub fn cmd_verify(config: &Path, mode: &str, samples: Option<usize>, seed: Option<u64>, out: &Path) -> i32 {
    let mode = match (mode, seed) {
        ("exhaustive", _) => VerifyMode::Exhaustive,
        ("sampled", Some(seed)) => VerifyMode::Sampled { samples: samples.unwrap_or(DEFAULT_SAMPLES), seed },
        ("sampled", None) => return fail(1, "sampled verification needs --seed"),
        (other, _) => return fail(1, format!("unknown mode {other:?}; expected exhaustive or sampled")),
    };
    let s = match parse_config(config) {
        Ok(s) => s,
        Err(e) => return fail(1, e),
    };
    if mode == VerifyMode::Exhaustive && s.n() > EXHAUSTIVE_CAP {
        return fail(1, Error::TooLarge { n: s.n(), cap: EXHAUSTIVE_CAP, what: "exhaustive verification" });
    }
    let report = match verify(&s, mode) {
        Ok(r) => r,
        Err(e) => return fail(2, e),
    };
    match write_with(out, |w| report.write_csv(w)) {
        Ok(()) => 0,
        Err(e) => fail(2, e),
    }
}

/// Inline `v1,v2,...` (commas or whitespace), or the path of a file holding
/// such a list.
pub fn parse_vector(text: &str) -> Result<DVector<f64>> {
    let path = Path::new(text);
    let body = if path.is_file() { std::fs::read_to_string(path)? } else { text.to_string() };
    let values = body
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad number {t:?} in x0"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(DVector::from_vec(values))
}

/// Attacked trajectory to `out`, clean one to `<stem>_clean.csv`, and
/// `t,diff_norm` to `<stem>_diff.csv`.
pub fn cmd_simulate(config: &Path, x0: &str, set: &str, record_every: usize, out: &Path) -> i32 {
    let s = match parse_config(config) {
        Ok(s) => s,
        Err(e) => return fail(1, e),
    };
    let prepared = (|| -> Result<_> {
        let x0 = parse_vector(x0)?;
        if x0.len() != s.n() * s.m() {
            return Err(Error::Dimension(format!("x0 has {} entries, expected n*m = {}", x0.len(), s.n() * s.m())));
        }
        let set: AgentSet = set.parse()?;
        Ok((x0, indicator(&set, s.n())?))
    })();
    let (x0, mu) = match prepared {
        Ok(v) => v,
        Err(e) => return fail(1, e),
    };
    let run = || -> Result<()> {
        let sys = s.system()?;
        let attacked = simulate_trajectory(&sys, &x0, Some((&mu, &s.strategy)), s.t_c, s.quad_step, record_every)?;
        let clean = simulate_trajectory(&sys, &x0, None, s.t_c, s.quad_step, record_every)?;
        write_with(out, |w| attacked.write_csv(w, s.m()))?;
        write_with(&sibling(out, "_clean"), |w| clean.write_csv(w, s.m()))?;
        write_with(&sibling(out, "_diff"), |w| {
            writeln!(w, "t,diff_norm")?;
            for ((t, xa), xc) in attacked.times.iter().zip(&attacked.states).zip(&clean.states) {
                writeln!(w, "{},{}", fmt_g17(*t), fmt_g17((xa - xc).norm()))?;
            }
            Ok(())
        })
    };
    match run() {
        Ok(()) => 0,
        Err(e) => fail(2, e),
    }
}

pub fn cmd_reproduce(preset: &str, out_dir: &Path) -> i32 {
    match reproduce(preset, out_dir) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e @ Error::InvalidArgument(_)) => fail(1, e),
        Err(e) => fail(2, e),
    }
}
