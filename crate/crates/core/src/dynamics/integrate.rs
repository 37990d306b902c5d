//! Fixed-step classical Runge–Kutta for forced linear systems `ẋ = Mx + u(t)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::report::fmt_g17;

/// Sampled solution of a linear ODE.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&DVector<f64>> {
        self.states.last()
    }

    /// Block of agent `id` (1-based) at sample `k`.
    pub fn agent_state(&self, k: usize, id: usize, m: usize) -> DVector<f64> {
        self.states[k].rows((id - 1) * m, m).into_owned()
    }

    /// `t,agent,comp_1..comp_m`, one row per (time, agent).
    pub fn write_csv<W: Write>(&self, mut out: W, m: usize) -> Result<()> {
        let comps: Vec<String> = (1..=m).map(|c| format!("comp_{c}")).collect();
        writeln!(out, "t,agent,{}", comps.join(","))?;
        for (t, x) in self.times.iter().zip(&self.states) {
            for agent in 0..x.len() / m {
                let vals: Vec<String> = (0..m).map(|c| fmt_g17(x[agent * m + c])).collect();
                writeln!(out, "{},{},{}", fmt_g17(*t), agent + 1, vals.join(","))?;
            }
        }
        Ok(())
    }
}

/// Step count that lands exactly on `t_end`; the final step is shortened when
/// `t_end` is not a multiple of `step`.
pub(crate) fn step_count(t_end: f64, step: f64) -> usize {
    let q = t_end / step;
    if (q - q.round()).abs() < 1e-9 {
        q.round() as usize
    } else {
        q.ceil() as usize
    }
}

/// Integrates `ẋ = system·x + forcing(t)` from 0 to `t_end` with RK4.
///
/// `forcing` returns `None` for an unforced right-hand side. The observer is
/// called at t = 0, after every `record_every`-th step, and at `t_end`.
pub fn rk4_linear<F, O>(
    system: &DMatrix<f64>,
    x0: &DVector<f64>,
    forcing: F,
    t_end: f64,
    step: f64,
    record_every: usize,
    mut observer: O,
) -> Result<DVector<f64>>
where
    F: Fn(f64) -> Result<Option<DVector<f64>>>,
    O: FnMut(f64, &DVector<f64>),
{
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidTime(format!("step must be positive, got {step}")));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidTime(format!("t_end must be positive, got {t_end}")));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if x0.len() != system.nrows() {
        return Err(Error::Dimension(format!(
            "state has length {} but system is {}x{}",
            x0.len(),
            system.nrows(),
            system.ncols()
        )));
    }
    let record_every = record_every.max(1);
    let rhs = |t: f64, x: &DVector<f64>| -> Result<DVector<f64>> {
        let mut d = system * x;
        if let Some(u) = forcing(t)? {
            d += u;
        }
        Ok(d)
    };

    let steps = step_count(t_end, step);
    let mut x = x0.clone();
    observer(0.0, &x);
    for k in 0..steps {
        let t = k as f64 * step;
        let h = if k + 1 == steps { t_end - t } else { step };
        let k1 = rhs(t, &x)?;
        let k2 = rhs(t + 0.5 * h, &(&x + &k1 * (0.5 * h)))?;
        let k3 = rhs(t + 0.5 * h, &(&x + &k2 * (0.5 * h)))?;
        let k4 = rhs(t + h, &(&x + &k3 * h))?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if (k + 1) % record_every == 0 || k + 1 == steps {
            let t_next = if k + 1 == steps { t_end } else { t + h };
            observer(t_next, &x);
        }
    }
    Ok(x)
}
