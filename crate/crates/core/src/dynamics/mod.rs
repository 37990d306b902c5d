//! Global consensus dynamics `ẋ = (I ⊗ A − d̄ L ⊗ B) x`, Lemma-1 style
//! consensus checks, and trajectory simulation.

mod expm;
mod integrate;

pub use expm::{exp_integral, matrix_exponential};
pub use integrate::{rk4_linear, Trajectory};
pub(crate) use integrate::step_count;

use nalgebra::{Complex, DMatrix, DVector};

use crate::attack::{AttackStrategy, IndicatorVector};
use crate::error::{Error, Result};
use crate::graph::{spectral_decompose, Graph, SpectralData};

/// Default RK4 step in time units.
pub const DEFAULT_STEP: f64 = 1e-3;

const RANK_TOL: f64 = 1e-8;
const ZERO_EIG_TOL: f64 = 1e-8;
const KERNEL_BLOCK_TOL: f64 = 1e-8;

/// Local agent model `ẋᵢ = A xᵢ + B uᵢ`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalDynamics {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl LocalDynamics {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || !b.is_square() || a.nrows() != b.nrows() || a.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "A is {}x{}, B is {}x{}; both must be m x m with m >= 1",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(LocalDynamics { a, b })
    }

    /// Builds from row-major slices.
    pub fn from_rows(m: usize, a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != m * m || b.len() != m * m {
            return Err(Error::Dimension(format!(
                "expected {} entries per matrix, got {} and {}",
                m * m,
                a.len(),
                b.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(m, m, a), DMatrix::from_row_slice(m, m, b))
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }
}

/// The stacked system matrix together with the data it was built from.
#[derive(Clone, Debug)]
pub struct GlobalSystem {
    pub matrix: DMatrix<f64>,
    pub n: usize,
    pub m: usize,
    pub dbar: f64,
    pub laplacian: DMatrix<f64>,
    pub spectral: SpectralData,
}

impl GlobalSystem {
    /// `W_ij = v_ij · d̄`.
    pub fn weight_matrix(&self) -> DMatrix<f64> {
        let adj = DMatrix::from_fn(self.n, self.n, |i, j| {
            if i != j && self.laplacian[(i, j)] != 0.0 {
                1.0
            } else {
                0.0
            }
        });
        adj * self.dbar
    }
}

/// `I ⊗ A − d̄ L ⊗ B` without range checks.
pub fn system_matrix(local: &LocalDynamics, laplacian: &DMatrix<f64>, dbar: f64) -> DMatrix<f64> {
    let n = laplacian.nrows();
    DMatrix::<f64>::identity(n, n).kronecker(local.a()) - laplacian.kronecker(local.b()) * dbar
}

pub fn build_global(local: &LocalDynamics, g: &Graph, dbar: f64) -> Result<GlobalSystem> {
    let dmax = g.max_degree();
    let limit = if dmax == 0 { f64::INFINITY } else { 1.0 / dmax as f64 };
    if !(dbar > 0.0 && dbar < limit) {
        return Err(Error::DbarOutOfRange { dbar, limit });
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let laplacian = g.laplacian();
    let spectral = spectral_decompose(&laplacian)?;
    Ok(GlobalSystem {
        matrix: system_matrix(local, &laplacian, dbar),
        n: g.n(),
        m: local.m(),
        dbar,
        laplacian,
        spectral,
    })
}

/// Outcome of the three consensus conditions on a system matrix.
#[derive(Clone, Debug)]
pub struct ConsensusReport {
    pub holds: bool,
    pub rank_condition: bool,
    pub spectrum_condition: bool,
    pub kernel_condition: bool,
    pub sigma: Vec<Complex<f64>>,
    /// Common m-block of the first kernel basis vector; the zero vector when
    /// the system matrix is nonsingular. `None` unless `holds`.
    pub consensus_value: Option<DVector<f64>>,
    kernel: DMatrix<f64>,
    left_kernel: DMatrix<f64>,
}

impl ConsensusReport {
    pub fn kernel_dim(&self) -> usize {
        self.kernel.ncols()
    }

    /// `lim_{t→∞} e^{Mt} x0`, the projection of `x0` onto the kernel along
    /// the range. `None` unless consensus holds.
    pub fn consensus_limit(&self, x0: &DVector<f64>) -> Option<DVector<f64>> {
        if !self.holds {
            return None;
        }
        if self.kernel.ncols() == 0 {
            return Some(DVector::zeros(x0.len()));
        }
        let gram = self.left_kernel.transpose() * &self.kernel;
        let coeffs = gram.lu().solve(&(self.left_kernel.transpose() * x0))?;
        Some(&self.kernel * coeffs)
    }
}

fn rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * top).count()
}

/// Orthonormal basis (columns) of `ker(m)`, from the right singular vectors
/// whose singular values fall below the rank threshold.
fn kernel_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let k = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let top = svd.singular_values.max();
    let mut cols = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if top == 0.0 || *s <= RANK_TOL * top {
            cols.push(v_t.row(i).transpose());
        }
    }
    // Thin SVD of a square matrix returns k singular values, so this is complete.
    if cols.is_empty() {
        DMatrix::zeros(k, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Evaluates the consensus conditions on a raw system matrix of `n` agents
/// with `m`-dimensional states.
pub fn consensus_conditions(matrix: &DMatrix<f64>, n: usize, m: usize) -> ConsensusReport {
    let rank_condition = rank(matrix) == rank(&(matrix * matrix));
    let sigma: Vec<Complex<f64>> = matrix.clone().complex_eigenvalues().iter().copied().collect();
    let spectrum_condition = sigma.iter().all(|s| s.norm() <= ZERO_EIG_TOL || s.re < 0.0);

    let kernel = kernel_basis(matrix);
    let left_kernel = kernel_basis(&matrix.transpose());
    let kernel_condition = kernel.column_iter().all(|xi| {
        let first = xi.rows(0, m);
        (1..n).all(|i| (xi.rows(i * m, m) - first).amax() <= KERNEL_BLOCK_TOL)
    });
    let holds = rank_condition && spectrum_condition && kernel_condition;
    let consensus_value = holds.then(|| {
        if kernel.ncols() == 0 {
            DVector::zeros(m)
        } else {
            kernel.column(0).rows(0, m).into_owned()
        }
    });
    ConsensusReport {
        holds,
        rank_condition,
        spectrum_condition,
        kernel_condition,
        sigma,
        consensus_value,
        kernel,
        left_kernel,
    }
}

pub fn check_consensus_conditions(sys: &GlobalSystem) -> ConsensusReport {
    consensus_conditions(&sys.matrix, sys.n, sys.m)
}

/// `ln(1/tol) / |Re σ_slow|`, where `σ_slow` is the decaying eigenvalue
/// closest to the imaginary axis. Eigenvalues within 1e-8 of zero are the
/// consensus mode and are skipped.
pub fn estimate_convergence_time(sys: &GlobalSystem, tol: f64) -> Result<f64> {
    if !(tol > 0.0 && tol <= 1.0) {
        return Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1], got {tol}")));
    }
    let report = check_consensus_conditions(sys);
    if !report.holds {
        return Err(Error::NoConsensus);
    }
    Ok(convergence_time_from_spectrum(&report.sigma, tol))
}

pub(crate) fn convergence_time_from_spectrum(sigma: &[Complex<f64>], tol: f64) -> f64 {
    let slowest = sigma
        .iter()
        .filter(|s| s.norm() > ZERO_EIG_TOL && s.re < 0.0)
        .map(|s| s.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if slowest == f64::NEG_INFINITY {
        return 0.0;
    }
    (1.0 / tol).ln() / slowest.abs()
}

/// RK4 simulation of `ẋ = Mx + μ ⊗ θ(t)`, or `ẋ = Mx` without an attack.
pub fn simulate_trajectory(
    sys: &GlobalSystem,
    x0: &DVector<f64>,
    attack: Option<(&IndicatorVector, &AttackStrategy)>,
    t_end: f64,
    step: f64,
    record_every: usize,
) -> Result<Trajectory> {
    simulate_matrix(&sys.matrix, sys.m, x0, attack, t_end, step, record_every)
}

pub(crate) fn simulate_matrix(
    matrix: &DMatrix<f64>,
    m: usize,
    x0: &DVector<f64>,
    attack: Option<(&IndicatorVector, &AttackStrategy)>,
    t_end: f64,
    step: f64,
    record_every: usize,
) -> Result<Trajectory> {
    if let Some((mu, _)) = attack {
        if mu.len() * m != matrix.nrows() {
            return Err(Error::Dimension(format!(
                "indicator of length {} does not match {} agents",
                mu.len(),
                matrix.nrows() / m
            )));
        }
    }
    let mut traj = Trajectory::default();
    rk4_linear(
        matrix,
        x0,
        |t| match attack {
            Some((mu, strategy)) => Ok(Some(mu.kron(&strategy.theta_at(t)?))),
            None => Ok(None),
        },
        t_end,
        step,
        record_every,
        |t, x| {
            traj.times.push(t);
            traj.states.push(x.clone());
        },
    )?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::AttackStrategy;
    use crate::presets::two_dim_dynamics;

    #[test]
    fn scalar_system_expansion() {
        let local = LocalDynamics::from_rows(1, &[-1.0], &[1.0]).unwrap();
        let sys = build_global(&local, &Graph::path(2).unwrap(), 0.25).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[-1.25, 0.25, 0.25, -1.25]);
        assert!((sys.matrix.clone() - want).amax() < 1e-15);
        let w = sys.weight_matrix();
        assert_eq!(w[(0, 1)], 0.25);
        assert_eq!(w[(0, 0)], 0.0);
    }

    #[test]
    fn reference_system_is_hurwitz() {
        let sys = build_global(&two_dim_dynamics(), &Graph::path(6).unwrap(), 0.25).unwrap();
        let report = check_consensus_conditions(&sys);
        assert!(report.sigma.iter().all(|s| s.re < 0.0));
        assert!(report.holds);
        assert_eq!(report.kernel_dim(), 0);
        assert_eq!(report.consensus_value.unwrap(), DVector::zeros(2));
    }

    #[test]
    fn dbar_bound_and_connectivity() {
        let local = two_dim_dynamics();
        assert!(matches!(
            build_global(&local, &Graph::path(6).unwrap(), 0.6),
            Err(Error::DbarOutOfRange { .. })
        ));
        assert!(build_global(&local, &Graph::path(6).unwrap(), 0.0).is_err());
        let split = Graph::explicit(4, &[(1, 2), (3, 4)]).unwrap();
        assert!(matches!(build_global(&local, &split, 0.25), Err(Error::Disconnected)));
    }

    #[test]
    fn pure_laplacian_consensus() {
        let local = LocalDynamics::from_rows(1, &[0.0], &[1.0]).unwrap();
        let sys = build_global(&local, &Graph::path(6).unwrap(), 0.25).unwrap();
        let report = check_consensus_conditions(&sys);
        assert!(report.holds, "{report:?}");
        assert_eq!(report.kernel_dim(), 1);
        let x0 = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let lim = report.consensus_limit(&x0).unwrap();
        assert!(lim.iter().all(|v| (v - 3.5).abs() < 1e-10));
    }

    #[test]
    fn identity_fails_spectrum() {
        let report = consensus_conditions(&DMatrix::identity(4, 4), 2, 2);
        assert!(!report.spectrum_condition);
        assert!(!report.holds);
        assert!(report.consensus_value.is_none());
    }

    #[test]
    fn zero_matrix_fails_kernel_shape() {
        let report = consensus_conditions(&DMatrix::zeros(3, 3), 3, 1);
        assert!(report.spectrum_condition);
        assert!(!report.kernel_condition);
    }

    #[test]
    fn convergence_time_estimates() {
        let sigma = [Complex::new(-0.3, 0.0), Complex::new(-1.0, 2.0), Complex::new(0.0, 0.0)];
        assert!((convergence_time_from_spectrum(&sigma, (-9.0f64).exp()) - 30.0).abs() < 1e-12);
        assert_eq!(convergence_time_from_spectrum(&sigma, 1.0), 0.0);
        let sys = build_global(&two_dim_dynamics(), &Graph::path(6).unwrap(), 0.25).unwrap();
        assert!(estimate_convergence_time(&sys, 0.0).is_err());
        assert!(estimate_convergence_time(&sys, -1.0).is_err());
        assert!(estimate_convergence_time(&sys, 0.01).unwrap() > 0.0);
    }

    #[test]
    fn frozen_system_stays_put() {
        let local = LocalDynamics::from_rows(1, &[0.0], &[0.0]).unwrap();
        let sys = build_global(&local, &Graph::path(3).unwrap(), 0.25).unwrap();
        let x0 = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let traj = simulate_trajectory(&sys, &x0, None, 1.0, 0.01, 10).unwrap();
        assert!(traj.states.iter().all(|x| x == &x0));
    }

    #[test]
    fn unattacked_matches_exponential() {
        let sys = build_global(&two_dim_dynamics(), &Graph::path(6).unwrap(), 0.25).unwrap();
        let x0 = crate::presets::reference_initial_state();
        let traj = simulate_trajectory(&sys, &x0, None, 5.0, DEFAULT_STEP, 1000).unwrap();
        let exact = matrix_exponential(&sys.matrix, 5.0).unwrap() * &x0;
        let got = traj.last_state().unwrap();
        assert!((got - &exact).norm() / exact.norm() < 1e-6);
    }

    #[test]
    fn attacked_dimension_mismatch() {
        let sys = build_global(&two_dim_dynamics(), &Graph::path(6).unwrap(), 0.25).unwrap();
        let mu = IndicatorVector::from_bits(vec![true; 5]);
        let strat = AttackStrategy::Constant { k: vec![1.0, 0.0] };
        let x0 = DVector::zeros(12);
        assert!(simulate_trajectory(&sys, &x0, Some((&mu, &strat)), 1.0, 0.1, 1).is_err());
    }

    #[test]
    fn trajectory_csv_layout() {
        let local = LocalDynamics::from_rows(1, &[0.0], &[0.0]).unwrap();
        let sys = build_global(&local, &Graph::path(2).unwrap(), 0.25).unwrap();
        let traj = simulate_trajectory(&sys, &DVector::from_vec(vec![1.0, 2.0]), None, 0.2, 0.1, 1).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, 1).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,agent,comp_1");
        assert_eq!(lines[1], "0,1,1");
        assert_eq!(lines[2], "0,2,2");
        assert_eq!(lines.len(), 1 + 3 * 2);
    }
}
