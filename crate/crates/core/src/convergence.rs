//! Convergence error `f(A) = ‖κ(A, t_c)‖` by per-agent influence columns, by
//! the spectral closed form, and by direct integration.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::attack::{indicator, AgentSet, AttackScenario, AttackStrategy};
use crate::config::influence_fingerprint;
use crate::dynamics::{exp_integral, rk4_linear, GlobalSystem};
use crate::error::{Error, Result};
use crate::graph::SpectralData;

/// Forced response of each single agent at `t_c`; `f(A) = ‖Σ_{i∈A} g_i‖`.
#[derive(Clone, Debug)]
pub struct InfluenceCache {
    columns: Vec<DVector<f64>>,
    /// Hash of the scenario fields the columns depend on.
    fingerprint: String,
}

impl InfluenceCache {
    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// `g_id`, 1-based.
    pub fn column(&self, id: usize) -> &DVector<f64> {
        &self.columns[id - 1]
    }

    pub fn columns(&self) -> &[DVector<f64>] {
        &self.columns
    }

    /// `κ(A, t_c) = Σ_{i∈A} g_i`.
    pub fn aggregate(&self, set: &AgentSet) -> Result<DVector<f64>> {
        set.check_range(self.n())?;
        let dim = self.columns.first().map_or(0, |c| c.len());
        let mut acc = DVector::zeros(dim);
        for id in set.iter() {
            acc += &self.columns[id - 1];
        }
        Ok(acc)
    }

    pub fn is_for(&self, s: &AttackScenario) -> bool {
        influence_fingerprint(s) == self.fingerprint
    }
}

/// Builds `g_1..g_n`. Constant strategies use `φ(M)(e_i ⊗ K)` exactly; other
/// strategies integrate each column with RK4 at `quad_step`.
pub fn build_influence_cache(s: &AttackScenario) -> Result<InfluenceCache> {
    s.ensure_valid()?;
    let sys = s.system()?;
    let columns = match &s.strategy {
        AttackStrategy::Constant { k } => constant_columns(&sys, k, s.t_c)?,
        strategy => integrated_columns(&sys, strategy, s.t_c, s.quad_step)?,
    };
    Ok(InfluenceCache { columns, fingerprint: influence_fingerprint(s) })
}

/// Same as [`build_influence_cache`] but always through the RK4 branch.
pub fn build_influence_cache_integrated(s: &AttackScenario) -> Result<InfluenceCache> {
    s.ensure_valid()?;
    let sys = s.system()?;
    let columns = integrated_columns(&sys, &s.strategy, s.t_c, s.quad_step)?;
    Ok(InfluenceCache { columns, fingerprint: influence_fingerprint(s) })
}

fn constant_columns(sys: &GlobalSystem, k: &[f64], t_c: f64) -> Result<Vec<DVector<f64>>> {
    let phi = exp_integral(&sys.matrix, t_c)?;
    let k = DVector::from_column_slice(k);
    let m = sys.m;
    Ok((0..sys.n).map(|i| phi.columns(i * m, m) * &k).collect())
}

fn integrated_columns(
    sys: &GlobalSystem,
    strategy: &AttackStrategy,
    t_c: f64,
    step: f64,
) -> Result<Vec<DVector<f64>>> {
    let (n, m) = (sys.n, sys.m);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let zero = DVector::zeros(n * m);
            rk4_linear(
                &sys.matrix,
                &zero,
                |t| {
                    let mut u = DVector::zeros(n * m);
                    u.rows_mut(i * m, m).copy_from(&strategy.theta_at(t)?);
                    Ok(Some(u))
                },
                t_c,
                step,
                usize::MAX,
                |_, _| {},
            )
        })
        .collect()
}

/// `f(A) = ‖Σ_{i∈A} g_i‖`.
pub fn conv_error(cache: &InfluenceCache, set: &AgentSet) -> Result<f64> {
    Ok(cache.aggregate(set)?.norm())
}

/// Integrates the full `κ̇ = Mκ + μ^A ⊗ θ(t)` at half the quadrature step.
pub fn conv_error_oracle(s: &AttackScenario, set: &AgentSet) -> Result<f64> {
    Ok(oracle_response(s, set)?.norm())
}

/// `κ(A, t_c)` from the oracle integration.
pub fn oracle_response(s: &AttackScenario, set: &AgentSet) -> Result<DVector<f64>> {
    s.ensure_valid()?;
    let mu = indicator(set, s.n())?;
    let zero = DVector::zeros(s.n() * s.m());
    if set.is_empty() {
        return Ok(zero);
    }
    let sys = s.system()?;
    rk4_linear(
        &sys.matrix,
        &zero,
        |t| Ok(Some(mu.kron(&s.strategy.theta_at(t)?))),
        s.t_c,
        s.quad_step / 2.0,
        usize::MAX,
        |_, _| {},
    )
}

/// `φ(A − λ_k d̄ B)` for the ascending Laplacian eigenvalues, with block 1
/// taken as `φ(A)`.
#[derive(Clone, Debug)]
pub struct MhatBlocks {
    pub blocks: Vec<DMatrix<f64>>,
}

impl MhatBlocks {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

pub fn mhat_blocks(s: &AttackScenario) -> Result<MhatBlocks> {
    s.ensure_valid()?;
    let sys = s.system()?;
    blocks_for(s, &sys.spectral)
}

fn blocks_for(s: &AttackScenario, spectral: &SpectralData) -> Result<MhatBlocks> {
    let (a, b) = (s.local.a(), s.local.b());
    let blocks = spectral
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            if k == 0 {
                exp_integral(a, s.t_c)
            } else {
                exp_integral(&(a - b * (lambda * s.dbar)), s.t_c)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MhatBlocks { blocks })
}

/// Spectral form of a constant-strategy scenario: agent `i` contributes
/// `r_i = M̂ (Uᵀe_i ⊗ K)` and `κ̂(A) = Σ_{i∈A} r_i`.
#[derive(Clone, Debug)]
pub struct SpectralForm {
    responses: Vec<DVector<f64>>,
}

impl SpectralForm {
    pub fn new(s: &AttackScenario) -> Result<Self> {
        let sys = s.system()?;
        Self::with_spectral(s, &sys.spectral)
    }

    /// Uses the given orthonormal eigenbasis of the Laplacian, whatever its
    /// column signs.
    pub fn with_spectral(s: &AttackScenario, spectral: &SpectralData) -> Result<Self> {
        let k = match &s.strategy {
            AttackStrategy::Constant { k } => DVector::from_column_slice(k),
            _ => return Err(Error::UnsupportedStrategy),
        };
        s.ensure_valid()?;
        let blocks = blocks_for(s, spectral)?;
        let phi_k: Vec<DVector<f64>> = blocks.blocks.iter().map(|p| p * &k).collect();
        let u = &spectral.eigvecs;
        let (n, m) = (s.n(), s.m());
        let responses = (0..n)
            .map(|i| {
                let mut r = DVector::zeros(n * m);
                for (kk, pk) in phi_k.iter().enumerate() {
                    r.rows_mut(kk * m, m).copy_from(&(pk * u[(i, kk)]));
                }
                r
            })
            .collect();
        Ok(SpectralForm { responses })
    }

    pub fn n(&self) -> usize {
        self.responses.len()
    }

    pub fn response(&self, id: usize) -> &DVector<f64> {
        &self.responses[id - 1]
    }

    /// `M̂ (Uᵀμ^A ⊗ K)`.
    pub fn aggregate(&self, set: &AgentSet) -> Result<DVector<f64>> {
        set.check_range(self.n())?;
        let dim = self.responses.first().map_or(0, |c| c.len());
        let mut acc = DVector::zeros(dim);
        for id in set.iter() {
            acc += &self.responses[id - 1];
        }
        Ok(acc)
    }

    pub fn error(&self, set: &AgentSet) -> Result<f64> {
        Ok(self.aggregate(set)?.norm())
    }

    /// `(v_A ⊗ K)ᵀ M̂ᵀM̂ (v_B ⊗ K)`.
    pub fn h(&self, a: &AgentSet, b: &AgentSet) -> Result<f64> {
        Ok(self.aggregate(a)?.dot(&self.aggregate(b)?))
    }
}

/// `‖M̂ (Uᵀμ^A ⊗ K)‖`; constant strategies only.
pub fn closed_form_error(s: &AttackScenario, set: &AgentSet) -> Result<f64> {
    SpectralForm::new(s)?.error(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::CostModel;
    use crate::dynamics::LocalDynamics;
    use crate::graph::Graph;
    use crate::presets::{reference_scenario, two_dim_k};

    fn constant() -> AttackScenario {
        reference_scenario(AttackStrategy::Constant { k: two_dim_k() }, 30.0)
    }

    #[test]
    fn scalar_single_agent() {
        let s = AttackScenario {
            graph: Graph::path(1).unwrap(),
            local: LocalDynamics::from_rows(1, &[-1.0], &[1.0]).unwrap(),
            dbar: 0.5,
            t_c: 30.0,
            strategy: AttackStrategy::Constant { k: vec![1.0] },
            costs: CostModel::Uniform { c: 1.0 },
            budget: 1.0,
            u_bar: 10.0,
            g_bar: 100.0,
            quad_step: 1e-3,
        };
        let cache = build_influence_cache(&s).unwrap();
        assert!((cache.column(1)[0] - (1.0 - (-30.0f64).exp())).abs() < 1e-9);
    }

    #[test]
    fn empty_set_is_zero() {
        let s = constant();
        let cache = build_influence_cache(&s).unwrap();
        assert_eq!(conv_error(&cache, &AgentSet::new()).unwrap(), 0.0);
        assert_eq!(conv_error_oracle(&s, &AgentSet::new()).unwrap(), 0.0);
        assert_eq!(closed_form_error(&s, &AgentSet::new()).unwrap(), 0.0);
    }

    #[test]
    fn path_reversal_symmetry() {
        let cache = build_influence_cache(&constant()).unwrap();
        assert!((cache.column(1).norm() - cache.column(6).norm()).abs() < 1e-9);
        assert!((cache.column(2).norm() - cache.column(5).norm()).abs() < 1e-9);
    }

    #[test]
    fn constant_branch_matches_integration_branch() {
        let s = constant();
        let exact = build_influence_cache(&s).unwrap();
        let rk4 = build_influence_cache_integrated(&s).unwrap();
        for i in 1..=6 {
            assert!((exact.column(i) - rk4.column(i)).amax() < 1e-6);
        }
    }

    #[test]
    fn two_agent_reference_value() {
        let cache = build_influence_cache(&constant()).unwrap();
        let f = conv_error(&cache, &AgentSet::from([1, 2])).unwrap();
        assert!((f - 1.0315).abs() < 0.005, "{f}");
    }

    #[test]
    fn out_of_range_set() {
        let cache = build_influence_cache(&constant()).unwrap();
        assert!(conv_error(&cache, &AgentSet::from([7])).is_err());
    }

    #[test]
    fn mhat_blocks_shape_and_limit() {
        let s = constant();
        let blocks = mhat_blocks(&s).unwrap();
        assert_eq!(blocks.len(), 6);
        assert!((&blocks.blocks[0] - exp_integral(s.local.a(), 30.0).unwrap()).amax() == 0.0);
        let sys = s.system().unwrap();
        for k in 1..6 {
            let lam = sys.spectral.eigenvalues[k];
            let shifted = s.local.a() - s.local.b() * (lam * s.dbar);
            let eig = shifted.complex_eigenvalues();
            let slowest = eig.iter().map(|z| -z.re).fold(f64::INFINITY, f64::min);
            if slowest >= 0.3 {
                let limit = -shifted.try_inverse().unwrap();
                assert!((&blocks.blocks[k] - limit).amax() < 1e-3, "block {k}");
            }
        }
    }

    #[test]
    fn closed_form_requires_constant() {
        let s = reference_scenario(AttackStrategy::Sine { k: two_dim_k() }, 30.0);
        assert!(matches!(closed_form_error(&s, &AgentSet::from([1])), Err(Error::UnsupportedStrategy)));
    }

    #[test]
    fn cache_is_tied_to_scenario() {
        let s = constant();
        let cache = build_influence_cache(&s).unwrap();
        assert!(cache.is_for(&s));
        assert!(!cache.is_for(&s.with_horizon(60.0)));
    }
}
