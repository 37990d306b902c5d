//! Parameter sets of the reference experiments.

use nalgebra::DVector;

use crate::attack::{AttackScenario, AttackStrategy, CostModel};
use crate::dynamics::{LocalDynamics, DEFAULT_STEP};
use crate::error::{Error, Result};
use crate::graph::Graph;

pub const REFERENCE_DBAR: f64 = 0.25;
pub const REFERENCE_HORIZON: f64 = 30.0;
pub const REFERENCE_BUDGET: f64 = 2.0;
/// Slack magnitude and energy bounds used wherever the experiment sets none.
pub const SLACK_BOUND: f64 = 1e6;
pub const GEOMETRIC_AGENTS: usize = 50;
pub const GEOMETRIC_WIDTH: f64 = 100.0;
pub const GEOMETRIC_RADIUS: f64 = 15.0;
pub const GEOMETRIC_BASE_SEED: u64 = 42;

/// Position/velocity agents.
pub fn two_dim_dynamics() -> LocalDynamics {
    LocalDynamics::from_rows(2, &[-0.5, 0.0, 1.0, -1.0], &[0.1, 0.1, 0.5, 0.2]).expect("valid preset")
}

/// Pitch-rate / pitch / depth vehicle model.
pub fn three_dim_dynamics() -> LocalDynamics {
    #[rustfmt::skip]
    let a = [
        -0.4037, -0.2052, 0.0,
        -0.684, -0.8825, 0.0,
        -0.1175, -0.2875, -0.3,
    ];
    #[rustfmt::skip]
    let b = [
        0.02394, 0.0, 0.0,
        0.0, 0.01371, 0.0,
        0.0, 0.0, -0.00146,
    ];
    LocalDynamics::from_rows(3, &a, &b).expect("valid preset")
}

pub fn two_dim_k() -> Vec<f64> {
    vec![0.25, 0.1]
}

pub fn three_dim_k() -> Vec<f64> {
    vec![0.25, 0.1, 0.2]
}

pub fn reference_initial_state() -> DVector<f64> {
    DVector::from_vec(vec![-7.0, -3.0, -2.0, -2.0, 0.0, 1.0, 1.0, -1.0, 2.0, 3.0, 6.0, 2.0])
}

/// Six agents, degrees `[1, 3, 2, 2, 3, 1]`.
pub fn fixed_graph() -> Graph {
    Graph::explicit(6, &[(1, 2), (2, 3), (2, 4), (3, 5), (4, 5), (5, 6)]).expect("valid preset")
}

/// Path of six 2-D agents, `d̄ = 0.25`, unit costs, `Ω = 2`.
pub fn reference_scenario(strategy: AttackStrategy, t_c: f64) -> AttackScenario {
    AttackScenario {
        graph: Graph::path(6).expect("valid preset"),
        local: two_dim_dynamics(),
        dbar: REFERENCE_DBAR,
        t_c,
        strategy,
        costs: CostModel::Uniform { c: 1.0 },
        budget: REFERENCE_BUDGET,
        u_bar: SLACK_BOUND,
        g_bar: SLACK_BOUND,
        quad_step: DEFAULT_STEP,
    }
}

/// Strategy family by name with the 2-D gain vector; `gauss` uses `seed`.
pub fn two_dim_strategy(kind: &str, seed: u64) -> Result<AttackStrategy> {
    strategy_with_k(kind, two_dim_k(), seed)
}

pub fn strategy_with_k(kind: &str, k: Vec<f64>, seed: u64) -> Result<AttackStrategy> {
    Ok(match kind {
        "constant" => AttackStrategy::Constant { k },
        "cos" => AttackStrategy::Cosine { k },
        "sin" => AttackStrategy::Sine { k },
        "expdecay" => AttackStrategy::ExpDecay { k },
        "gauss" => AttackStrategy::GaussianNoise { k, seed, step: DEFAULT_STEP },
        other => return Err(Error::InvalidArgument(format!("unknown strategy {other:?}"))),
    })
}

/// Costs 1 at the path ends and 2 inside, `Ω = 6`.
pub fn example2_scenario() -> AttackScenario {
    reference_scenario(AttackStrategy::Constant { k: two_dim_k() }, REFERENCE_HORIZON)
        .with_costs(CostModel::Explicit { values: vec![1.0, 2.0, 2.0, 2.0, 2.0, 1.0] })
        .with_budget(6.0)
}

/// Connected 50-vehicle geometric layout with the 3-D model.
#[derive(Clone, Debug)]
pub struct GeometricPreset {
    pub scenario: AttackScenario,
    pub seed: u64,
    pub positions: Vec<[f64; 2]>,
}

/// Scans seeds upward from 42 until the layout is connected; `d̄` is capped
/// at `0.9 / d_max` so the coupling range holds.
pub fn geometric_preset(costs: CostModel) -> Result<GeometricPreset> {
    for seed in GEOMETRIC_BASE_SEED..GEOMETRIC_BASE_SEED + 10_000 {
        let geo = Graph::random_geometric(GEOMETRIC_AGENTS, GEOMETRIC_WIDTH, GEOMETRIC_RADIUS, seed)?;
        if !geo.graph.is_connected() {
            continue;
        }
        let dbar = REFERENCE_DBAR.min(0.9 / geo.graph.max_degree() as f64);
        let scenario = AttackScenario {
            graph: geo.graph,
            local: three_dim_dynamics(),
            dbar,
            t_c: REFERENCE_HORIZON,
            strategy: AttackStrategy::Constant { k: three_dim_k() },
            costs: costs.clone(),
            budget: REFERENCE_BUDGET,
            u_bar: SLACK_BOUND,
            g_bar: SLACK_BOUND,
            quad_step: DEFAULT_STEP,
        };
        return Ok(GeometricPreset { scenario, seed, positions: geo.positions });
    }
    Err(Error::Precondition("no connected geometric layout found".into()))
}
