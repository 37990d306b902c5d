//! JSON scenario files: parsing, canonical emission and fingerprints.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attack::{AttackScenario, AttackStrategy, CostModel};
use crate::dynamics::LocalDynamics;
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub graph: GraphConfig,
    pub dynamics: DynamicsConfig,
    pub dbar: f64,
    pub t_c: f64,
    pub strategy: StrategyConfig,
    pub costs: CostsConfig,
    pub budget: f64,
    pub u_bar: f64,
    pub g_bar: f64,
    pub quad_step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    #[serde(rename = "type")]
    pub kind: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub kind: String,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

fn required<T: Clone>(value: &Option<T>, key: &str) -> Result<T> {
    value.clone().ok_or_else(|| Error::Config(format!("missing key \"{key}\"")))
}

fn keyed<T>(key: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Config(format!("{key}: {e}")))
}

impl GraphConfig {
    fn build(&self) -> Result<Graph> {
        keyed("graph", match self.kind.as_str() {
            "path" => Graph::path(self.n),
            "cycle" => Graph::cycle(self.n),
            "explicit" => Graph::explicit(self.n, &required(&self.edges, "graph.edges")?),
            "geometric" => Graph::random_geometric(
                self.n,
                required(&self.width, "graph.width")?,
                required(&self.radius, "graph.radius")?,
                required(&self.seed, "graph.seed")?,
            )
            .map(|g| g.graph),
            other => Err(Error::Config(format!("unknown graph.type {other:?}"))),
        })
    }
}

impl StrategyConfig {
    fn build(&self) -> Result<AttackStrategy> {
        let k = || required(&self.k, "strategy.K");
        let strategy = match self.kind.as_str() {
            "constant" => AttackStrategy::Constant { k: k()? },
            "cos" => AttackStrategy::Cosine { k: k()? },
            "sin" => AttackStrategy::Sine { k: k()? },
            "expdecay" => AttackStrategy::ExpDecay { k: k()? },
            "sampled" => AttackStrategy::Sampled {
                times: required(&self.times, "strategy.times")?,
                values: required(&self.values, "strategy.values")?,
            },
            "gauss" => AttackStrategy::GaussianNoise {
                k: k()?,
                seed: required(&self.seed, "strategy.seed")?,
                step: required(&self.step, "strategy.step")?,
            },
            other => return Err(Error::Config(format!("unknown strategy.kind {other:?}"))),
        };
        keyed("strategy", strategy.check())?;
        Ok(strategy)
    }

    fn from_strategy(s: &AttackStrategy) -> Self {
        let mut cfg = StrategyConfig {
            kind: s.name().to_string(),
            k: None,
            seed: None,
            step: None,
            times: None,
            values: None,
        };
        match s {
            AttackStrategy::Constant { k }
            | AttackStrategy::Cosine { k }
            | AttackStrategy::Sine { k }
            | AttackStrategy::ExpDecay { k } => cfg.k = Some(k.clone()),
            AttackStrategy::GaussianNoise { k, seed, step } => {
                cfg.k = Some(k.clone());
                cfg.seed = Some(*seed);
                cfg.step = Some(*step);
            }
            AttackStrategy::Sampled { times, values } => {
                cfg.times = Some(times.clone());
                cfg.values = Some(values.clone());
            }
        }
        cfg
    }
}

impl CostsConfig {
    fn build(&self) -> Result<CostModel> {
        match self.kind.as_str() {
            "uniform" => Ok(CostModel::Uniform { c: required(&self.c, "costs.c")? }),
            "degree" => Ok(CostModel::DegreeProportional),
            "explicit" => Ok(CostModel::Explicit { values: required(&self.values, "costs.values")? }),
            other => Err(Error::Config(format!("unknown costs.kind {other:?}"))),
        }
    }

    fn from_costs(model: &CostModel) -> Self {
        let (c, values) = match model {
            CostModel::Uniform { c } => (Some(*c), None),
            CostModel::DegreeProportional => (None, None),
            CostModel::Explicit { values } => (None, Some(values.clone())),
        };
        CostsConfig { kind: model.name().to_string(), c, values }
    }
}

impl ScenarioConfig {
    /// Builds the scenario without feasibility checks.
    pub fn to_scenario(&self) -> Result<AttackScenario> {
        let graph = self.graph.build()?;
        let d = &self.dynamics;
        let local = keyed("dynamics", LocalDynamics::from_rows(d.m, &d.a, &d.b))?;
        let s = AttackScenario {
            graph,
            local,
            dbar: self.dbar,
            t_c: self.t_c,
            strategy: self.strategy.build()?,
            costs: self.costs.build()?,
            budget: self.budget,
            u_bar: self.u_bar,
            g_bar: self.g_bar,
            quad_step: self.quad_step,
        };
        s.check_structure().map_err(|e| Error::Config(e.to_string()))?;
        Ok(s)
    }

    /// Graphs are always emitted as explicit edge lists.
    pub fn from_scenario(s: &AttackScenario) -> Self {
        let m = s.m();
        let row_major = |mat: &nalgebra::DMatrix<f64>| -> Vec<f64> {
            (0..m).flat_map(|r| (0..m).map(move |c| (r, c))).map(|(r, c)| mat[(r, c)]).collect()
        };
        ScenarioConfig {
            graph: GraphConfig {
                kind: "explicit".into(),
                n: s.n(),
                edges: Some(s.graph.edges().collect()),
                width: None,
                radius: None,
                seed: None,
            },
            dynamics: DynamicsConfig { m, a: row_major(s.local.a()), b: row_major(s.local.b()) },
            dbar: s.dbar,
            t_c: s.t_c,
            strategy: StrategyConfig::from_strategy(&s.strategy),
            costs: CostsConfig::from_costs(&s.costs),
            budget: s.budget,
            u_bar: s.u_bar,
            g_bar: s.g_bar,
            quad_step: s.quad_step,
        }
    }
}

pub fn parse_config_str(text: &str) -> Result<AttackScenario> {
    let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let s = cfg.to_scenario()?;
    s.ensure_valid()?;
    Ok(s)
}

/// Reads, builds and validates a scenario file.
pub fn parse_config(path: &Path) -> Result<AttackScenario> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn canonical_json(s: &AttackScenario) -> String {
    serde_json::to_string(&ScenarioConfig::from_scenario(s)).expect("config serializes")
}

pub fn canonical_json_pretty(s: &AttackScenario) -> String {
    serde_json::to_string_pretty(&ScenarioConfig::from_scenario(s)).expect("config serializes")
}

/// SHA-256 of the canonical JSON, hex encoded.
pub fn scenario_fingerprint(s: &AttackScenario) -> String {
    hex::encode(Sha256::digest(canonical_json(s).as_bytes()))
}

/// Fingerprint of the fields that determine the influence columns; budget,
/// costs and the feasibility bounds are left out.
pub fn influence_fingerprint(s: &AttackScenario) -> String {
    let core = AttackScenario {
        costs: CostModel::Uniform { c: 1.0 },
        budget: 0.0,
        u_bar: 0.0,
        g_bar: 0.0,
        ..s.clone()
    };
    scenario_fingerprint(&core)
}
