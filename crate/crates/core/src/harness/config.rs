//! Run configuration documents.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::HarnessError;
use crate::inventory::{self, ChainObjective, ChainSpec};
use crate::objective::{Benchmark, BenchmarkObjective, Interval, Objective};
use crate::swarm::{PsoConfig, TuningOptions};

/// A single name or a list of names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Names {
    One(String),
    Many(Vec<String>),
}

impl Names {
    pub fn to_vec(&self) -> Vec<String> {
        match self {
            Names::One(s) => vec![s.clone()],
            Names::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub weights: Vec<f64>,
    pub mc_runs: usize,
    pub bins: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        let mut weights: Vec<f64> = (0..=11).map(|i| i as f64 / 10.0).collect();
        weights.push(1.25);
        Self {
            weights,
            mc_runs: 500,
            bins: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckSection {
    /// Test points drawn uniformly in the box.
    pub points: usize,
    /// Archive records placed around each test point.
    pub archive_points: usize,
    /// Archive ball radius as a fraction of each domain width.
    pub radius_frac: f64,
    /// WLS kernel size as a fraction of each domain width.
    pub sigma_frac: f64,
    pub fd_epsilon: f64,
}

impl Default for GradcheckSection {
    fn default() -> Self {
        Self {
            points: 20,
            archive_points: 200,
            radius_frac: 0.01,
            sigma_frac: 0.01,
            fd_epsilon: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub objective: Option<Names>,
    #[serde(default)]
    pub dimension: Option<usize>,
    /// Per-dimension `[lo, hi]`; defaults to the conventional domain.
    #[serde(default)]
    pub bounds: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub chain: Option<ChainSpec>,
    #[serde(default)]
    pub chain_path: Option<PathBuf>,
    #[serde(default)]
    pub pso: PsoConfig,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub gradcheck: GradcheckSection,
    #[serde(default)]
    pub tuning: TuningOptions,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mc: Option<usize>,
}

fn config_err(path: &Path, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("{}: {msg}", path.display()))
}

impl RunConfig {
    /// Reads and validates a config; errors name the offending key.
    pub fn load(path: &Path, ov: Overrides) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| config_err(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, ov).map_err(|e| match e {
            HarnessError::Config(m) => config_err(path, m),
            other => other,
        })
    }

    pub fn parse(text: &str, base_dir: &Path, ov: Overrides) -> Result<Self, HarnessError> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        if let Some(chain) = value.get_mut("chain") {
            inventory::resolve_csv_demands(chain, base_dir).map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        let mut cfg: RunConfig = serde_path_to_error::deserialize(value)
            .map_err(|e| HarnessError::Config(format!("key `{}`: {}", e.path(), e.inner())))?;
        if let Some(p) = cfg.chain_path.take() {
            if cfg.chain.is_some() {
                return Err(HarnessError::Config("give either `chain` or `chain_path`, not both".into()));
            }
            let chain = inventory::load_chain_json(&base_dir.join(&p))
                .map_err(|e| HarnessError::Config(format!("key `chain_path`: {e}")))?;
            cfg.chain = Some(chain);
        }
        if let Some(chain) = &mut cfg.chain {
            chain.validate().map_err(|e| HarnessError::Config(format!("key `chain`: {e}")))?;
            if let Some(mc) = ov.mc {
                chain.n_mc = mc;
            }
        }
        if let Some(mc) = ov.mc {
            cfg.sweep.mc_runs = mc;
        }
        cfg.seed = ov.seed.or(cfg.seed).or(cfg.chain.as_ref().map(|c| c.seed));
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if let Some(names) = &self.objective {
            for n in names.to_vec() {
                if n != ChainObjective::NAME && n.parse::<Benchmark>().is_err() {
                    return bad(format!("key `objective`: unknown objective `{n}`"));
                }
            }
        }
        if self.sweep.weights.is_empty() || self.sweep.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("key `sweep.weights`: need at least one weight, all >= 0".into());
        }
        if self.sweep.mc_runs == 0 || self.sweep.bins == 0 {
            return bad("key `sweep`: mc_runs and bins must be at least 1".into());
        }
        let g = &self.gradcheck;
        if g.points == 0 || g.archive_points == 0 || !(g.radius_frac > 0.0 && g.sigma_frac > 0.0 && g.fd_epsilon > 0.0) {
            return bad("key `gradcheck`: counts must be >= 1 and scales > 0".into());
        }
        if let Some(b) = &self.bounds {
            if b.iter().any(|[lo, hi]| !(lo < hi)) {
                return bad("key `bounds`: every interval needs lo < hi".into());
            }
        }
        Ok(())
    }

    pub fn master_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn objective_names(&self) -> Vec<String> {
        match (&self.objective, &self.chain) {
            (Some(n), _) => n.to_vec(),
            (None, Some(_)) => vec![ChainObjective::NAME.to_string()],
            (None, None) => Vec::new(),
        }
    }

    fn bounds_for(&self, dim: usize) -> Option<Result<Vec<Interval>, HarnessError>> {
        self.bounds.as_ref().map(|b| {
            if b.len() != dim {
                return Err(HarnessError::Config(format!(
                    "key `bounds`: {} intervals for dimension {dim}",
                    b.len()
                )));
            }
            Ok(b.iter().map(|[lo, hi]| Interval::new(*lo, *hi)).collect())
        })
    }

    /// Builds the named objective. The chain objective uses `seed` for its
    /// common random numbers.
    pub fn build_objective(&self, name: &str, seed: u64) -> Result<Box<dyn Objective>, HarnessError> {
        if name == ChainObjective::NAME {
            let chain = self
                .chain
                .clone()
                .ok_or_else(|| HarnessError::Config("objective `inventory_chain` needs `chain` or `chain_path`".into()))?;
            let bounds = match self.bounds_for(chain.warehouses.len()) {
                Some(b) => b?,
                None => chain
                    .warehouses
                    .iter()
                    .map(|w| Interval::new(0.0, 3.0 * w.r.max(w.q as f64)))
                    .collect(),
            };
            let obj = ChainObjective::new(chain, bounds, seed).map_err(|e| HarnessError::Config(e.to_string()))?;
            return Ok(Box::new(obj));
        }
        let kind: Benchmark = name
            .parse()
            .map_err(|e: crate::objective::ObjectiveError| HarnessError::Config(e.to_string()))?;
        let dim = kind.fixed_dimension().or(self.dimension).unwrap_or(2);
        if let (Some(fixed), Some(asked)) = (kind.fixed_dimension(), self.dimension) {
            if fixed != asked {
                return Err(HarnessError::Config(format!("key `dimension`: {name} is {fixed}-dimensional")));
            }
        }
        let obj = match self.bounds_for(dim) {
            Some(b) => BenchmarkObjective::with_bounds(kind, b?),
            None => BenchmarkObjective::new(kind, dim),
        }
        .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(Box::new(obj))
    }

    pub fn require_chain(&self) -> Result<&ChainSpec, HarnessError> {
        self.chain
            .as_ref()
            .ok_or_else(|| HarnessError::Config("this command needs `chain` or `chain_path`".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = RunConfig::parse(r#"{"objective": "dropwave"}"#, Path::new("."), Overrides::default()).unwrap();
        assert_eq!(c.sweep.weights.len(), 13);
        assert_eq!(*c.sweep.weights.last().unwrap(), 1.25);
        assert_eq!(c.sweep.mc_runs, 500);
        assert_eq!(c.master_seed(), 0);
        let c = RunConfig::parse(
            r#"{"objective": ["dropwave", "griewangk"], "seed": 4}"#,
            Path::new("."),
            Overrides {
                seed: Some(9),
                mc: Some(10),
            },
        )
        .unwrap();
        assert_eq!(c.master_seed(), 9);
        assert_eq!(c.sweep.mc_runs, 10);
        assert_eq!(c.objective_names(), vec!["dropwave", "griewangk"]);
    }

    #[test]
    fn errors_name_keys() {
        let e = RunConfig::parse(r#"{"pso": {"swarm_size": "x"}}"#, Path::new("."), Overrides::default()).unwrap_err();
        assert!(e.to_string().contains("pso.swarm_size"), "{e}");
        let e = RunConfig::parse(r#"{"pso": {"wat": 1}}"#, Path::new("."), Overrides::default()).unwrap_err();
        assert!(e.to_string().contains("wat"), "{e}");
        let e = RunConfig::parse(r#"{"objective": "rastrigin"}"#, Path::new("."), Overrides::default()).unwrap_err();
        assert!(e.to_string().contains("objective"), "{e}");
        assert!(RunConfig::parse("{", Path::new("."), Overrides::default()).is_err());
    }

    #[test]
    fn builds_benchmarks() {
        let c = RunConfig::parse(
            r#"{"objective": "griewangk", "dimension": 5, "bounds": [[-1,1],[-1,1],[-1,1],[-1,1],[-1,1]]}"#,
            Path::new("."),
            Overrides::default(),
        )
        .unwrap();
        let f = c.build_objective("griewangk", 0).unwrap();
        assert_eq!(f.spec().dimension, 5);
        assert_eq!(f.spec().bounds[0], Interval::new(-1.0, 1.0));
        assert!(c.build_objective("dropwave", 0).is_err());
        assert!(c.build_objective("inventory_chain", 0).is_err());
    }
}
