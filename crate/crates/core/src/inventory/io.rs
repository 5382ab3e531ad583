use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ChainSpec, DemandModel, InventoryError, SimulationResult};

/// Parses a consumption history: one nonnegative number per line, an
/// optional non-numeric header on the first line, blank lines ignored.
pub fn parse_consumption<R: BufRead>(input: R, source: &str) -> Result<DemandModel, InventoryError> {
    let mut samples = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let text = line.trim().trim_end_matches(',');
        if text.is_empty() {
            continue;
        }
        let err = |msg: String| InventoryError::Ingest {
            path: source.to_string(),
            line: idx + 1,
            msg,
        };
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => samples.push(v),
            Ok(v) => return Err(err(format!("consumption must be a nonnegative number, got {v}"))),
            Err(_) if idx == 0 => {}
            Err(_) => return Err(err(format!("cannot parse `{text}` as a number"))),
        }
    }
    if samples.is_empty() {
        return Err(InventoryError::Ingest {
            path: source.to_string(),
            line: 0,
            msg: "no consumption values".into(),
        });
    }
    DemandModel::empirical(samples)
}

pub fn load_consumption_csv(path: &Path) -> Result<DemandModel, InventoryError> {
    let file = fs::File::open(path)?;
    parse_consumption(std::io::BufReader::new(file), &path.display().to_string())
}

/// Replaces every `{"kind": "empirical", "csv_path": ...}` demand in a chain
/// document by the samples read from that file (relative to `base_dir`).
pub fn resolve_csv_demands(chain: &mut Value, base_dir: &Path) -> Result<(), InventoryError> {
    let Some(warehouses) = chain.get_mut("warehouses").and_then(Value::as_array_mut) else {
        return Ok(());
    };
    for w in warehouses {
        let Some(demand) = w.get_mut("demand").and_then(Value::as_object_mut) else {
            continue;
        };
        let Some(path) = demand.get("csv_path").and_then(Value::as_str) else {
            continue;
        };
        let model = load_consumption_csv(&base_dir.join(path))?;
        demand.remove("csv_path");
        if let DemandModel::Empirical { samples } = model {
            demand.insert("samples".into(), serde_json::json!(samples));
        }
    }
    Ok(())
}

/// Deserializes a chain document; errors name the offending key.
pub fn parse_chain_json(mut value: Value, base_dir: &Path) -> Result<ChainSpec, InventoryError> {
    resolve_csv_demands(&mut value, base_dir)?;
    let chain: ChainSpec = serde_path_to_error::deserialize(value).map_err(|e| InventoryError::Config {
        path: e.path().to_string(),
        msg: e.inner().to_string(),
    })?;
    chain.validate()?;
    Ok(chain)
}

pub fn load_chain_json(path: &Path) -> Result<ChainSpec, InventoryError> {
    let text = fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| InventoryError::Config {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_chain_json(value, path.parent().unwrap_or(Path::new(".")))
}

/// CSV with header `replicate,week,warehouse,stock`.
pub fn write_stocks_csv<W: Write>(result: &SimulationResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "replicate,week,warehouse,stock")?;
    for rep in 0..result.n_mc {
        for week in 0..result.n_week {
            for (w, id) in result.warehouse_ids.iter().enumerate() {
                writeln!(out, "{rep},{week},{id},{}", result.stock_at(rep, week, w))?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarehouseKpi {
    pub id: String,
    #[serde(rename = "R")]
    pub r: f64,
    pub service_level: f64,
    pub sl_min: f64,
    pub avg_stock: f64,
    pub satisfied: u64,
    pub total_demand: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiSummary {
    pub objective: f64,
    pub holding_cost: f64,
    pub order_cost: f64,
    pub penalty: f64,
    pub unsatisfied_events: u64,
    pub n_week: usize,
    #[serde(rename = "n_MC")]
    pub n_mc: usize,
    pub seed: u64,
    pub warehouses: Vec<WarehouseKpi>,
}

impl KpiSummary {
    pub fn new(chain: &ChainSpec, result: &SimulationResult, seed: u64) -> Self {
        Self {
            objective: result.objective,
            holding_cost: result.holding_cost,
            order_cost: result.order_cost,
            penalty: result.penalty,
            unsatisfied_events: result.unsatisfied_events,
            n_week: result.n_week,
            n_mc: result.n_mc,
            seed,
            warehouses: chain
                .warehouses
                .iter()
                .enumerate()
                .map(|(i, w)| WarehouseKpi {
                    id: w.id.clone(),
                    r: w.r,
                    service_level: result.service_level[i],
                    sl_min: chain.sl_min[i],
                    avg_stock: result.avg_stock[i],
                    satisfied: result.satisfied[i],
                    total_demand: result.total_demand[i],
                })
                .collect(),
        }
    }
}

pub fn write_kpi_json<W: Write>(summary: &KpiSummary, mut out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, summary)?;
    writeln!(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consumption_parsing() {
        let m = parse_consumption("10\n20\n30".as_bytes(), "t").unwrap();
        assert_eq!(
            m,
            DemandModel::Empirical {
                samples: vec![10.0, 20.0, 30.0]
            }
        );
        let m = parse_consumption("consumption\n30\n\n10\n".as_bytes(), "t").unwrap();
        assert_eq!(
            m,
            DemandModel::Empirical {
                samples: vec![10.0, 30.0]
            }
        );
        match parse_consumption("10\n-5\n".as_bytes(), "t") {
            Err(InventoryError::Ingest { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_consumption("10\nabc\n".as_bytes(), "t") {
            Err(InventoryError::Ingest { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_consumption("".as_bytes(), "t").is_err());
        assert!(parse_consumption("header\n".as_bytes(), "t").is_err());
    }

    #[test]
    fn chain_json_with_csv_demand() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("use.csv"), "consumption\n5\n15\n").unwrap();
        let doc = serde_json::json!({
            "warehouses": [{
                "id": "a", "R": 10, "Q": 20, "L": 1, "HC": 1, "initial_stock": 20,
                "demand": {"kind": "empirical", "csv_path": "use.csv"}
            }],
            "n_week": 5, "n_MC": 2, "sl_min": [0.9], "penalty_coeff": 10
        });
        fs::write(dir.path().join("chain.json"), doc.to_string()).unwrap();
        let c = load_chain_json(&dir.path().join("chain.json")).unwrap();
        assert_eq!(
            c.warehouses[0].demand,
            Some(DemandModel::Empirical {
                samples: vec![5.0, 15.0]
            })
        );
    }

    #[test]
    fn config_errors_name_the_key() {
        let doc = serde_json::json!({
            "warehouses": [{"id": "a", "R": 10, "Q": "many", "L": 1, "HC": 1, "initial_stock": 0}],
            "n_week": 5, "n_MC": 2, "sl_min": [0.9], "penalty_coeff": 10
        });
        match parse_chain_json(doc, Path::new(".")) {
            Err(InventoryError::Config { path, .. }) => assert_eq!(path, "warehouses[0].Q"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stocks_csv_layout() {
        let doc = serde_json::json!({
            "warehouses": [{"id": "a", "R": 0, "Q": 1, "L": 0, "HC": 1, "initial_stock": 3}],
            "n_week": 2, "n_MC": 2, "sl_min": [0.0], "penalty_coeff": 0
        });
        let c = parse_chain_json(doc, Path::new(".")).unwrap();
        let r = super::super::simulate_chain(&c, 0).unwrap();
        let mut buf = Vec::new();
        write_stocks_csv(&r, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "replicate,week,warehouse,stock\n0,0,a,3\n0,1,a,3\n1,0,a,3\n1,1,a,3\n"
        );
        let k = KpiSummary::new(&c, &r, 0);
        assert_eq!(k.warehouses[0].service_level, 1.0);
    }
}
