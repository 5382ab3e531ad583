use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sample_demand, DemandModel, InventoryError};
use crate::objective::{Interval, Objective, ObjectiveError, ObjectiveSpec};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarehouseSpec {
    pub id: String,
    /// Reorder point; rounded to whole units (and floored at 0) when simulated.
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "Q")]
    pub q: u64,
    /// Lead time in weeks.
    #[serde(rename = "L")]
    pub l: usize,
    /// Holding cost per unit per week.
    #[serde(rename = "HC")]
    pub hc: f64,
    pub initial_stock: u64,
    /// Upstream warehouse id; `None` means an unlimited external source.
    #[serde(default)]
    pub supplier: Option<String>,
    /// External customer demand, if any.
    #[serde(default)]
    pub demand: Option<DemandModel>,
    #[serde(default)]
    pub order_cost: f64,
    #[serde(default)]
    pub unit_price: f64,
}

impl WarehouseSpec {
    pub fn reorder_units(&self) -> u64 {
        self.r.max(0.0).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub warehouses: Vec<WarehouseSpec>,
    /// `(downstream, upstream)` pairs, merged with the `supplier` fields.
    #[serde(default)]
    pub links: Vec<(String, String)>,
    pub n_week: usize,
    #[serde(rename = "n_MC")]
    pub n_mc: usize,
    pub sl_min: Vec<f64>,
    pub penalty_coeff: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Resolved supplier indices plus a downstream-first processing order.
#[derive(Debug, Clone)]
struct Topology {
    supplier: Vec<Option<usize>>,
    order: Vec<usize>,
}

impl ChainSpec {
    pub fn validate(&self) -> Result<(), InventoryError> {
        self.topology().map(|_| ())
    }

    fn topology(&self) -> Result<Topology, InventoryError> {
        let bad = |m: String| Err(InventoryError::InvalidSpec(m));
        if self.warehouses.is_empty() {
            return bad("at least one warehouse is required".into());
        }
        if self.n_week == 0 || self.n_mc == 0 {
            return bad("n_week and n_MC must be at least 1".into());
        }
        if self.sl_min.len() != self.warehouses.len() {
            return bad(format!(
                "sl_min has {} entries for {} warehouses",
                self.sl_min.len(),
                self.warehouses.len()
            ));
        }
        if self.sl_min.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return bad("sl_min entries must lie in [0, 1]".into());
        }
        if !(self.penalty_coeff >= 0.0 && self.penalty_coeff.is_finite()) {
            return bad("penalty_coeff must be >= 0".into());
        }
        for w in &self.warehouses {
            if !(w.r.is_finite() && w.r >= 0.0) {
                return bad(format!("{}: R must be >= 0", w.id));
            }
            if w.q == 0 {
                return bad(format!("{}: Q must be positive", w.id));
            }
            if !(w.hc >= 0.0 && w.order_cost >= 0.0 && w.unit_price >= 0.0) {
                return bad(format!("{}: costs must be >= 0", w.id));
            }
            if let Some(d) = &w.demand {
                d.validate()?;
            }
        }
        let index = |id: &str| {
            self.warehouses
                .iter()
                .position(|w| w.id == id)
                .ok_or_else(|| InventoryError::Topology(format!("unknown warehouse `{id}`")))
        };
        for (i, w) in self.warehouses.iter().enumerate() {
            if index(&w.id)? != i {
                return Err(InventoryError::Topology(format!("duplicate warehouse id `{}`", w.id)));
            }
        }
        let mut supplier = self
            .warehouses
            .iter()
            .map(|w| w.supplier.as_deref().map(index).transpose())
            .collect::<Result<Vec<_>, _>>()?;
        for (down, up) in &self.links {
            let (d, u) = (index(down)?, index(up)?);
            match supplier[d] {
                Some(existing) if existing != u => {
                    return Err(InventoryError::Topology(format!(
                        "`{down}` is linked to both `{}` and `{up}`",
                        self.warehouses[existing].id
                    )))
                }
                _ => supplier[d] = Some(u),
            }
        }

        // Kahn's algorithm on child counts: a warehouse is ready once every
        // warehouse it supplies has been placed.
        let n = self.warehouses.len();
        let mut pending_children = vec![0usize; n];
        for s in supplier.iter().flatten() {
            pending_children[*s] += 1;
        }
        let mut order = Vec::with_capacity(n);
        let mut placed = vec![false; n];
        while order.len() < n {
            let Some(next) = (0..n).find(|&i| !placed[i] && pending_children[i] == 0) else {
                return Err(InventoryError::Topology("supplier links contain a cycle".into()));
            };
            placed[next] = true;
            order.push(next);
            if let Some(s) = supplier[next] {
                pending_children[s] -= 1;
            }
        }
        Ok(Topology { supplier, order })
    }

    /// Copy with the reorder points replaced.
    pub fn with_reorder_points(&self, r: &[f64]) -> Result<Self, InventoryError> {
        if r.len() != self.warehouses.len() {
            return Err(InventoryError::InvalidSpec(format!(
                "{} reorder points for {} warehouses",
                r.len(),
                self.warehouses.len()
            )));
        }
        let mut c = self.clone();
        for (w, v) in c.warehouses.iter_mut().zip(r) {
            w.r = v.max(0.0).round();
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WarehouseState {
    pub stock: u64,
    pub outstanding: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WeekOutcome {
    pub shipped: u64,
    pub lost: u64,
    /// Size of the order placed this week.
    pub ordered: Option<u64>,
}

/// One week of a single warehouse.
///
/// `arrival` is the delivery of the order in flight, if it lands this week; it
/// clears the outstanding flag even when it carries zero units. Stock left
/// after shipping at or below `r` triggers a new order of `q`.
pub fn step_week(
    state: WarehouseState,
    r: u64,
    q: u64,
    demand: u64,
    arrival: Option<u64>,
) -> (WarehouseState, WeekOutcome) {
    let available = state.stock + arrival.unwrap_or(0);
    let shipped = available.min(demand);
    let stock = available - shipped;
    let outstanding = state.outstanding && arrival.is_none();
    let ordered = (stock <= r && !outstanding).then_some(q);
    (
        WarehouseState {
            stock,
            outstanding: outstanding || ordered.is_some(),
        },
        WeekOutcome {
            shipped,
            lost: demand - shipped,
            ordered,
        },
    )
}

/// Stock flow of one warehouse over one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Flow {
    pub initial: u64,
    pub arrivals: u64,
    pub shipped: u64,
    pub final_stock: u64,
    pub demand: u64,
    pub lost_weeks: u64,
    pub orders: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub warehouse_ids: Vec<String>,
    pub n_mc: usize,
    pub n_week: usize,
    /// End-of-week stock, indexed `[replicate][week][warehouse]` row-major.
    pub stock: Vec<u64>,
    /// `[replicate][warehouse]`.
    pub flows: Vec<Flow>,
    pub satisfied: Vec<u64>,
    pub total_demand: Vec<u64>,
    pub avg_stock: Vec<f64>,
    pub service_level: Vec<f64>,
    pub holding_cost: f64,
    pub order_cost: f64,
    pub penalty: f64,
    pub objective: f64,
    /// Warehouse-weeks with unmet demand.
    pub unsatisfied_events: u64,
}

impl SimulationResult {
    pub fn stock_at(&self, replicate: usize, week: usize, warehouse: usize) -> u64 {
        let w = self.warehouse_ids.len();
        self.stock[(replicate * self.n_week + week) * w + warehouse]
    }

    pub fn flow(&self, replicate: usize, warehouse: usize) -> &Flow {
        &self.flows[replicate * self.warehouse_ids.len() + warehouse]
    }
}

struct Replicate {
    stock: Vec<u64>,
    flows: Vec<Flow>,
}

fn simulate_replicate(chain: &ChainSpec, topo: &Topology, seed: u64, rep: usize) -> Replicate {
    let n = chain.warehouses.len();
    let mut rng = rng::stream(seed, &[rep as u64]);
    let mut state: Vec<WarehouseState> = chain
        .warehouses
        .iter()
        .map(|w| WarehouseState {
            stock: w.initial_stock,
            outstanding: false,
        })
        .collect();
    // (due week, units) of the single order in flight
    let mut in_flight: Vec<Option<(usize, u64)>> = vec![None; n];
    let mut flows: Vec<Flow> = chain
        .warehouses
        .iter()
        .map(|w| Flow {
            initial: w.initial_stock,
            ..Flow::default()
        })
        .collect();
    let mut stock = Vec::with_capacity(chain.n_week * n);
    let mut week_stock = vec![0u64; n];
    let mut internal: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];

    for week in 0..chain.n_week {
        internal.iter_mut().for_each(Vec::clear);
        for &i in &topo.order {
            let spec = &chain.warehouses[i];
            let arrival = match in_flight[i] {
                Some((due, units)) if due == week => {
                    in_flight[i] = None;
                    Some(units)
                }
                _ => None,
            };
            let external = spec.demand.as_ref().map_or(0, |d| sample_demand(d, &mut rng));
            let inner: u64 = internal[i].iter().map(|(_, u)| u).sum();
            let available = state[i].stock + arrival.unwrap_or(0);
            let (next, out) = step_week(state[i], spec.reorder_units(), spec.q, external + inner, arrival);

            // external customers first, then downstream orders in placement order
            let mut left = out.shipped - available.min(external);
            for &(child, asked) in &internal[i] {
                let sent = left.min(asked);
                left -= sent;
                if let Some((due, _)) = in_flight[child] {
                    in_flight[child] = Some((due, sent));
                }
            }
            if let Some(q) = out.ordered {
                in_flight[i] = Some((week + spec.l + 1, q));
                if let Some(s) = topo.supplier[i] {
                    internal[s].push((i, q));
                }
            }

            let f = &mut flows[i];
            f.arrivals += arrival.unwrap_or(0);
            f.shipped += out.shipped;
            f.demand += external + inner;
            f.lost_weeks += u64::from(out.lost > 0);
            f.orders += u64::from(out.ordered.is_some());
            state[i] = next;
            week_stock[i] = next.stock;
        }
        stock.extend_from_slice(&week_stock);
    }
    for (f, s) in flows.iter_mut().zip(&state) {
        f.final_stock = s.stock;
    }
    Replicate { stock, flows }
}

/// Runs `n_MC` independent replicates; replicate `k` draws from a stream
/// derived from `(seed, k)`, so results do not depend on the thread count.
pub fn simulate_chain(chain: &ChainSpec, seed: u64) -> Result<SimulationResult, InventoryError> {
    let topo = chain.topology()?;
    let n = chain.warehouses.len();
    let reps: Vec<Replicate> = (0..chain.n_mc)
        .into_par_iter()
        .map(|rep| simulate_replicate(chain, &topo, seed, rep))
        .collect();

    let mut stock = Vec::with_capacity(chain.n_mc * chain.n_week * n);
    let mut flows = Vec::with_capacity(chain.n_mc * n);
    let mut stock_sum = vec![0u64; n];
    for r in reps {
        for (k, s) in r.stock.iter().enumerate() {
            stock_sum[k % n] += s;
        }
        stock.extend(r.stock);
        flows.extend(r.flows);
    }
    let mut satisfied = vec![0u64; n];
    let mut total_demand = vec![0u64; n];
    let mut received = vec![0u64; n];
    let mut orders = vec![0u64; n];
    let mut unsatisfied_events = 0;
    for (k, f) in flows.iter().enumerate() {
        let w = k % n;
        satisfied[w] += f.shipped;
        total_demand[w] += f.demand;
        received[w] += f.arrivals;
        orders[w] += f.orders;
        unsatisfied_events += f.lost_weeks;
    }

    let mc = chain.n_mc as f64;
    let avg_stock: Vec<f64> = stock_sum
        .iter()
        .map(|s| *s as f64 / (mc * chain.n_week as f64))
        .collect();
    let service_level: Vec<f64> = satisfied
        .iter()
        .zip(&total_demand)
        .map(|(s, t)| if *t == 0 { 1.0 } else { *s as f64 / *t as f64 })
        .collect();
    let holding_cost: f64 = chain
        .warehouses
        .iter()
        .zip(&stock_sum)
        .map(|(w, s)| w.hc * (*s as f64 / mc))
        .sum();
    let order_cost: f64 = chain
        .warehouses
        .iter()
        .enumerate()
        .map(|(i, w)| (w.order_cost * orders[i] as f64 + w.unit_price * received[i] as f64) / mc)
        .sum();
    let penalty = chain.penalty_coeff
        * service_level
            .iter()
            .zip(&chain.sl_min)
            .map(|(sl, min)| (min - sl).max(0.0))
            .sum::<f64>();

    Ok(SimulationResult {
        warehouse_ids: chain.warehouses.iter().map(|w| w.id.clone()).collect(),
        n_mc: chain.n_mc,
        n_week: chain.n_week,
        stock,
        flows,
        satisfied,
        total_demand,
        avg_stock,
        service_level,
        holding_cost,
        order_cost,
        penalty,
        objective: holding_cost + order_cost + penalty,
        unsatisfied_events,
    })
}

/// Holding cost plus service-level penalty at the given reorder points.
/// Points are floored at 0 and rounded to whole units.
pub fn chain_objective(chain: &ChainSpec, reorder_points: &[f64], seed: u64) -> Result<f64, InventoryError> {
    simulate_chain(&chain.with_reorder_points(reorder_points)?, seed).map(|r| r.objective)
}

/// [`chain_objective`] over a box of reorder points, with a fixed seed so
/// every evaluation sees the same random numbers.
#[derive(Debug, Clone)]
pub struct ChainObjective {
    chain: ChainSpec,
    seed: u64,
    spec: ObjectiveSpec,
}

impl ChainObjective {
    pub const NAME: &'static str = "inventory_chain";

    pub fn new(chain: ChainSpec, bounds: Vec<Interval>, seed: u64) -> Result<Self, InventoryError> {
        chain.validate()?;
        if bounds.len() != chain.warehouses.len() {
            return Err(InventoryError::InvalidSpec(format!(
                "{} bounds for {} warehouses",
                bounds.len(),
                chain.warehouses.len()
            )));
        }
        let spec = ObjectiveSpec::new(Self::NAME, bounds, false, None)
            .map_err(|e| InventoryError::InvalidSpec(e.to_string()))?;
        Ok(Self { chain, seed, spec })
    }

    pub fn chain(&self) -> &ChainSpec {
        &self.chain
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl Objective for ChainObjective {
    fn spec(&self) -> &ObjectiveSpec {
        &self.spec
    }

    fn evaluate(&self, x: &[f64], _rng: &mut dyn RngCore) -> Result<f64, ObjectiveError> {
        self.spec.check_point(x)?;
        chain_objective(&self.chain, x, self.seed).map_err(|e| ObjectiveError::Evaluation(e.to_string()))
    }
}
