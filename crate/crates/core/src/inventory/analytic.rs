//! Closed-form relations of the single-warehouse (R, Q) model.

use super::InventoryError;

/// Discrete distribution as `(value, probability)` pairs.
pub type Pmf = Vec<(f64, f64)>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kpis {
    /// Average stock `Q/2 + S`.
    pub average_stock: f64,
    pub safety_stock: f64,
    pub order_quantity: f64,
}

pub fn classic_kpis(q: f64, s: f64) -> Result<Kpis, InventoryError> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(InventoryError::InvalidSpec(format!("Q must be positive, got {q}")));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(InventoryError::InvalidSpec(format!("S must be >= 0, got {s}")));
    }
    Ok(Kpis {
        average_stock: q / 2.0 + s,
        safety_stock: s,
        order_quantity: q,
    })
}

/// `R = mean lead-time demand + S`.
pub fn reorder_point(mean_lead_time_demand: f64, s: f64) -> f64 {
    mean_lead_time_demand + s
}

/// `1 - sum_{d > R} P(d) (d - R) / Q`, clamped to `[0, 1]`.
pub fn analytic_service_level(r: f64, q: f64, lead_time_demand: &[(f64, f64)]) -> Result<f64, InventoryError> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(InventoryError::InvalidSpec(format!("Q must be positive, got {q}")));
    }
    let total: f64 = lead_time_demand.iter().map(|(_, p)| p).sum();
    if lead_time_demand.iter().any(|(_, p)| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(InventoryError::InvalidSpec(format!(
            "probabilities must be nonnegative and sum to 1, sum is {total}"
        )));
    }
    let shortfall: f64 = lead_time_demand
        .iter()
        .filter(|(d, _)| *d > r)
        .map(|(d, p)| p * (d - r))
        .sum();
    Ok((1.0 - shortfall / q).clamp(0.0, 1.0))
}

/// Distribution of the sum of `weeks` i.i.d. weekly demands.
pub fn lead_time_distribution(weekly: &[(f64, f64)], weeks: usize) -> Pmf {
    let mut acc: Pmf = vec![(0.0, 1.0)];
    for _ in 0..weeks {
        let mut next: Pmf = Vec::with_capacity(acc.len() * weekly.len());
        for (a, pa) in &acc {
            for (b, pb) in weekly {
                let v = a + b;
                match next.iter_mut().find(|(d, _)| *d == v) {
                    Some(slot) => slot.1 += pa * pb,
                    None => next.push((v, pa * pb)),
                }
            }
        }
        acc = next;
    }
    acc.sort_by(|a, b| a.0.total_cmp(&b.0));
    acc
}
