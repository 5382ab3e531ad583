//! Regional WLS gradients against finite differences on a local archive.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use super::config::GradcheckSection;
use super::HarnessError;
use crate::gradient::{
    cosine_similarity, finite_difference_gradient, wls_regional_gradient, EvalTag, EvaluationArchive, FdConfig,
    WlsConfig,
};
use crate::objective::{Evaluation, Objective};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckRow {
    pub point: usize,
    pub x: Vec<f64>,
    pub fd: Vec<f64>,
    pub wls: Vec<f64>,
    pub cosine: f64,
    pub condition_ok: bool,
}

/// Uniform draw from the axis-scaled ball `|(p - c) / radius|_2 <= 1`.
pub fn sample_ball(rng: &mut Stream, center: &[f64], radius: &[f64]) -> Vec<f64> {
    loop {
        let u: Vec<f64> = center.iter().map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        if u.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            return center.iter().zip(&u).zip(radius).map(|((c, u), r)| c + u * r).collect();
        }
    }
}

/// Archive of `count` evaluations in the ball around `center`, clipped to the box.
pub fn local_archive<O: Objective + ?Sized>(
    f: &O,
    center: &[f64],
    radius: &[f64],
    count: usize,
    rng: &mut Stream,
) -> Result<EvaluationArchive, HarnessError> {
    let spec = f.spec();
    let mut archive = EvaluationArchive::new(spec.dimension);
    for _ in 0..count {
        let p: Vec<f64> = sample_ball(rng, center, radius)
            .iter()
            .zip(&spec.bounds)
            .map(|(v, b)| b.clamp(*v))
            .collect();
        let value = f.evaluate(&p, rng).map_err(|e| HarnessError::Runtime(e.to_string()))?;
        archive
            .append(Evaluation {
                position: p,
                value,
                iteration: 0,
                particle_id: 0,
                rng_draws: f.rng_draws(),
            })
            .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    }
    Ok(archive)
}

/// Test points are drawn so their archive ball stays inside the box.
pub fn gradcheck<O: Objective + ?Sized>(
    f: &O,
    cfg: &GradcheckSection,
    seed: u64,
) -> Result<Vec<GradcheckRow>, HarnessError> {
    let spec = f.spec();
    let widths = spec.widths();
    let radius: Vec<f64> = widths.iter().map(|w| cfg.radius_frac * w).collect();
    let wls = WlsConfig::from_widths(&widths, cfg.sigma_frac);
    let fd = FdConfig {
        epsilon: cfg.fd_epsilon,
    };
    let mut rows = Vec::with_capacity(cfg.points);
    for point in 0..cfg.points {
        let mut rng = rng::stream(seed, &[point as u64]);
        let x: Vec<f64> = spec
            .bounds
            .iter()
            .zip(&radius)
            .map(|(b, r)| {
                let (lo, hi) = if b.width() > 2.0 * r { (b.lo + r, b.hi - r) } else { (b.lo, b.hi) };
                lo + rng.random::<f64>() * (hi - lo)
            })
            .collect();
        let archive = local_archive(f, &x, &radius, cfg.archive_points, &mut rng)?;
        let f_x = f.evaluate(&x, &mut rng).map_err(|e| HarnessError::Runtime(e.to_string()))?;
        let w = wls_regional_gradient(&archive, &x, f_x, &wls).map_err(|e| HarnessError::Runtime(e.to_string()))?;
        let d = finite_difference_gradient(f, &x, &fd, EvalTag::default(), &mut rng)
            .map_err(|e| HarnessError::Runtime(e.to_string()))?;
        rows.push(GradcheckRow {
            point,
            cosine: cosine_similarity(&w.g, &d.estimate.g),
            condition_ok: w.condition_ok,
            x,
            fd: d.estimate.g,
            wls: w.g,
        });
    }
    Ok(rows)
}

pub fn write_gradcheck_csv<W: Write>(rows: &[GradcheckRow], mut out: W) -> std::io::Result<()> {
    let n = rows.first().map_or(0, |r| r.x.len());
    let cols = |p: &str| (1..=n).map(|i| format!("{p}_{i}")).collect::<Vec<_>>().join(",");
    writeln!(out, "point,{},{},{},cosine,condition_ok", cols("x"), cols("fd"), cols("wls"))?;
    for r in rows {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.point,
            join(&r.x),
            join(&r.fd),
            join(&r.wls),
            r.cosine,
            r.condition_ok
        )?;
    }
    Ok(())
}
