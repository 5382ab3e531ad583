use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Estimator, PsoConfig, SwarmError};
use crate::gradient::{
    egs_gradient, finite_difference_gradient, wls_regional_gradient, CapacityPolicy, EvalTag,
    EvaluationArchive, GradientError, WlsConfig,
};
use crate::objective::{Evaluation, Interval, Objective};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// Objective value at `x`.
    pub f: f64,
    pub pbest_x: Vec<f64>,
    pub pbest_f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub gbest_x: Vec<f64>,
    pub gbest_f: f64,
    /// Completed iterations; 0 right after initialization.
    pub iteration: usize,
    pub gbest_found_at: usize,
    /// Drives initialization and the `r1`, `r2` coefficients.
    pub rng: Stream,
    /// Passed to the objective and to sampling estimators.
    pub eval_rng: Stream,
}

impl SwarmState {
    pub fn mean_pbest_f(&self) -> f64 {
        self.particles.iter().map(|p| p.pbest_f).sum::<f64>() / self.particles.len() as f64
    }

    pub fn mean_f(&self) -> f64 {
        self.particles.iter().map(|p| p.f).sum::<f64>() / self.particles.len() as f64
    }

    fn refresh_gbest(&mut self) {
        let mut best = None;
        for (i, p) in self.particles.iter().enumerate() {
            if p.pbest_f < best.map_or(self.gbest_f, |(_, f)| f) {
                best = Some((i, p.pbest_f));
            }
        }
        if let Some((i, f)) = best {
            self.gbest_f = f;
            self.gbest_x = self.particles[i].pbest_x.clone();
            self.gbest_found_at = self.iteration;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub gbest_f: f64,
    pub mean_pbest_f: f64,
    /// Mean objective value at the particles' current positions.
    pub mean_f: f64,
}

impl TraceRow {
    fn of(state: &SwarmState) -> Self {
        Self {
            iteration: state.iteration,
            gbest_f: state.gbest_f,
            mean_pbest_f: state.mean_pbest_f(),
            mean_f: state.mean_f(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub gbest_x: Vec<f64>,
    pub gbest_f: f64,
    pub iterations_done: usize,
    pub gbest_found_at: usize,
    pub mean_pbest_f: f64,
    pub evaluations: usize,
    pub trace: Vec<TraceRow>,
    pub archive: EvaluationArchive,
}

fn evaluate<O: Objective + ?Sized>(
    f: &O,
    x: &[f64],
    rng: &mut Stream,
    particle: usize,
    iteration: usize,
) -> Result<f64, SwarmError> {
    f.evaluate(x, rng).map_err(|source| SwarmError::Objective {
        particle,
        iteration,
        source,
    })
}

/// Random positions in the box, velocities in `+-width/10`, one evaluation per
/// particle. The initial evaluations are appended to `archive` as iteration 0.
pub fn init_swarm<O: Objective + ?Sized>(
    f: &O,
    cfg: &PsoConfig,
    archive: &mut EvaluationArchive,
) -> Result<SwarmState, SwarmError> {
    let spec = f.spec();
    cfg.validate(spec.dimension)?;
    let mut rng = rng::stream(cfg.seed, &[0]);
    let mut eval_rng = rng::stream(cfg.seed, &[1]);
    let mut particles = Vec::with_capacity(cfg.swarm_size);
    for id in 0..cfg.swarm_size {
        let x: Vec<f64> = spec
            .bounds
            .iter()
            .map(|b| b.lo + rng.random::<f64>() * b.width())
            .collect();
        let v: Vec<f64> = spec
            .bounds
            .iter()
            .map(|b| (2.0 * rng.random::<f64>() - 1.0) * b.width() / 10.0)
            .collect();
        let fx = evaluate(f, &x, &mut eval_rng, id, 0)?;
        archive.append(Evaluation {
            position: x.clone(),
            value: fx,
            iteration: 0,
            particle_id: id,
            rng_draws: f.rng_draws(),
        })?;
        particles.push(Particle {
            pbest_x: x.clone(),
            pbest_f: fx,
            x,
            v,
            f: fx,
        });
    }
    let mut state = SwarmState {
        gbest_x: particles[0].pbest_x.clone(),
        gbest_f: f64::INFINITY,
        particles,
        iteration: 0,
        gbest_found_at: 0,
        rng,
        eval_rng,
    };
    state.refresh_gbest();
    Ok(state)
}

/// `n` draws for `r1` followed by `n` draws for `r2`, each uniform in `[0, 1)`.
pub fn draw_coefficients<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (Vec<f64>, Vec<f64>) {
    let r1 = (0..n).map(|_| rng.random::<f64>()).collect();
    let r2 = (0..n).map(|_| rng.random::<f64>()).collect();
    (r1, r2)
}

/// `w v + c1 r1 (pbest - x) + c2 r2 (gbest - x) - c3 g`, clamped to `v_max`.
pub fn velocity_update(
    p: &Particle,
    gbest_x: &[f64],
    gradient: Option<&[f64]>,
    cfg: &PsoConfig,
    r1: &[f64],
    r2: &[f64],
) -> Vec<f64> {
    (0..p.x.len())
        .map(|d| {
            let mut v = cfg.w * p.v[d]
                + cfg.c1 * r1[d] * (p.pbest_x[d] - p.x[d])
                + cfg.c2 * r2[d] * (gbest_x[d] - p.x[d]);
            if let Some(g) = gradient {
                v -= cfg.c3 * g[d];
            }
            if let Some(vmax) = &cfg.v_max {
                v = v.clamp(-vmax[d], vmax[d]);
            }
            v
        })
        .collect()
}

/// `x + v dt`, clipped to the box. A clipped coordinate has its velocity
/// component zeroed.
pub fn position_update(x: &[f64], v: &mut [f64], dt: f64, bounds: &[Interval]) -> Vec<f64> {
    x.iter()
        .zip(v.iter_mut())
        .zip(bounds)
        .map(|((xi, vi), b)| {
            let next = xi + *vi * dt;
            if next < b.lo {
                *vi = 0.0;
                b.lo
            } else if next > b.hi {
                *vi = 0.0;
                b.hi
            } else {
                next
            }
        })
        .collect()
}

fn estimate_gradient<O: Objective + ?Sized>(
    f: &O,
    p: &Particle,
    id: usize,
    state_iteration: usize,
    archive: &EvaluationArchive,
    wls: &WlsConfig,
    cfg: &PsoConfig,
    eval_rng: &mut Stream,
    pending: &mut Vec<Evaluation>,
) -> Result<Option<Vec<f64>>, SwarmError> {
    let tag = EvalTag {
        iteration: state_iteration + 1,
        particle_id: id,
    };
    let wrap = |source: GradientError| SwarmError::Gradient {
        particle: id,
        iteration: tag.iteration,
        source,
    };
    let estimate = match cfg.estimator {
        Estimator::None => return Ok(None),
        Estimator::Wls => match wls_regional_gradient(archive, &p.x, p.f, wls) {
            Ok(e) => e,
            Err(GradientError::InsufficientData { .. } | GradientError::DegenerateWeights) => {
                return Ok(None)
            }
            Err(e) => return Err(wrap(e)),
        },
        Estimator::Fd => {
            let s = finite_difference_gradient(f, &p.x, &cfg.fd_config(), tag, eval_rng).map_err(wrap)?;
            pending.extend(s.evaluations);
            s.estimate
        }
        Estimator::Egs => {
            let s = egs_gradient(f, &p.x, p.f, &cfg.egs_config(f.spec()), tag, eval_rng).map_err(wrap)?;
            pending.extend(s.evaluations);
            s.estimate
        }
    };
    Ok(estimate.condition_ok.then_some(estimate.g))
}

/// One iteration: gradient, velocity, position, evaluation and pbest per
/// particle in index order, then a single gbest update and the archive append.
///
/// Gradients read the archive as it stood at the start of the iteration.
/// Returns the number of objective evaluations made.
pub fn step<O: Objective + ?Sized>(
    state: &mut SwarmState,
    f: &O,
    archive: &mut EvaluationArchive,
    cfg: &PsoConfig,
) -> Result<usize, SwarmError> {
    let spec = f.spec();
    let n = spec.dimension;
    let iteration = state.iteration + 1;
    let want_gradient = cfg.uses_gradient() && state.iteration % cfg.gradient_every == 0;
    let wls = cfg.wls_config(spec);
    let mut pending = Vec::with_capacity(state.particles.len());
    let gbest_x = state.gbest_x.clone();

    for id in 0..state.particles.len() {
        let gradient = if want_gradient {
            estimate_gradient(
                f,
                &state.particles[id],
                id,
                state.iteration,
                archive,
                &wls,
                cfg,
                &mut state.eval_rng,
                &mut pending,
            )?
        } else {
            None
        };
        let (r1, r2) = draw_coefficients(&mut state.rng, n);
        let p = &state.particles[id];
        let mut v = velocity_update(p, &gbest_x, gradient.as_deref(), cfg, &r1, &r2);
        let x = position_update(&p.x, &mut v, cfg.dt, &spec.bounds);
        let fx = evaluate(f, &x, &mut state.eval_rng, id, iteration)?;
        pending.push(Evaluation {
            position: x.clone(),
            value: fx,
            iteration,
            particle_id: id,
            rng_draws: f.rng_draws(),
        });
        let p = &mut state.particles[id];
        if fx < p.pbest_f {
            p.pbest_f = fx;
            p.pbest_x = x.clone();
        }
        p.x = x;
        p.v = v;
        p.f = fx;
    }

    state.iteration = iteration;
    state.refresh_gbest();
    let made = pending.len();
    archive.extend(pending)?;
    Ok(made)
}

/// Runs from a fresh swarm until `max_iters` or until gbest improved by no
/// more than `stall_tol` (relative) over the last `stall_iters` iterations.
pub fn run<O: Objective + ?Sized>(f: &O, cfg: &PsoConfig) -> Result<RunResult, SwarmError> {
    run_with_state(f, cfg).map(|(r, _)| r)
}

/// As [`run`], also returning the final swarm.
pub fn run_with_state<O: Objective + ?Sized>(
    f: &O,
    cfg: &PsoConfig,
) -> Result<(RunResult, SwarmState), SwarmError> {
    let spec = f.spec();
    let policy = cfg
        .archive_capacity
        .map_or(CapacityPolicy::Unbounded, CapacityPolicy::Ring);
    let mut archive = EvaluationArchive::with_policy(spec.dimension, policy)?;
    let mut state = init_swarm(f, cfg, &mut archive)?;
    let mut evaluations = state.particles.len();
    let mut trace = vec![TraceRow::of(&state)];
    let mut history = vec![state.gbest_f];

    while state.iteration < cfg.max_iters {
        evaluations += step(&mut state, f, &mut archive, cfg)?;
        trace.push(TraceRow::of(&state));
        history.push(state.gbest_f);
        let k = state.iteration;
        if k > cfg.stall_iters {
            let reference = history[k - cfg.stall_iters];
            if reference - state.gbest_f <= cfg.stall_tol * reference.abs() {
                break;
            }
        }
    }

    let result = RunResult {
        gbest_x: state.gbest_x.clone(),
        gbest_f: state.gbest_f,
        iterations_done: state.iteration,
        gbest_found_at: state.gbest_found_at,
        mean_pbest_f: state.mean_pbest_f(),
        evaluations,
        trace,
        archive,
    };
    Ok((result, state))
}

/// CSV with header `iteration,gbest_f,mean_pbest_f`.
pub fn write_trace_csv<W: Write>(trace: &[TraceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "iteration,gbest_f,mean_pbest_f")?;
    for r in trace {
        writeln!(out, "{},{},{}", r.iteration, r.gbest_f, r.mean_pbest_f)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{Benchmark, BenchmarkObjective, ObjectiveError, ObjectiveSpec};
    use rand::RngCore;

    struct Func<F> {
        spec: ObjectiveSpec,
        f: F,
    }

    impl<F: Fn(&[f64]) -> f64 + Send + Sync> Func<F> {
        fn new(n: usize, half: f64, f: F) -> Self {
            Self {
                spec: ObjectiveSpec::new("test", vec![Interval::new(-half, half); n], false, None).unwrap(),
                f,
            }
        }
    }

    impl<F: Fn(&[f64]) -> f64 + Send + Sync> Objective for Func<F> {
        fn spec(&self) -> &ObjectiveSpec {
            &self.spec
        }
        fn evaluate(&self, x: &[f64], _rng: &mut dyn RngCore) -> Result<f64, ObjectiveError> {
            Ok((self.f)(x))
        }
    }

    fn particle(x: [f64; 2], v: [f64; 2], pbest: [f64; 2]) -> Particle {
        Particle {
            x: x.to_vec(),
            v: v.to_vec(),
            f: 0.0,
            pbest_x: pbest.to_vec(),
            pbest_f: 0.0,
        }
    }

    #[test]
    fn init_is_seeded_and_archived() {
        let f = BenchmarkObjective::new(Benchmark::Griewangk, 3).unwrap();
        let cfg = PsoConfig {
            swarm_size: 5,
            seed: 42,
            ..PsoConfig::default()
        };
        let mut a = EvaluationArchive::new(3);
        let s = init_swarm(&f, &cfg, &mut a).unwrap();
        assert_eq!(s.particles.len(), 5);
        assert_eq!(a.len(), 5);
        let min = s.particles.iter().map(|p| p.f).fold(f64::INFINITY, f64::min);
        assert_eq!(s.gbest_f, min);
        for p in &s.particles {
            for ((x, v), b) in p.x.iter().zip(&p.v).zip(&f.spec().bounds) {
                assert!(b.contains(*x));
                assert!(v.abs() <= b.width() / 10.0);
            }
        }
        let mut b = EvaluationArchive::new(3);
        assert_eq!(init_swarm(&f, &cfg, &mut b).unwrap(), s);
        assert_eq!(a, b);
    }

    #[test]
    fn velocity_examples() {
        let cfg = PsoConfig {
            w: 0.6,
            c1: 0.5,
            c2: 0.55,
            c3: 0.0,
            ..PsoConfig::default()
        };
        let p = particle([0.0, 0.0], [1.0, 0.0], [1.0, 1.0]);
        let v = velocity_update(&p, &[2.0, 0.0], None, &cfg, &[1.0; 2], &[1.0; 2]);
        assert!((v[0] - 2.2).abs() < 1e-15 && (v[1] - 0.5).abs() < 1e-15, "{v:?}");

        let zero = PsoConfig {
            w: 0.0,
            c1: 0.0,
            c2: 0.0,
            c3: 0.0,
            ..cfg.clone()
        };
        assert_eq!(velocity_update(&p, &[2.0, 0.0], Some(&[5.0, 5.0]), &zero, &[0.3; 2], &[0.7; 2]), vec![0.0; 2]);
        let inertia = PsoConfig { w: 1.0, ..zero.clone() };
        assert_eq!(velocity_update(&p, &[2.0, 0.0], None, &inertia, &[0.3; 2], &[0.7; 2]), p.v);

        // the gradient term points downhill
        let grad = PsoConfig { c3: 0.5, ..zero };
        assert_eq!(velocity_update(&p, &[2.0, 0.0], Some(&[2.0, -4.0]), &grad, &[0.0; 2], &[0.0; 2]), vec![-1.0, 2.0]);

        let clamped = PsoConfig {
            v_max: Some(vec![1.0, 1.0]),
            ..cfg
        };
        assert_eq!(velocity_update(&p, &[2.0, 0.0], None, &clamped, &[1.0; 2], &[1.0; 2]), vec![1.0, 0.5]);
    }

    #[test]
    fn position_examples() {
        let b = vec![Interval::new(-2.0, 2.0); 2];
        let mut v = vec![0.5, -0.25];
        assert_eq!(position_update(&[1.0, 1.0], &mut v, 1.0, &b), vec![1.5, 0.75]);
        assert_eq!(v, vec![0.5, -0.25]);

        let mut v = vec![0.0, 0.0];
        assert_eq!(position_update(&[1.0, 1.0], &mut v, 1.0, &b), vec![1.0, 1.0]);

        let mut v = vec![3.0, -0.5];
        assert_eq!(position_update(&[1.0, 1.0], &mut v, 1.0, &b), vec![2.0, 0.5]);
        assert_eq!(v, vec![0.0, -0.5]);

        let mut v = vec![-1.0, 0.0];
        assert_eq!(position_update(&[-1.5, 0.0], &mut v, 2.0, &b), vec![-2.0, 0.0]);
        assert_eq!(v, vec![0.0, 0.0]);
    }

    #[test]
    fn gbest_never_worsens_and_box_holds() {
        let f = BenchmarkObjective::new(Benchmark::Dropwave, 2).unwrap();
        let cfg = PsoConfig {
            seed: 3,
            max_iters: 60,
            ..PsoConfig::default()
        };
        let mut a = EvaluationArchive::new(2);
        let mut s = init_swarm(&f, &cfg, &mut a).unwrap();
        let mut last = s.gbest_f;
        for _ in 0..60 {
            let before = a.len();
            let made = step(&mut s, &f, &mut a, &cfg).unwrap();
            assert_eq!(made, cfg.swarm_size);
            assert_eq!(a.len(), before + made);
            assert!(s.gbest_f <= last);
            last = s.gbest_f;
            let min = s.particles.iter().map(|p| p.pbest_f).fold(f64::INFINITY, f64::min);
            assert_eq!(s.gbest_f, min);
            assert!(s.gbest_found_at <= s.iteration);
            for p in &s.particles {
                assert!(p.pbest_f <= p.f);
                assert!(p.x.iter().zip(&f.spec().bounds).all(|(x, b)| b.contains(*x)));
            }
        }
    }

    #[test]
    fn constant_objective_stalls() {
        let f = Func::new(2, 1.0, |_| 4.0);
        let cfg = PsoConfig {
            stall_iters: 7,
            max_iters: 100,
            ..PsoConfig::default()
        };
        let r = run(&f, &cfg).unwrap();
        assert_eq!(r.iterations_done, 8);
        assert_eq!(r.gbest_f, 4.0);
        assert_eq!(r.gbest_found_at, 0);
        assert_eq!(r.trace.len(), 9);

        let short = PsoConfig { max_iters: 3, ..cfg };
        assert_eq!(run(&f, &short).unwrap().iterations_done, 3);
    }

    #[test]
    fn c3_zero_matches_classic() {
        let f = BenchmarkObjective::new(Benchmark::GriewangkNoise, 2).unwrap();
        let base = PsoConfig {
            seed: 9,
            max_iters: 40,
            ..PsoConfig::default()
        };
        for est in [Estimator::Wls, Estimator::Fd, Estimator::Egs] {
            let a = run(&f, &PsoConfig { c3: 0.0, estimator: est, ..base.clone() }).unwrap();
            let b = run(&f, &base.classic()).unwrap();
            assert_eq!(a.archive, b.archive);
            assert_eq!(a.gbest_x, b.gbest_x);
        }
    }

    #[test]
    fn gradient_only_swarm_descends() {
        let f = Func::new(2, 10.0, |x| x.iter().map(|v| v * v).sum());
        let cfg = PsoConfig {
            swarm_size: 2,
            w: 0.0,
            c1: 0.0,
            c2: 0.0,
            c3: 0.3,
            estimator: Estimator::Fd,
            seed: 1,
            ..PsoConfig::default()
        };
        let mut a = EvaluationArchive::new(2);
        let mut s = init_swarm(&f, &cfg, &mut a).unwrap();
        let norm = |s: &SwarmState| s.particles[0].x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut last = norm(&s);
        for _ in 0..30 {
            step(&mut s, &f, &mut a, &cfg).unwrap();
            let now = norm(&s);
            assert!(now < last, "{now} !< {last}");
            last = now;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn runs_are_reproducible() {
        let f = BenchmarkObjective::new(Benchmark::GriewangkNoise, 2).unwrap();
        for est in [Estimator::Wls, Estimator::Fd, Estimator::Egs] {
            let cfg = PsoConfig {
                seed: 5,
                max_iters: 20,
                estimator: est,
                ..PsoConfig::default()
            };
            let a = run(&f, &cfg).unwrap();
            let b = run(&f, &cfg).unwrap();
            assert_eq!(a.archive, b.archive);
            assert_eq!(a.gbest_f.to_bits(), b.gbest_f.to_bits());
            assert_eq!(a.evaluations, a.archive.len());
        }
    }

    #[test]
    fn trace_csv_header() {
        let f = Func::new(1, 1.0, |x| x[0]);
        let r = run(&f, &PsoConfig { max_iters: 2, ..PsoConfig::default() }).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&r.trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iteration,gbest_f,mean_pbest_f\n0,"));
        assert_eq!(text.lines().count(), 4);
    }
}
