use std::collections::VecDeque;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::objective::Evaluation;

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("record has dimension {actual}, archive holds dimension {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("record from iteration {got} appended after iteration {last}")]
    OutOfOrder { last: usize, got: usize },
    #[error("archive dimension must be at least 1")]
    ZeroDimension,
    #[error("ring capacity must be at least 1")]
    ZeroCapacity,
    #[error("archive CSV line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapacityPolicy {
    Unbounded,
    /// Keeps the newest `M` records.
    Ring(usize),
}

/// Append-only history of every evaluation made during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationArchive {
    dimension: usize,
    policy: CapacityPolicy,
    records: VecDeque<Evaluation>,
}

impl EvaluationArchive {
    pub fn new(dimension: usize) -> Self {
        Self::with_policy(dimension, CapacityPolicy::Unbounded).expect("unbounded policy is valid")
    }

    pub fn with_policy(dimension: usize, policy: CapacityPolicy) -> Result<Self, ArchiveError> {
        if dimension == 0 {
            return Err(ArchiveError::ZeroDimension);
        }
        if policy == CapacityPolicy::Ring(0) {
            return Err(ArchiveError::ZeroCapacity);
        }
        Ok(Self {
            dimension,
            policy,
            records: VecDeque::new(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn policy(&self) -> CapacityPolicy {
        self.policy
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn append(&mut self, eval: Evaluation) -> Result<(), ArchiveError> {
        if eval.position.len() != self.dimension {
            return Err(ArchiveError::DimensionMismatch {
                expected: self.dimension,
                actual: eval.position.len(),
            });
        }
        if let Some(last) = self.records.back() {
            if eval.iteration < last.iteration {
                return Err(ArchiveError::OutOfOrder {
                    last: last.iteration,
                    got: eval.iteration,
                });
            }
        }
        if let CapacityPolicy::Ring(cap) = self.policy {
            while self.records.len() >= cap {
                self.records.pop_front();
            }
        }
        self.records.push_back(eval);
        Ok(())
    }

    pub fn extend<I: IntoIterator<Item = Evaluation>>(&mut self, evals: I) -> Result<(), ArchiveError> {
        evals.into_iter().try_for_each(|e| self.append(e))
    }

    pub fn records(&self) -> impl ExactSizeIterator<Item = &Evaluation> + DoubleEndedIterator {
        self.records.iter()
    }

    /// The newest `max` records (all of them when `max` is `None`), oldest first.
    pub fn window(&self, max: Option<usize>) -> impl ExactSizeIterator<Item = &Evaluation> {
        let skip = max.map_or(0, |m| self.records.len().saturating_sub(m));
        self.records.range(skip..)
    }

    pub fn get(&self, i: usize) -> Option<&Evaluation> {
        self.records.get(i)
    }

    /// CSV with header `iteration,particle_id,x_1,...,x_n,f`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), ArchiveError> {
        let coords: Vec<String> = (1..=self.dimension).map(|i| format!("x_{i}")).collect();
        writeln!(out, "iteration,particle_id,{},f", coords.join(","))?;
        for r in &self.records {
            write!(out, "{},{}", r.iteration, r.particle_id)?;
            for v in &r.position {
                write!(out, ",{v}")?;
            }
            writeln!(out, ",{}", r.value)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, ArchiveError> {
        let mut lines = input.lines();
        let header = lines.next().ok_or(ArchiveError::Parse {
            line: 1,
            msg: "missing header".into(),
        })??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        let n = cols.len().saturating_sub(3);
        let expected: Vec<String> = ["iteration".to_string(), "particle_id".to_string()]
            .into_iter()
            .chain((1..=n).map(|i| format!("x_{i}")))
            .chain(std::iter::once("f".to_string()))
            .collect();
        if n == 0 || cols != expected.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(ArchiveError::Parse {
                line: 1,
                msg: format!("unexpected header `{header}`"),
            });
        }
        let mut archive = Self::new(n);
        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != n + 3 {
                return Err(ArchiveError::Parse {
                    line: line_no,
                    msg: format!("expected {} fields, found {}", n + 3, fields.len()),
                });
            }
            let bad = |msg: String| ArchiveError::Parse { line: line_no, msg };
            let iteration = fields[0].parse().map_err(|e| bad(format!("iteration: {e}")))?;
            let particle_id = fields[1].parse().map_err(|e| bad(format!("particle_id: {e}")))?;
            let position = fields[2..2 + n]
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| bad(format!("coordinate: {e}")))?;
            let value = fields[n + 2].parse().map_err(|e| bad(format!("f: {e}")))?;
            archive
                .append(Evaluation {
                    position,
                    value,
                    iteration,
                    particle_id,
                    rng_draws: 0,
                })
                .map_err(|e| bad(e.to_string()))?;
        }
        Ok(archive)
    }
}
