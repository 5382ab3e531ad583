use std::io::Write;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bins: Vec<Bin>,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

/// Running mean and sample standard deviation (Welford).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, v) in values.iter().enumerate() {
        let d = v - mean;
        mean += d / (k + 1) as f64;
        m2 += d * (v - mean);
    }
    let std = if values.len() > 1 {
        (m2 / (values.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Equal-width bins over `[min, max]`; the last bin is closed. A zero-width
/// range gives a single bin.
pub fn histogram_gbest(values: &[f64], bins: usize) -> Option<Histogram> {
    if values.is_empty() || bins == 0 || values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mean, std) = mean_std(values);
    let bins = if hi > lo { bins } else { 1 };
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<Bin> = (0..bins)
        .map(|i| Bin {
            lo: lo + width * i as f64,
            hi: if i + 1 == bins { hi } else { lo + width * (i + 1) as f64 },
            count: 0,
        })
        .collect();
    for v in values {
        let i = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        out[i].count += 1;
    }
    Some(Histogram { bins: out, mean, std })
}

/// CSV with header `bin_lo,bin_hi,count,mean,std`.
pub fn write_histogram_csv<W: Write>(h: &Histogram, mut out: W) -> std::io::Result<()> {
    writeln!(out, "bin_lo,bin_hi,count,mean,std")?;
    for b in &h.bins {
        writeln!(out, "{},{},{},{},{}", b.lo, b.hi, b.count, h.mean, h.std)?;
    }
    Ok(())
}
