use std::fmt;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{domain, Result};

/// Quantities estimated by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimMetric {
    Plr,
    Throughput,
    EnergyEfficiency,
    AvgTransmissions,
}

impl SimMetric {
    pub const ALL: [SimMetric; 4] = [
        SimMetric::Plr,
        SimMetric::Throughput,
        SimMetric::EnergyEfficiency,
        SimMetric::AvgTransmissions,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SimMetric::Plr => "plr",
            SimMetric::Throughput => "throughput",
            SimMetric::EnergyEfficiency => "ee",
            SimMetric::AvgTransmissions => "avg_tx",
        }
    }
}

impl fmt::Display for SimMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Replication mean with a Student-t interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
    pub metric: SimMetric,
}

impl SimEstimate {
    pub fn from_samples(metric: SimMetric, samples: &[f64], level: f64) -> Result<Self> {
        let (ci_low, ci_high) = confidence_interval(samples, level)?;
        Ok(Self {
            mean: mean(samples),
            ci_low,
            ci_high,
            n: samples.len(),
            metric,
        })
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// `mean -/+ t_{n-1,(1+level)/2} s / sqrt(n)`.
pub fn confidence_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    let n = samples.len();
    if n < 2 {
        return domain(format!("a confidence interval needs 2 samples, got {n}"));
    }
    if !(level > 0.0 && level < 1.0) {
        return domain(format!("confidence level must lie in (0, 1), got {level}"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return domain("samples must be finite");
    }
    let m = mean(samples);
    let var = samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return Ok((m, m));
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map_err(|e| crate::Error::Domain(format!("t distribution: {e}")))?
        .inverse_cdf((1.0 + level) / 2.0);
    let half = t * (var / n as f64).sqrt();
    Ok((m - half, m + half))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_samples() {
        let (lo, hi) = confidence_interval(&[0.0, 2.0], 0.95).unwrap();
        assert!((lo + 11.706204736).abs() < 1e-6, "{lo}");
        assert!((hi - 13.706204736).abs() < 1e-6, "{hi}");
    }

    #[test]
    fn constant_samples() {
        assert_eq!(confidence_interval(&[0.3; 5], 0.95).unwrap(), (0.3, 0.3));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(confidence_interval(&[1.0], 0.95).is_err());
        assert!(confidence_interval(&[1.0, 2.0], 1.0).is_err());
        assert!(confidence_interval(&[1.0, f64::NAN], 0.9).is_err());
    }

    #[test]
    fn estimate_brackets_mean() {
        let e = SimEstimate::from_samples(SimMetric::Plr, &[0.1, 0.2, 0.4], 0.95).unwrap();
        assert!(e.ci_low <= e.mean && e.mean <= e.ci_high);
        assert!(e.contains(e.mean));
        assert_eq!(e.n, 3);
        assert_eq!(e.metric.to_string(), "plr");
    }
}
