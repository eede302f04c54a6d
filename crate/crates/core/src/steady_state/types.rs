use std::fmt;

use crate::error::{domain, Error, Result};
use crate::ideal::RationalPowerFactor;

/// SINR threshold for capture, kept both in dB and in linear scale.
///
/// When the linear value is an exact rational (integer dB decades, or a ratio
/// given explicitly) the lattice model floors `level / T` in integer
/// arithmetic instead of floating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureRatio {
    db: f64,
    linear: f64,
    exact: Option<(u64, u64)>,
}

impl CaptureRatio {
    pub fn from_db(db: f64) -> Result<Self> {
        if !db.is_finite() {
            return domain(format!("capture ratio must be finite, got {db} dB"));
        }
        let linear = 10f64.powf(db / 10.0);
        let decades = db / 10.0;
        let exact = if decades.fract() == 0.0 && decades.abs() <= 18.0 {
            let n = decades.abs() as u32;
            let p = 10u64.pow(n);
            if decades >= 0.0 {
                Some((p, 1))
            } else {
                Some((1, p))
            }
        } else {
            None
        };
        let linear = match exact {
            Some((n, d)) => n as f64 / d as f64,
            None => linear,
        };
        Ok(Self { db, linear, exact })
    }

    pub fn from_linear(linear: f64) -> Result<Self> {
        if !(linear > 0.0) || !linear.is_finite() {
            return domain(format!("capture ratio must be positive, got {linear}"));
        }
        let exact = if linear.fract() == 0.0 && linear <= 1e15 {
            Some((linear as u64, 1))
        } else {
            None
        };
        Ok(Self {
            db: 10.0 * linear.log10(),
            linear,
            exact,
        })
    }

    /// Threshold `numerator / denominator`, floored exactly by the lattice model.
    pub fn from_ratio(numerator: u64, denominator: u64) -> Result<Self> {
        if numerator == 0 || denominator == 0 {
            return domain("capture ratio numerator and denominator must be positive");
        }
        let linear = numerator as f64 / denominator as f64;
        Ok(Self {
            db: 10.0 * linear.log10(),
            linear,
            exact: Some((numerator, denominator)),
        })
    }

    pub fn db(&self) -> f64 {
        self.db
    }

    pub fn linear(&self) -> f64 {
        self.linear
    }

    /// `floor(level / T)`: the largest integer interference a packet at `level` survives.
    pub fn floor_quotient(&self, level: u64) -> u64 {
        match self.exact {
            Some((num, den)) => ((level as u128 * den as u128) / num as u128) as u64,
            None => {
                let r = level as f64 / self.linear;
                (r + 1e-12 * r.max(1.0)).floor() as u64
            }
        }
    }
}

/// Which interference model evaluates the per-attempt failure probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// Perfect power control, integer-lattice interference.
    Ideal,
    /// Lognormal power-control error, continuous interference.
    Wideband,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Ideal => "ideal",
            Model::Wideband => "wideband",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PowerFactor {
    Rational(RationalPowerFactor),
    Real(f64),
}

/// One model configuration.
///
/// The reference received power does not appear: every model works with
/// powers normalised by it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    alpha: f64,
    max_retx: usize,
    power: PowerFactor,
    capture: CaptureRatio,
    sigma_db: f64,
    slot_time: f64,
}

impl Scenario {
    /// Perfect power control with a rational power factor `v = l / m`.
    pub fn ideal(
        alpha: f64,
        max_retx: usize,
        factor: RationalPowerFactor,
        capture: CaptureRatio,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            alpha,
            max_retx,
            power: PowerFactor::Rational(factor),
            capture,
            sigma_db: 0.0,
            slot_time: 1.0,
        })
    }

    /// Lognormal power-control error with standard deviation `sigma_db > 0`.
    pub fn wideband(
        alpha: f64,
        max_retx: usize,
        v: f64,
        capture: CaptureRatio,
        sigma_db: f64,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        if !(v > 0.0) || !v.is_finite() {
            return domain(format!("power factor v must be positive, got {v}"));
        }
        if sigma_db == 0.0 {
            return Err(Error::UseIdealModel);
        }
        if !(sigma_db > 0.0) || !sigma_db.is_finite() {
            return domain(format!("sigma_db must be positive, got {sigma_db}"));
        }
        Ok(Self {
            alpha,
            max_retx,
            power: PowerFactor::Real(v),
            capture,
            sigma_db,
            slot_time: 1.0,
        })
    }

    pub fn with_slot_time(mut self, slot_time: f64) -> Result<Self> {
        if !(slot_time > 0.0) || !slot_time.is_finite() {
            return domain(format!("slot time must be positive, got {slot_time}"));
        }
        self.slot_time = slot_time;
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        self.alpha = alpha;
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn max_retx(&self) -> usize {
        self.max_retx
    }

    pub fn v(&self) -> f64 {
        match self.power {
            PowerFactor::Rational(r) => r.value(),
            PowerFactor::Real(v) => v,
        }
    }

    pub fn rational_factor(&self) -> Option<RationalPowerFactor> {
        match self.power {
            PowerFactor::Rational(r) => Some(r),
            PowerFactor::Real(_) => None,
        }
    }

    pub fn capture(&self) -> CaptureRatio {
        self.capture
    }

    pub fn sigma_db(&self) -> f64 {
        self.sigma_db
    }

    pub fn slot_time(&self) -> f64 {
        self.slot_time
    }

    pub fn model(&self) -> Model {
        match self.power {
            PowerFactor::Rational(_) => Model::Ideal,
            PowerFactor::Real(_) => Model::Wideband,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return domain(format!("arrival rate alpha must be finite and >= 0, got {alpha}"));
    }
    Ok(())
}

/// Steady-state probabilities `<P_0, ..., P_{K+1}>` that a packet makes at
/// least k retransmissions.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    /// The iteration seed `<1, 0, ..., 0>` for `max_retx` retransmissions.
    pub fn initial(max_retx: usize) -> Self {
        let mut v = vec![0.0; max_retx + 2];
        v[0] = 1.0;
        Self(v)
    }

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return domain("probability vector needs at least P_0 and P_1");
        }
        if values[0] != 1.0 {
            return domain(format!("P_0 must be 1, got {}", values[0]));
        }
        for (k, pair) in values.windows(2).enumerate() {
            let (a, b) = (pair[0], pair[1]);
            if !(0.0..=1.0).contains(&b) || b > a + 1e-12 {
                return domain(format!(
                    "P_{} = {b} must lie in [0, P_{k}] = [0, {a}]",
                    k + 1
                ));
            }
        }
        Ok(Self(values))
    }

    /// Builds `P_{k+1} = P_k Q_k` from `P_0 = 1`.
    pub fn from_failures(q: &QVector) -> Self {
        let mut values = Vec::with_capacity(q.len() + 1);
        let mut p = 1.0;
        values.push(p);
        for &qk in q.values() {
            p *= qk;
            values.push(p);
        }
        Self(values)
    }

    pub fn max_retx(&self) -> usize {
        self.0.len() - 2
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// `P_0 .. P_K`, the per-class transmission probabilities.
    pub fn transmitting(&self) -> &[f64] {
        &self.0[..self.0.len() - 1]
    }

    /// `P_{K+1}`, the packet loss rate.
    pub fn loss(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Sum of `P_0 .. P_K`.
    pub fn transmitting_mass(&self) -> f64 {
        self.transmitting().iter().sum()
    }

    pub(crate) fn unchecked(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub(crate) fn sup_distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn blend(&self, target: &Self, weight: f64) -> Self {
        Self(
            self.0
                .iter()
                .zip(&target.0)
                .map(|(a, b)| a + weight * (b - a))
                .collect(),
        )
    }
}

/// Per-attempt failure probabilities `<Q_0, ..., Q_K>`.
#[derive(Debug, Clone, PartialEq)]
pub struct QVector(Vec<f64>);

impl QVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((k, q)) = values
            .iter()
            .enumerate()
            .find(|(_, q)| !(0.0..=1.0).contains(*q))
        {
            return domain(format!("Q_{k} = {q} is not a probability"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capture_ratio_from_db() {
        let t = CaptureRatio::from_db(3.0).unwrap();
        assert!((t.linear() - 1.9952623149688795).abs() < 1e-15);
        assert_eq!(t.floor_quotient(1), 0);
        assert_eq!(t.floor_quotient(16), 8);
        let zero = CaptureRatio::from_db(0.0).unwrap();
        assert_eq!(zero.linear(), 1.0);
        assert_eq!(zero.floor_quotient(4), 4);
        let minus = CaptureRatio::from_db(-3.0).unwrap();
        assert_eq!(minus.floor_quotient(1), 1);
        assert_eq!(minus.floor_quotient(16), 31);
        let tenth = CaptureRatio::from_db(-10.0).unwrap();
        assert_eq!(tenth.floor_quotient(3), 30);
    }

    #[test]
    fn exact_floor_at_ties() {
        let two = CaptureRatio::from_linear(2.0).unwrap();
        assert_eq!(two.floor_quotient(1), 0);
        assert_eq!(two.floor_quotient(2), 1);
        assert_eq!(two.floor_quotient(16), 8);
        // 21 / (3/17) = 119, but 21.0 / (3.0 / 17.0) rounds to 118.99999999999999
        assert_eq!((21.0 / (3.0f64 / 17.0)).floor(), 118.0);
        let r = CaptureRatio::from_ratio(3, 17).unwrap();
        assert_eq!(r.floor_quotient(21), 119);
        let nudged = CaptureRatio::from_linear(3.0 / 17.0).unwrap();
        assert_eq!(nudged.floor_quotient(21), 119);
    }

    #[test]
    fn wideband_refuses_zero_sigma() {
        let t = CaptureRatio::from_db(3.0).unwrap();
        assert_eq!(
            Scenario::wideband(0.5, 4, 1.0, t, 0.0),
            Err(Error::UseIdealModel)
        );
        assert!(Scenario::wideband(0.5, 4, -1.0, t, 1.0).is_err());
        assert!(Scenario::wideband(-0.5, 4, 1.0, t, 1.0).is_err());
    }

    #[test]
    fn probability_vector_checks() {
        assert!(ProbabilityVector::new(vec![1.0, 0.5, 0.25]).is_ok());
        assert!(ProbabilityVector::new(vec![0.9, 0.5, 0.25]).is_err());
        assert!(ProbabilityVector::new(vec![1.0, 0.5, 0.75]).is_err());
        let p = ProbabilityVector::initial(4);
        assert_eq!(p.values(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.transmitting().len(), 5);
        let q = QVector::new(vec![0.5, 0.5]).unwrap();
        let p = ProbabilityVector::from_failures(&q);
        assert_eq!(p.values(), &[1.0, 0.5, 0.25]);
        assert_eq!(p.loss(), 0.25);
        assert!(QVector::new(vec![1.1]).is_err());
    }
}
