use super::akima::Akima;
use super::metrics::PSNR_CAP;
use crate::error::{Error, Result};

/// Number of uniform samples for the trapezoidal BD integral.
pub const BD_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdPoint {
    /// Bits per pixel.
    pub rate: f64,
    /// dB, or any quality score where higher is better.
    pub quality: f64,
}

impl RdPoint {
    pub fn new(rate: f64, quality: f64) -> Self {
        RdPoint { rate, quality }
    }

    pub fn is_capped(&self) -> bool {
        self.quality >= PSNR_CAP
    }
}

/// At least four points with positive, strictly increasing rates.
#[derive(Debug, Clone, PartialEq)]
pub struct RdCurve {
    points: Vec<RdPoint>,
}

impl RdCurve {
    pub fn new(mut points: Vec<RdPoint>) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::InvalidInput(format!("RD curve needs 4 points, got {}", points.len())));
        }
        if points.iter().any(|p| !(p.rate > 0.0) || !p.rate.is_finite() || !p.quality.is_finite()) {
            return Err(Error::InvalidInput("RD point rates must be positive and finite".into()));
        }
        points.sort_by(|a, b| a.rate.total_cmp(&b.rate));
        if points.windows(2).any(|w| w[1].rate <= w[0].rate) {
            return Err(Error::InvalidInput("RD curve rates must be distinct".into()));
        }
        Ok(RdCurve { points })
    }

    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }

    /// log10(rate) as a function of quality over the uncapped points.
    fn log_rate_interpolant(&self) -> Result<Akima> {
        let mut pts: Vec<&RdPoint> = self.points.iter().filter(|p| !p.is_capped()).collect();
        if pts.len() < 4 {
            return Err(Error::InvalidInput(format!(
                "{} uncapped RD points, need 4",
                pts.len()
            )));
        }
        pts.sort_by(|a, b| a.quality.total_cmp(&b.quality));
        let qs: Vec<f64> = pts.iter().map(|p| p.quality).collect();
        let lr: Vec<f64> = pts.iter().map(|p| p.rate.log10()).collect();
        Akima::new(&qs, &lr)
            .map_err(|e| Error::InvalidInput(format!("RD curve qualities not distinct: {e}")))
    }
}

/// Average rate difference of `test` against `reference` in percent over
/// the common quality interval; negative means `test` needs fewer bits.
pub fn bd_rate(reference: &RdCurve, test: &RdCurve) -> Result<f64> {
    let a = reference.log_rate_interpolant()?;
    let b = test.log_rate_interpolant()?;
    let lo = a.domain().0.max(b.domain().0);
    let hi = a.domain().1.min(b.domain().1);
    if !(hi > lo) {
        return Err(Error::InvalidInput("RD curves have no quality overlap".into()));
    }
    let step = (hi - lo) / (BD_SAMPLES - 1) as f64;
    let mut diffs = Vec::with_capacity(BD_SAMPLES);
    for i in 0..BD_SAMPLES {
        let q = if i == BD_SAMPLES - 1 { hi } else { lo + step * i as f64 };
        diffs.push(b.eval(q)? - a.eval(q)?);
    }
    let integral: f64 =
        diffs.windows(2).map(|w| 0.5 * (w[0] + w[1]) * step).sum();
    let mean = integral / (hi - lo);
    Ok((10f64.powf(mean) - 1.0) * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn curve(pairs: &[(f64, f64)]) -> RdCurve {
        RdCurve::new(pairs.iter().map(|&(r, q)| RdPoint::new(r, q)).collect()).unwrap()
    }

    fn reference() -> RdCurve {
        curve(&[(0.5, 30.0), (1.0, 34.5), (2.0, 38.0), (4.0, 42.7), (6.0, 44.0)])
    }

    fn scaled(c: &RdCurve, f: f64) -> RdCurve {
        RdCurve::new(c.points().iter().map(|p| RdPoint::new(p.rate * f, p.quality)).collect()).unwrap()
    }

    #[test]
    fn identical_curves_are_zero() {
        assert!(bd_rate(&reference(), &reference()).unwrap().abs() < 1e-9);
    }

    #[test]
    fn uniform_inflation() {
        let r = reference();
        let t = scaled(&r, 1.1);
        assert!((bd_rate(&r, &t).unwrap() - 10.0).abs() < 0.01);
        assert!((bd_rate(&t, &r).unwrap() - (1.0 / 1.1 - 1.0) * 100.0).abs() < 0.01);
        assert!(bd_rate(&r, &scaled(&r, 0.8)).unwrap() < 0.0);
    }

    #[test]
    fn capped_points_are_excluded() {
        let r = curve(&[(0.5, 30.0), (1.0, 34.5), (2.0, 38.0), (4.0, 42.7), (9.0, PSNR_CAP)]);
        let t = curve(&[(0.55, 30.0), (1.1, 34.5), (2.2, 38.0), (4.4, 42.7), (8.0, PSNR_CAP)]);
        assert!((bd_rate(&r, &t).unwrap() - 10.0).abs() < 0.01);
        let too_few = curve(&[(0.5, 30.0), (1.0, 34.5), (2.0, 38.0), (4.0, PSNR_CAP)]);
        assert!(bd_rate(&too_few, &r).is_err());
    }

    #[test]
    fn validation() {
        assert!(RdCurve::new(vec![RdPoint::new(1.0, 30.0); 3]).is_err());
        assert!(RdCurve::new(vec![RdPoint::new(1.0, 30.0); 4]).is_err());
        assert!(RdCurve::new(vec![
            RdPoint::new(0.0, 1.0),
            RdPoint::new(1.0, 2.0),
            RdPoint::new(2.0, 3.0),
            RdPoint::new(3.0, 4.0)
        ])
        .is_err());
        let low = curve(&[(1.0, 10.0), (2.0, 11.0), (3.0, 12.0), (4.0, 13.0)]);
        let high = curve(&[(1.0, 20.0), (2.0, 21.0), (3.0, 22.0), (4.0, 23.0)]);
        assert!(bd_rate(&low, &high).is_err());
    }

    proptest! {
        #[test]
        fn self_comparison_and_constant_ratio(
            qs in proptest::collection::btree_set(0u32..1000, 4..9),
            f in 0.5f64..2.0,
        ) {
            let pts: Vec<RdPoint> = qs.iter().enumerate()
                .map(|(i, &q)| RdPoint::new(0.1 * (1.0 + i as f64).powf(1.7), 20.0 + q as f64 * 0.03))
                .collect();
            let c = RdCurve::new(pts).unwrap();
            prop_assert!(bd_rate(&c, &c).unwrap().abs() < 1e-9);
            prop_assert!((bd_rate(&c, &scaled(&c, f)).unwrap() - (f - 1.0) * 100.0).abs() < 1e-6);
        }
    }
}
