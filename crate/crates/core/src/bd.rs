//! Bjøntegaard delta rate and PSNR between two rate-distortion curves.
//!
//! Each curve is fitted with a least-squares cubic (quality against log10
//! rate for the PSNR delta, log10 rate against quality for the rate delta);
//! the fitted difference is averaged over the overlapping interval with the
//! trapezoidal rule on [`INTEGRATION_SAMPLES`] points.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const INTEGRATION_SAMPLES: usize = 1000;
pub const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
  /// Bits (or kbps); must be positive.
  pub rate: f64,
  /// PSNR in dB; must be finite.
  pub psnr: f64,
}

impl RdPoint {
  pub const fn new(rate: f64, psnr: f64) -> Self {
    Self { rate, psnr }
  }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdResult {
  /// Average rate difference of the test curve at equal quality, percent.
  /// Negative means the test curve needs fewer bits.
  pub delta_rate: f64,
  /// Average quality difference of the test curve at equal rate, dB.
  pub delta_psnr: f64,
  /// log10-rate interval used for `delta_psnr`.
  pub rate_interval: (f64, f64),
  /// PSNR interval used for `delta_rate`.
  pub psnr_interval: (f64, f64),
}

fn validate(curve: &[RdPoint]) -> Result<()> {
  if curve.len() < MIN_POINTS {
    return Err(Error::TooFewPoints(curve.len()));
  }
  for p in curve {
    if !(p.rate > 0.0 && p.rate.is_finite() && p.psnr.is_finite()) {
      return Err(Error::NonMonotone(format!(
        "point ({}, {}) needs a positive finite rate and finite PSNR",
        p.rate, p.psnr
      )));
    }
  }
  for w in curve.windows(2) {
    if !(w[1].rate > w[0].rate && w[1].psnr > w[0].psnr) {
      return Err(Error::NonMonotone(format!(
        "({}, {}) then ({}, {})",
        w[0].rate, w[0].psnr, w[1].rate, w[1].psnr
      )));
    }
  }
  Ok(())
}

/// Least-squares cubic, fitted on a centred and scaled abscissa.
struct Cubic {
  coeffs: [f64; 4],
  centre: f64,
  scale: f64,
}

impl Cubic {
  fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
    let centre = xs.iter().sum::<f64>() / xs.len() as f64;
    let scale = xs.iter().map(|x| (x - centre).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let n = xs.len();
    let a = DMatrix::from_fn(n, 4, |i, j| ((xs[i] - centre) / scale).powi(j as i32));
    let b = DVector::from_column_slice(ys);
    let c = a
      .svd(true, true)
      .solve(&b, 1e-12)
      .map_err(|e| Error::Parse(format!("cubic fit failed: {e}")))?;
    Ok(Self { coeffs: [c[0], c[1], c[2], c[3]], centre, scale })
  }

  fn eval(&self, x: f64) -> f64 {
    let t = (x - self.centre) / self.scale;
    self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
  }
}

/// Mean of `f` over `[lo, hi]` by the trapezoidal rule.
fn mean_over(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
  let n = INTEGRATION_SAMPLES;
  let step = (hi - lo) / (n - 1) as f64;
  let mut sum = 0.0;
  for i in 0..n {
    let x = if i == n - 1 { hi } else { lo + step * i as f64 };
    let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    sum += w * f(x);
  }
  sum * step / (hi - lo)
}

fn overlap(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
  let lo = a[0].max(b[0]);
  let hi = a[a.len() - 1].min(b[b.len() - 1]);
  if lo >= hi {
    return Err(Error::EmptyOverlap);
  }
  Ok((lo, hi))
}

/// Deltas of `test` relative to `reference`. Both curves must be sorted by
/// rate and strictly increasing in rate and PSNR.
pub fn bd_delta(reference: &[RdPoint], test: &[RdPoint]) -> Result<BdResult> {
  validate(reference)?;
  validate(test)?;
  let log_rate = |c: &[RdPoint]| c.iter().map(|p| p.rate.log10()).collect::<Vec<_>>();
  let quality = |c: &[RdPoint]| c.iter().map(|p| p.psnr).collect::<Vec<_>>();
  let (ra, rb) = (log_rate(reference), log_rate(test));
  let (qa, qb) = (quality(reference), quality(test));

  let rate_interval = overlap(&ra, &rb)?;
  let psnr_interval = overlap(&qa, &qb)?;

  let fa = Cubic::fit(&ra, &qa)?;
  let fb = Cubic::fit(&rb, &qb)?;
  let delta_psnr = mean_over(rate_interval.0, rate_interval.1, |x| fb.eval(x) - fa.eval(x));

  let ga = Cubic::fit(&qa, &ra)?;
  let gb = Cubic::fit(&qb, &rb)?;
  let mean_log = mean_over(psnr_interval.0, psnr_interval.1, |q| gb.eval(q) - ga.eval(q));
  let delta_rate = (10f64.powf(mean_log) - 1.0) * 100.0;

  Ok(BdResult { delta_rate, delta_psnr, rate_interval, psnr_interval })
}
