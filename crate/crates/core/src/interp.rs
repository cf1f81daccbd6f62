//! One-dimensional interpolation on strictly increasing abscissae.

use crate::error::{Error, Result};
use crate::scalar::Real;

fn check_abscissae<T: Real>(xs: &[T], ys: &[T], min_len: usize) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!(
            "{} abscissae but {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < min_len {
        return Err(Error::InvalidInput(format!(
            "need at least {min_len} points, got {}",
            xs.len()
        )));
    }
    crate::grid::check_finite(xs)?;
    crate::grid::check_finite(ys)?;
    if let Some(i) = xs.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(format!(
            "abscissae must be strictly increasing (index {})",
            i + 1
        )));
    }
    Ok(())
}

/// Index `k` with `xs[k] <= x < xs[k+1]`, clamped to a valid segment.
fn segment<T: Real>(xs: &[T], x: T) -> usize {
    let k = xs.partition_point(|&v| v <= x);
    k.saturating_sub(1).min(xs.len() - 2)
}

/// Piecewise-linear interpolant with a constant `fill` outside `[xs[0], xs[last]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T> {
    xs: Vec<T>,
    ys: Vec<T>,
}

impl<T: Real> Linear<T> {
    pub fn new(xs: Vec<T>, ys: Vec<T>) -> Result<Self> {
        check_abscissae(&xs, &ys, 2)?;
        Ok(Self { xs, ys })
    }

    pub fn domain(&self) -> (T, T) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Value at `x`, or `None` outside the tabulated range.
    pub fn eval(&self, x: T) -> Option<T> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let k = segment(&self.xs, x);
        let t = (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
        Some(self.ys[k] + t * (self.ys[k + 1] - self.ys[k]))
    }

    pub fn eval_or(&self, x: T, fill: T) -> T {
        self.eval(x).unwrap_or(fill)
    }

    /// Value at `x`, holding the end values outside the range.
    pub fn eval_clamped(&self, x: T) -> T {
        let (lo, hi) = self.domain();
        self.eval(x.max(lo).min(hi)).unwrap_or(self.ys[0])
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip<T> {
    xs: Vec<T>,
    ys: Vec<T>,
    slopes: Vec<T>,
}

impl<T: Real> Pchip<T> {
    pub fn new(xs: Vec<T>, ys: Vec<T>) -> Result<Self> {
        check_abscissae(&xs, &ys, 2)?;
        let n = xs.len();
        let h: Vec<T> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<T> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
        let mut slopes = vec![T::zero(); n];
        if n == 2 {
            slopes[0] = delta[0];
            slopes[1] = delta[0];
            return Ok(Self { xs, ys, slopes });
        }
        let two = T::lit(2.0);
        for k in 1..n - 1 {
            let (d0, d1) = (delta[k - 1], delta[k]);
            if d0 == T::zero() || d1 == T::zero() || (d0 > T::zero()) != (d1 > T::zero()) {
                slopes[k] = T::zero();
            } else {
                let w1 = two * h[k] + h[k - 1];
                let w2 = h[k] + two * h[k - 1];
                slopes[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
            }
        }
        slopes[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
        slopes[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Ok(Self { xs, ys, slopes })
    }

    pub fn domain(&self) -> (T, T) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Value at `x`, or `None` outside the tabulated range.
    pub fn eval(&self, x: T) -> Option<T> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let k = segment(&self.xs, x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let (one, two, three) = (T::one(), T::lit(2.0), T::lit(3.0));
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = two * t3 - three * t2 + one;
        let h10 = t3 - two * t2 + t;
        let h01 = -two * t3 + three * t2;
        let h11 = t3 - t2;
        Some(
            h00 * self.ys[k]
                + h10 * h * self.slopes[k]
                + h01 * self.ys[k + 1]
                + h11 * h * self.slopes[k + 1],
        )
    }
}

fn edge_slope<T: Real>(h0: T, h1: T, d0: T, d1: T) -> T {
    let two = T::lit(2.0);
    let d = ((two * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() || d0 == T::zero() {
        T::zero()
    } else if d0.signum() != d1.signum() && d.abs() > T::lit(3.0) * d0.abs() {
        T::lit(3.0) * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_reproduces_lines_and_fills() {
        let f = Linear::new(vec![0.0, 1.0, 3.0], vec![1.0, 3.0, 7.0]).unwrap();
        assert_eq!(f.eval(0.5), Some(2.0));
        assert_eq!(f.eval(2.0), Some(5.0));
        assert_eq!(f.eval(3.0), Some(7.0));
        assert_eq!(f.eval(3.5), None);
        assert_eq!(f.eval_or(-1.0, 0.0), 0.0);
        assert_eq!(f.eval_clamped(10.0), 7.0);
    }

    #[test]
    fn pchip_hits_knots_and_reproduces_lines() {
        let xs = vec![0.0, 0.5, 1.7, 2.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let f = Pchip::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((f.eval(*x).unwrap() - y).abs() < 1e-14);
        }
        for x in [0.1, 1.0, 2.9, 3.99] {
            assert!((f.eval(x).unwrap() - (2.0 * x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn pchip_preserves_monotonicity_and_extrema() {
        let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = vec![0.0, 0.0, 1.0, 1.0, 0.2, 0.0];
        let f = Pchip::new(xs, ys).unwrap();
        let mut prev = f.eval(2.0).unwrap();
        for i in 1..=300 {
            let x = 2.0 + 3.0 * i as f64 / 300.0;
            let y = f.eval(x).unwrap();
            assert!(y <= prev + 1e-15);
            assert!((-1e-15..=1.0 + 1e-15).contains(&y));
            prev = y;
        }
        for i in 0..=100 {
            assert!(f.eval(i as f64 / 100.0).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(Pchip::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(Linear::new(vec![0.0], vec![1.0]).is_err());
        assert!(Linear::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(Pchip::new(vec![0.0, f64::NAN], vec![1.0, 2.0]).is_err());
    }
}
