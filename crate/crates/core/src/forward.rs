//! Cross-spectral density, mode matching and coincidence dips.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_finite, SpectralSeries, TimeGrid};
use crate::scalar::Real;
use crate::spectrum::{IntensitySpectrum, PhaseSpectrum};
use crate::transform::{evaluate_at_delay, forward_transform};

/// Photon statistics of the two incident wave packets.
///
/// Magnitudes are the relative coherent-state amplitudes `|A|`, `|A₁|`, `|A₂|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StateCombination<T> {
    SingleSingle,
    SingleCoherent { a: T },
    CoherentCoherent { a1: T, a2: T },
}

impl<T: Real> StateCombination<T> {
    pub fn single_coherent(a: T) -> Result<Self> {
        let c = Self::SingleCoherent { a };
        c.validate()?;
        Ok(c)
    }

    pub fn coherent_coherent(a1: T, a2: T) -> Result<Self> {
        let c = Self::CoherentCoherent { a1, a2 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: T| x.is_finite() && x > T::zero();
        match *self {
            Self::SingleSingle => Ok(()),
            Self::SingleCoherent { a } if ok(a) => Ok(()),
            Self::CoherentCoherent { a1, a2 } if ok(a1) && ok(a2) => Ok(()),
            _ => Err(Error::OutOfRange(
                "coherent amplitudes must be positive and finite".into(),
            )),
        }
    }

    /// `f` in `N_c = 1 − f·V`.
    pub fn visibility_factor(&self) -> T {
        let two = T::lit(2.0);
        match *self {
            Self::SingleSingle => T::one(),
            Self::SingleCoherent { a } => two / (a * a + two),
            Self::CoherentCoherent { a1, a2 } => {
                let (p1, p2) = (a1 * a1, a2 * a2);
                let cross = two * p1 * p2;
                cross / (cross + p1 * p1 + p2 * p2)
            }
        }
    }
}

/// Normalized coincidence samples at a set of delays.
#[derive(Debug, Clone, PartialEq)]
pub struct DipPattern<T> {
    delays: Vec<T>,
    nc: Vec<T>,
    std_errors: Option<Vec<T>>,
}

impl<T: Real> DipPattern<T> {
    pub fn new(delays: Vec<T>, nc: Vec<T>, std_errors: Option<Vec<T>>) -> Result<Self> {
        if delays.is_empty() {
            return Err(Error::InvalidInput("dip has no delay samples".into()));
        }
        if nc.len() != delays.len() || std_errors.as_ref().is_some_and(|s| s.len() != delays.len())
        {
            return Err(Error::InvalidInput(
                "dip columns have different lengths".into(),
            ));
        }
        check_finite(&delays)?;
        check_finite(&nc)?;
        if let Some(i) = delays.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(format!(
                "delays must be strictly increasing (index {})",
                i + 1
            )));
        }
        if let Some(i) = nc.iter().position(|v| *v < T::zero()) {
            return Err(Error::OutOfRange(format!(
                "negative normalized coincidence at index {i}"
            )));
        }
        if let Some(s) = &std_errors {
            check_finite(s)?;
        }
        Ok(Self {
            delays,
            nc,
            std_errors,
        })
    }

    pub fn delays(&self) -> &[T] {
        &self.delays
    }

    pub fn nc_values(&self) -> &[T] {
        &self.nc
    }

    pub fn std_errors(&self) -> Option<&[T]> {
        self.std_errors.as_deref()
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    /// Index of the smallest normalized coincidence.
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.nc.iter().enumerate() {
            if *v < self.nc[best] {
                best = i;
            }
        }
        best
    }
}

fn range_tolerance<T: Real>() -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(64.0))
}

fn check_visibility<T: Real>(v: &[T]) -> Result<()> {
    check_finite(v)?;
    let tol = range_tolerance::<T>();
    match v.iter().position(|x| *x < -tol || *x > T::one() + tol) {
        Some(i) => Err(Error::OutOfRange(format!(
            "mode-matching degree {} at index {i} is outside [0, 1]",
            v[i]
        ))),
        None => Ok(()),
    }
}

/// `g(ω) = √(I₁I₂)·exp(iΔφ)` from unit-area versions of both spectra.
pub fn cross_spectral_density<T: Real>(
    i1: &IntensitySpectrum<T>,
    i2: &IntensitySpectrum<T>,
    psd: &PhaseSpectrum<T>,
) -> Result<SpectralSeries<T>> {
    if i1.grid() != i2.grid() || i1.grid() != psd.grid() {
        return Err(Error::GridMismatch(
            "spectra and phase must share one frequency grid".into(),
        ));
    }
    let mag = crate::spectrum::equivalent_magnitude(i1, i2)?;
    let values = mag
        .iter()
        .zip(psd.values())
        .map(|(m, p)| {
            if *m > T::zero() {
                Complex::from_polar(*m, *p)
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
        .collect();
    SpectralSeries::new(*i1.grid(), values)
}

/// `V(τ_m) = |G(τ_m)|²` on the conjugate delay grid.
pub fn mode_matching<T: Real>(g: &SpectralSeries<T>) -> Result<(TimeGrid<T>, Vec<T>)> {
    let big = forward_transform(g)?;
    let v = big.values().iter().map(|z| z.norm_sqr()).collect();
    Ok((*big.grid(), v))
}

/// Probability of a coincidence per pulse pair for each `V`.
pub fn coincidence_probability<T: Real>(
    v: &[T],
    eta_a: T,
    eta_b: T,
    combo: StateCombination<T>,
) -> Result<Vec<T>> {
    combo.validate()?;
    for (name, eta) in [("eta_a", eta_a), ("eta_b", eta_b)] {
        if !(eta > T::zero() && eta <= T::one()) {
            return Err(Error::OutOfRange(format!("{name} = {eta} not in (0, 1]")));
        }
    }
    check_visibility(v)?;
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let eta = eta_a * eta_b;
    Ok(v.iter()
        .map(|x| {
            let x = x.max(T::zero()).min(T::one());
            match combo {
                StateCombination::SingleSingle => eta / two * (T::one() - x),
                StateCombination::SingleCoherent { a } => {
                    let p = a * a;
                    eta / four * (two * p * (T::one() - x) + p * p)
                }
                StateCombination::CoherentCoherent { a1, a2 } => {
                    let (p1, p2) = (a1 * a1, a2 * a2);
                    eta / four * (two * p1 * p2 * (T::one() - x) + p1 * p1 + p2 * p2)
                }
            }
        })
        .collect())
}

/// `N_c = 1 − f·V` at the given delays.
pub fn normalized_coincidence<T: Real>(
    delays: &[T],
    v: &[T],
    combo: StateCombination<T>,
) -> Result<DipPattern<T>> {
    combo.validate()?;
    check_visibility(v)?;
    if delays.len() != v.len() {
        return Err(Error::InvalidInput(format!(
            "{} delays but {} visibility samples",
            delays.len(),
            v.len()
        )));
    }
    let f = combo.visibility_factor();
    let nc = v
        .iter()
        .map(|x| T::one() - f * x.max(T::zero()).min(T::one()))
        .collect();
    DipPattern::new(delays.to_vec(), nc, None)
}

/// Noiseless dip at arbitrary delays, each evaluated by direct summation.
pub fn synthesize_dip<T: Real>(
    i1: &IntensitySpectrum<T>,
    i2: &IntensitySpectrum<T>,
    psd: &PhaseSpectrum<T>,
    combo: StateCombination<T>,
    delays: &[T],
) -> Result<DipPattern<T>> {
    check_finite(delays)?;
    let g = cross_spectral_density(i1, i2, psd)?;
    let v: Vec<T> = delays
        .iter()
        .map(|tau| T::lit(evaluate_at_delay(&g, tau.as_f64()).norm_sqr()))
        .collect();
    normalized_coincidence(delays, &v, combo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FrequencyGrid;

    #[test]
    fn visibility_factors() {
        assert_eq!(
            StateCombination::<f64>::SingleSingle.visibility_factor(),
            1.0
        );
        let sc = StateCombination::single_coherent(1.0f64).unwrap();
        assert!((sc.visibility_factor() - 2.0 / 3.0).abs() < 1e-15);
        let cc = StateCombination::coherent_coherent(1.0f64, 1.0).unwrap();
        assert!((cc.visibility_factor() - 0.5).abs() < 1e-15);
        let cc = StateCombination::coherent_coherent(1.0f64, 2.0).unwrap();
        assert!((cc.visibility_factor() - 8.0 / 25.0).abs() < 1e-15);
        assert!(StateCombination::coherent_coherent(0.0, 1.0).is_err());
        assert!(StateCombination::single_coherent(f64::NAN).is_err());
    }

    #[test]
    fn coincidence_probability_closed_forms() {
        let ss =
            coincidence_probability(&[1.0f64], 1.0, 1.0, StateCombination::SingleSingle).unwrap();
        assert_eq!(ss[0], 0.0);
        let sc = coincidence_probability(
            &[0.0f64],
            1.0,
            1.0,
            StateCombination::SingleCoherent { a: 1.0 },
        )
        .unwrap();
        assert!((sc[0] - 0.75).abs() < 1e-15);
        let cc = coincidence_probability(
            &[1.0f64],
            1.0,
            1.0,
            StateCombination::CoherentCoherent { a1: 1.0, a2: 1.0 },
        )
        .unwrap();
        assert!((cc[0] - 0.5).abs() < 1e-15);
        assert!(coincidence_probability(&[1.5], 1.0, 1.0, StateCombination::SingleSingle).is_err());
        assert!(coincidence_probability(&[0.5], 0.0, 1.0, StateCombination::SingleSingle).is_err());
    }

    #[test]
    fn normalized_coincidence_values() {
        let d = normalized_coincidence(
            &[0.0f64],
            &[1.0],
            StateCombination::CoherentCoherent { a1: 1.0, a2: 2.0 },
        )
        .unwrap();
        assert!((d.nc_values()[0] - 0.68).abs() < 1e-15);
    }

    #[test]
    fn csd_zero_where_intensity_vanishes() {
        let grid = FrequencyGrid::new(0.0, 1.0, 8).unwrap();
        let mut a = vec![1.0f64; 8];
        a[2] = 0.0;
        let i1 = IntensitySpectrum::new(grid, a).unwrap();
        let i2 = IntensitySpectrum::new(grid, vec![2.0; 8]).unwrap();
        let psd = PhaseSpectrum::new(grid, vec![0.7; 8]).unwrap();
        let g = cross_spectral_density(&i1, &i2, &psd).unwrap();
        assert_eq!(g.values()[2], Complex::new(0.0, 0.0));
        assert!((g.values()[0].arg() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn dip_pattern_validation() {
        assert!(DipPattern::new(vec![0.0, 0.0], vec![1.0, 1.0], None).is_err());
        assert!(DipPattern::new(vec![0.0, 1.0], vec![1.0, -0.1], None).is_err());
        assert!(DipPattern::new(vec![0.0, 1.0], vec![1.0], None).is_err());
        let d = DipPattern::new(vec![0.0f64, 1.0, 2.0], vec![1.0, 0.4, 0.9], None).unwrap();
        assert_eq!(d.argmin(), 1);
    }
}
