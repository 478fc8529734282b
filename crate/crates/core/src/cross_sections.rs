//! Empirical photodisintegration cross sections near threshold.
//!
//! Two parameterizations are provided: the total magnetic-dipole (singlet)
//! cross section just above threshold, and ratio fits that split the CMS
//! differential cross section
//!
//! ```text
//! dsigma/dOmega = a_M + a_E + (b_M + b_E) sin^2(Theta),   b_M = 0
//! ```
//!
//! into its singlet (M) and triplet (E) parts. Both fits are only trusted on
//! their own energy windows; evaluating outside them needs
//! [`RangePolicy::Extrapolate`] and the result is tagged.
//!
//! The total-cross-section coefficient is used exactly as tabulated. Its
//! nominal unit is mb, but at 2.3 MeV it evaluates to about 529, far above
//! the measured peak of 2.5 mb, so callers should treat the scale as
//! arbitrary ("formula units").

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

/// Breakup threshold used by the fits, MeV.
pub const THRESHOLD_MEV: f64 = 2.226;

/// Energy window of the total singlet cross-section formula, MeV.
pub const M1_WINDOW_MEV: (f64, f64) = (THRESHOLD_MEV, 2.3);

/// Energy window of the singlet/triplet ratio fits, MeV.
pub const RATIO_FIT_WINDOW_MEV: (f64, f64) = (2.3, 5.0);

const M1_SCALE: f64 = 675.0;
const M1_POLE_MEV: f64 = 2.149;

const SINGLET_RATIO_SCALE: f64 = 48.0;
const SINGLET_RATIO_EXPONENT: f64 = -1.75;
const ANISOTROPY_SCALE: f64 = 6910.0;
const ANISOTROPY_EXPONENT: f64 = -1.89;

/// Laboratory photon energy in MeV.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PhotonEnergy(f64);

impl PhotonEnergy {
    pub fn new(mev: f64) -> Result<Self> {
        if mev.is_finite() && mev > 0.0 {
            Ok(Self(mev))
        } else {
            Err(Error::out_of_range("e_gamma", mev, 0.0, f64::INFINITY))
        }
    }

    pub fn mev(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PhotonEnergy {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        PhotonEnergy::new(v)
    }
}

impl From<PhotonEnergy> for f64 {
    fn from(e: PhotonEnergy) -> f64 {
        e.0
    }
}

/// Half-angle of the forward detection cone, radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ConeAngle(f64);

impl ConeAngle {
    pub const FULL_SPHERE: ConeAngle = ConeAngle(PI);

    pub fn new(alpha: f64) -> Result<Self> {
        check_range("cone alpha", alpha, 0.0, PI)?;
        Ok(Self(alpha))
    }

    pub fn from_degrees(deg: f64) -> Result<Self> {
        Self::new(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// `1 - cos(alpha)` without cancellation at small angles.
    pub fn one_minus_cos(self) -> f64 {
        let h = (0.5 * self.0).sin();
        2.0 * h * h
    }
}

impl TryFrom<f64> for ConeAngle {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        ConeAngle::new(v)
    }
}

impl From<ConeAngle> for f64 {
    fn from(a: ConeAngle) -> f64 {
        a.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangePolicy {
    #[default]
    Strict,
    Extrapolate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeMode {
    Exact,
    Approx,
}

/// A fitted quantity and whether it was evaluated outside the fit window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitValue<T> {
    pub value: T,
    pub extrapolated: bool,
}

impl<T> FitValue<T> {
    fn map<U>(self, f: impl FnOnce(T) -> U) -> FitValue<U> {
        FitValue {
            value: f(self.value),
            extrapolated: self.extrapolated,
        }
    }
}

fn gate(fit: &'static str, e: f64, window: (f64, f64), policy: RangePolicy) -> Result<bool> {
    let inside = e >= window.0 && e <= window.1;
    match (inside, policy) {
        (true, _) => Ok(false),
        (false, RangePolicy::Extrapolate) => Ok(true),
        (false, RangePolicy::Strict) => Err(Error::OutsideValidity {
            fit,
            e_gamma: e,
            lo: window.0,
            hi: window.1,
        }),
    }
}

/// Total singlet (M1) cross section in formula units.
pub fn sigma_total_m1(e: PhotonEnergy, policy: RangePolicy) -> Result<FitValue<f64>> {
    let x = e.mev();
    if x < THRESHOLD_MEV {
        return Err(Error::BelowThreshold {
            e_gamma: x,
            threshold: THRESHOLD_MEV,
        });
    }
    let extrapolated = gate("M1 total cross section", x, M1_WINDOW_MEV, policy)?;
    let value = M1_SCALE * (x - THRESHOLD_MEV).sqrt() / (x * (x - M1_POLE_MEV));
    Ok(FitValue {
        value,
        extrapolated,
    })
}

/// `a_M / a_E` and `b_E / a_E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRatios {
    pub am_over_ae: f64,
    pub be_over_ae: f64,
}

impl FitRatios {
    /// Differential cross section in units of `a_E`.
    pub fn shape(&self, theta: f64) -> f64 {
        let s = theta.sin();
        self.am_over_ae + 1.0 + self.be_over_ae * s * s
    }

    /// Triplet share of the cross section averaged with the sin^2 weight
    /// factor `f` (0 in the forward direction).
    pub fn triplet_fraction(&self, cone_factor: f64) -> f64 {
        1.0 / (1.0 + self.am_over_ae / (1.0 + self.be_over_ae * cone_factor))
    }
}

pub fn fit_ratios(e: PhotonEnergy, policy: RangePolicy) -> Result<FitValue<FitRatios>> {
    let x = e.mev();
    if x <= THRESHOLD_MEV {
        return Err(Error::BelowThreshold {
            e_gamma: x,
            threshold: THRESHOLD_MEV,
        });
    }
    let extrapolated = gate("singlet/triplet ratio", x, RATIO_FIT_WINDOW_MEV, policy)?;
    Ok(FitValue {
        value: ratios_unchecked(x),
        extrapolated,
    })
}

/// Fit ratios with no range checks; `e_mev` must be above threshold.
pub(crate) fn ratios_unchecked(e_mev: f64) -> FitRatios {
    FitRatios {
        am_over_ae: SINGLET_RATIO_SCALE * (e_mev - THRESHOLD_MEV).powf(SINGLET_RATIO_EXPONENT),
        be_over_ae: ANISOTROPY_SCALE * e_mev.powf(ANISOTROPY_EXPONENT),
    }
}

/// Coefficients of the differential cross section with `a_E` set to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XsecDecomposition {
    pub a_m: f64,
    pub a_e: f64,
    pub b_m: f64,
    pub b_e: f64,
}

impl XsecDecomposition {
    pub fn from_ratios(r: &FitRatios) -> Self {
        Self {
            a_m: r.am_over_ae,
            a_e: 1.0,
            b_m: 0.0,
            b_e: r.be_over_ae,
        }
    }

    pub fn ratios(&self) -> FitRatios {
        FitRatios {
            am_over_ae: self.a_m / self.a_e,
            be_over_ae: self.b_e / self.a_e,
        }
    }
}

pub fn decomposition(e: PhotonEnergy, policy: RangePolicy) -> Result<FitValue<XsecDecomposition>> {
    Ok(fit_ratios(e, policy)?.map(|r| XsecDecomposition::from_ratios(&r)))
}

/// Relative CMS differential cross section at polar angle `theta`, in units of `a_E`.
pub fn diff_xsec_shape(e: PhotonEnergy, theta: f64, policy: RangePolicy) -> Result<FitValue<f64>> {
    Ok(fit_ratios(e, policy)?.map(|r| r.shape(theta)))
}

/// Triplet share of the cross section at `Theta = 0`.
pub fn triplet_fraction_forward(e: PhotonEnergy, policy: RangePolicy) -> Result<FitValue<f64>> {
    Ok(fit_ratios(e, policy)?.map(|r| r.triplet_fraction(0.0)))
}

/// Solid-angle average of `sin^2(Theta)` over the cone `Theta <= alpha`.
///
/// The exact form `(2/3 + cos^3/3 - cos)/(1 - cos)` is evaluated as
/// `u (1 - u/3)` with `u = 1 - cos(alpha)`, which is algebraically equal and
/// tends smoothly to 0 at `alpha = 0`. The approximation is `alpha^2 / 2`.
pub fn cone_average_factor(alpha: ConeAngle, mode: ConeMode) -> f64 {
    match mode {
        ConeMode::Exact => {
            let u = alpha.one_minus_cos();
            u * (1.0 - u / 3.0)
        }
        ConeMode::Approx => 0.5 * alpha.radians() * alpha.radians(),
    }
}

/// Triplet share of the cross section integrated over the forward cone.
pub fn triplet_fraction_cone(
    e: PhotonEnergy,
    alpha: ConeAngle,
    mode: ConeMode,
    policy: RangePolicy,
) -> Result<FitValue<f64>> {
    let f = cone_average_factor(alpha, mode);
    Ok(fit_ratios(e, policy)?.map(|r| r.triplet_fraction(f)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(x: f64) -> PhotonEnergy {
        PhotonEnergy::new(x).unwrap()
    }

    const STRICT: RangePolicy = RangePolicy::Strict;

    #[test]
    fn m1_cross_section() {
        assert_eq!(sigma_total_m1(e(2.226), STRICT).unwrap().value, 0.0);
        let s = sigma_total_m1(e(2.3), STRICT).unwrap().value;
        let direct = 675.0 * 0.074f64.sqrt() / (2.3 * 0.151);
        assert!((s - direct).abs() < 1e-9 * direct);
        assert!((s - 528.7).abs() < 0.1);
        assert!(
            sigma_total_m1(e(2.28), STRICT).unwrap().value
                > sigma_total_m1(e(2.25), STRICT).unwrap().value
        );
    }

    #[test]
    fn m1_range_policy() {
        assert!(matches!(
            sigma_total_m1(e(2.2), RangePolicy::Extrapolate),
            Err(Error::BelowThreshold { .. })
        ));
        assert!(matches!(
            sigma_total_m1(e(2.5), STRICT),
            Err(Error::OutsideValidity { .. })
        ));
        let x = sigma_total_m1(e(2.5), RangePolicy::Extrapolate).unwrap();
        assert!(x.extrapolated && x.value > 0.0);
    }

    #[test]
    fn fit_ratios_at_five_mev() {
        let r = fit_ratios(e(5.0), STRICT).unwrap();
        assert!(!r.extrapolated);
        assert!((r.value.am_over_ae - 8.05).abs() < 0.01);
        assert!((r.value.be_over_ae - 330.0).abs() < 0.5);
    }

    #[test]
    fn fit_ratios_diverge_at_threshold() {
        let near = fit_ratios(e(2.226 + 1e-6), RangePolicy::Extrapolate).unwrap();
        assert!(near.value.am_over_ae > 1e10);
        assert!(fit_ratios(e(2.226), RangePolicy::Extrapolate).is_err());
        assert!(fit_ratios(e(2.25), STRICT).is_err());
        assert!(fit_ratios(e(5.5), STRICT).is_err());
    }

    #[test]
    fn shape_values() {
        let r = fit_ratios(e(5.0), STRICT).unwrap().value;
        assert_eq!(r.shape(0.0), r.am_over_ae + 1.0);
        let s90 = diff_xsec_shape(e(5.0), PI / 2.0, STRICT).unwrap().value;
        assert!((s90 - (8.05 + 1.0 + 330.0)).abs() < 0.5);
        for t in [0.1, 0.7, 1.3] {
            assert!((r.shape(t) - r.shape(PI - t)).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_fraction() {
        let f5 = triplet_fraction_forward(e(5.0), STRICT).unwrap().value;
        assert!((f5 - 0.11).abs() < 0.005);
        let f23 = triplet_fraction_forward(e(2.3), STRICT).unwrap().value;
        assert!((f23 - 2.2e-4).abs() < 0.1e-4);
        let f0 = triplet_fraction_forward(e(2.226 + 1e-9), RangePolicy::Extrapolate)
            .unwrap()
            .value;
        assert!(f0 < 1e-12);
    }

    #[test]
    fn cone_factor_values() {
        assert!((cone_average_factor(ConeAngle::FULL_SPHERE, ConeMode::Exact) - 2.0 / 3.0).abs() < 1e-15);
        let a25 = ConeAngle::from_degrees(25.0).unwrap();
        let ex = cone_average_factor(a25, ConeMode::Exact);
        let ap = cone_average_factor(a25, ConeMode::Approx);
        assert!((ex - 0.0908).abs() < 1e-4);
        assert!((ap - 0.0952).abs() < 1e-4);
        assert!((ap / ex - 1.0).abs() < 0.05);
        let zero = ConeAngle::new(0.0).unwrap();
        assert_eq!(cone_average_factor(zero, ConeMode::Exact), 0.0);
        assert_eq!(cone_average_factor(zero, ConeMode::Approx), 0.0);
    }

    #[test]
    fn stable_form_matches_printed_form() {
        for deg in [5.0, 20.0, 45.0, 90.0, 135.0, 180.0] {
            let a = ConeAngle::from_degrees(deg).unwrap();
            let c = a.radians().cos();
            let printed = (2.0 / 3.0 + c * c * c / 3.0 - c) / (1.0 - c);
            assert!((cone_average_factor(a, ConeMode::Exact) - printed).abs() < 1e-12);
        }
    }

    #[test]
    fn cone_fraction_values() {
        let two = ConeAngle::from_degrees(2.0).unwrap();
        let f = triplet_fraction_cone(e(5.0), two, ConeMode::Approx, STRICT).unwrap().value;
        assert!((f - 0.13).abs() < 0.005);
        let a25 = ConeAngle::from_degrees(25.0).unwrap();
        let f25 = triplet_fraction_cone(e(5.0), a25, ConeMode::Exact, STRICT).unwrap().value;
        assert!((f25 - 0.79).abs() < 0.005);
        let zero = ConeAngle::new(0.0).unwrap();
        for x in [2.3, 3.0, 5.0] {
            let c = triplet_fraction_cone(e(x), zero, ConeMode::Exact, STRICT).unwrap().value;
            let fw = triplet_fraction_forward(e(x), STRICT).unwrap().value;
            assert!((c - fw).abs() < 1e-12);
        }
    }

    #[test]
    fn cone_angle_validation() {
        assert!(ConeAngle::new(-0.1).is_err());
        assert!(ConeAngle::new(PI + 0.01).is_err());
        assert!(PhotonEnergy::new(0.0).is_err());
        assert!(PhotonEnergy::new(f64::NAN).is_err());
    }
}
