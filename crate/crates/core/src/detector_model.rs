//! Polarimeter response, coincidence tallies and the correlation estimator.
//!
//! Each arm is a two-detector analyzer (L and R). Given the true spin
//! outcome `r` along the analyzer axis, the arm registers in L with
//! probability `eff (1 + r A) / 2`, in R with `eff (1 - r A) / 2`, and not at
//! all otherwise. `eff` lumps scattering probability and acceptance; `A` is
//! the analyzing power. The arms respond independently, so the coincidence
//! correlation converges to `A^2 E(a, b)` and `eff` only scales the counts.

use std::ops::{Add, AddAssign};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::event_generator::DisintegrationEvent;
use crate::spin_model::{bell_envelope, MeasurementAxis, SpinOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarimeterConfig {
    pub axis: MeasurementAxis,
    pub efficiency: f64,
    pub analyzing_power: f64,
    /// Detector angle relative to the incoming particle, degrees. Descriptive only.
    #[serde(default = "default_detector_angle")]
    pub detector_angle_deg: f64,
}

fn default_detector_angle() -> f64 {
    50.0
}

impl PolarimeterConfig {
    pub fn ideal(axis: MeasurementAxis) -> Self {
        Self {
            axis,
            efficiency: 1.0,
            analyzing_power: 1.0,
            detector_angle_deg: default_detector_angle(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_range("efficiency", self.efficiency, 0.0, 1.0)?;
        check_range("analyzing power", self.analyzing_power, 0.0, 1.0)
    }

    fn respond<R: Rng + ?Sized>(&self, outcome: SpinOutcome, rng: &mut R) -> Option<Side> {
        let u: f64 = rng.random();
        let p_left = 0.5 * self.efficiency * (1.0 + outcome.sign() * self.analyzing_power);
        if u < p_left {
            Some(Side::L)
        } else if u < self.efficiency {
            Some(Side::R)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub side_a: Option<Side>,
    pub side_b: Option<Side>,
}

/// Passes one event through both polarimeters.
pub fn detect<R: Rng + ?Sized>(
    event: &DisintegrationEvent,
    pa: &PolarimeterConfig,
    pb: &PolarimeterConfig,
    rng: &mut R,
) -> DetectionResult {
    DetectionResult {
        side_a: pa.respond(event.ra, rng),
        side_b: pb.respond(event.rb, rng),
    }
}

/// Coincidence tallies; `n_rl` counts R on arm A with L on arm B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CoincidenceCounts {
    pub n_ll: u64,
    pub n_rr: u64,
    pub n_rl: u64,
    pub n_lr: u64,
    /// Events where exactly one arm registered.
    pub n_singles: u64,
    /// Events where neither arm registered.
    pub n_misses: u64,
}

impl CoincidenceCounts {
    pub fn from_counts(n_ll: u64, n_rr: u64, n_rl: u64, n_lr: u64) -> Self {
        Self {
            n_ll,
            n_rr,
            n_rl,
            n_lr,
            ..Self::default()
        }
    }

    pub fn record(&mut self, r: &DetectionResult) {
        match (r.side_a, r.side_b) {
            (Some(Side::L), Some(Side::L)) => self.n_ll += 1,
            (Some(Side::R), Some(Side::R)) => self.n_rr += 1,
            (Some(Side::R), Some(Side::L)) => self.n_rl += 1,
            (Some(Side::L), Some(Side::R)) => self.n_lr += 1,
            (None, None) => self.n_misses += 1,
            _ => self.n_singles += 1,
        }
    }

    pub fn coincidences(&self) -> u64 {
        self.n_ll + self.n_rr + self.n_rl + self.n_lr
    }

    pub fn events(&self) -> u64 {
        self.coincidences() + self.n_singles + self.n_misses
    }
}

impl Add for CoincidenceCounts {
    type Output = Self;

    fn add(mut self, o: Self) -> Self {
        self += o;
        self
    }
}

impl AddAssign for CoincidenceCounts {
    fn add_assign(&mut self, o: Self) {
        self.n_ll += o.n_ll;
        self.n_rr += o.n_rr;
        self.n_rl += o.n_rl;
        self.n_lr += o.n_lr;
        self.n_singles += o.n_singles;
        self.n_misses += o.n_misses;
    }
}

impl<'a> FromIterator<&'a DetectionResult> for CoincidenceCounts {
    fn from_iter<I: IntoIterator<Item = &'a DetectionResult>>(iter: I) -> Self {
        let mut c = Self::default();
        for r in iter {
            c.record(r);
        }
        c
    }
}

pub fn tally<'a>(results: impl IntoIterator<Item = &'a DetectionResult>) -> CoincidenceCounts {
    results.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub e_exp: f64,
    pub std_err: f64,
    pub n: u64,
}

/// `(N_LL + N_RR - N_RL - N_LR) / N` with binomial standard error
/// `sqrt((1 - e^2) / N)`.
pub fn e_exp(counts: &CoincidenceCounts) -> Result<CorrelationEstimate> {
    let n = counts.coincidences();
    if n == 0 {
        return Err(Error::NoCoincidences);
    }
    let same = (counts.n_ll + counts.n_rr) as f64;
    let diff = (counts.n_rl + counts.n_lr) as f64;
    let e = (same - diff) / n as f64;
    Ok(CorrelationEstimate {
        e_exp: e,
        std_err: ((1.0 - e * e).max(0.0) / n as f64).sqrt(),
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellTest {
    pub s_exp: f64,
    pub std_err: f64,
    /// `(s_exp - 2) / std_err`; absent when the error is zero.
    pub sigmas_above_2: Option<f64>,
}

/// CHSH combination of estimates at `(a,b)`, `(a,b')`, `(a',b)`, `(a',b')`.
pub fn bell_test(estimates: &[CorrelationEstimate; 4]) -> BellTest {
    let [e1, e2, e3, e4] = estimates.map(|e| e.e_exp);
    let s = (e1 + e2 + e3 - e4).abs();
    let err = estimates
        .iter()
        .map(|e| e.std_err * e.std_err)
        .sum::<f64>()
        .sqrt();
    BellTest {
        s_exp: s,
        std_err: err,
        sigmas_above_2: (err > 0.0).then(|| (s - 2.0) / err),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeMargin {
    /// `|e_exp| - |E_max(theta)|`.
    pub margin: f64,
    pub std_err: f64,
}

/// Margin of a measured correlation over the local-model envelope at `theta`.
pub fn envelope_comparison(estimate: &CorrelationEstimate, theta: f64) -> Result<EnvelopeMargin> {
    let bound = bell_envelope(theta)?;
    Ok(EnvelopeMargin {
        margin: estimate.e_exp.abs() - bound.abs(),
        std_err: estimate.std_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_generator::StateKind;
    use crate::rng::RngStream;

    fn event(ra: SpinOutcome, rb: SpinOutcome) -> DisintegrationEvent {
        DisintegrationEvent {
            e_gamma: 2.3,
            theta_cms: 0.01,
            phi_cms: 0.0,
            state_kind: StateKind::Singlet,
            ra,
            rb,
            weight: 1.0,
        }
    }

    #[test]
    fn ideal_analyzer_follows_spin() {
        let p = PolarimeterConfig::ideal(MeasurementAxis::BEAM);
        let mut rng = RngStream::new(1, 0).rng();
        for _ in 0..1000 {
            let r = detect(&event(SpinOutcome::Up, SpinOutcome::Down), &p, &p, &mut rng);
            assert_eq!(r.side_a, Some(Side::L));
            assert_eq!(r.side_b, Some(Side::R));
        }
    }

    #[test]
    fn blind_analyzer_never_fires() {
        let mut p = PolarimeterConfig::ideal(MeasurementAxis::BEAM);
        p.efficiency = 0.0;
        let mut rng = RngStream::new(1, 0).rng();
        for _ in 0..1000 {
            let r = detect(&event(SpinOutcome::Up, SpinOutcome::Up), &p, &p, &mut rng);
            assert_eq!(r, DetectionResult { side_a: None, side_b: None });
        }
    }

    #[test]
    fn polarimeter_validation() {
        let mut p = PolarimeterConfig::ideal(MeasurementAxis::BEAM);
        p.efficiency = 1.2;
        assert!(p.validate().is_err());
        p.efficiency = 0.5;
        p.analyzing_power = -0.1;
        assert!(p.validate().is_err());
    }

    #[test]
    fn tally_basics() {
        assert_eq!(tally(&[]), CoincidenceCounts::default());
        let one = tally(&[DetectionResult {
            side_a: Some(Side::L),
            side_b: Some(Side::R),
        }]);
        assert_eq!(one, CoincidenceCounts::from_counts(0, 0, 0, 1));
        let t1 = CoincidenceCounts::from_counts(1, 2, 3, 4);
        let t2 = CoincidenceCounts {
            n_singles: 5,
            n_misses: 6,
            ..CoincidenceCounts::from_counts(7, 8, 9, 10)
        };
        assert_eq!(t1 + t2, t2 + t1);
    }

    #[test]
    fn singles_and_misses() {
        let c = tally(&[
            DetectionResult { side_a: Some(Side::L), side_b: None },
            DetectionResult { side_a: None, side_b: Some(Side::R) },
            DetectionResult { side_a: None, side_b: None },
        ]);
        assert_eq!(c.n_singles, 2);
        assert_eq!(c.n_misses, 1);
        assert_eq!(c.coincidences(), 0);
        assert_eq!(c.events(), 3);
    }

    #[test]
    fn estimator_arithmetic() {
        let e = e_exp(&CoincidenceCounts::from_counts(50, 50, 450, 450)).unwrap();
        assert!((e.e_exp + 0.8).abs() < 1e-15);
        assert!((e.std_err - (0.36f64 / 1000.0).sqrt()).abs() < 1e-15);
        let z = e_exp(&CoincidenceCounts::from_counts(7, 7, 7, 7)).unwrap();
        assert_eq!(z.e_exp, 0.0);
        assert_eq!(e_exp(&CoincidenceCounts::default()), Err(Error::NoCoincidences));
    }

    #[test]
    fn bell_test_arithmetic() {
        let est = |e| CorrelationEstimate { e_exp: e, std_err: 0.01, n: 100 };
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let t = bell_test(&[est(-h), est(-h), est(-h), est(h)]);
        assert!((t.s_exp - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((t.std_err - 0.02).abs() < 1e-15);
        let zero = CorrelationEstimate { e_exp: 0.0, std_err: 0.0, n: 1 };
        let t0 = bell_test(&[zero; 4]);
        assert_eq!(t0.s_exp, 0.0);
        assert_eq!(t0.sigmas_above_2, None);
    }

    #[test]
    fn envelope_margin_at_right_angle() {
        let est = CorrelationEstimate { e_exp: 0.0, std_err: 0.001, n: 1_000_000 };
        let m = envelope_comparison(&est, std::f64::consts::FRAC_PI_2).unwrap();
        assert_eq!(m.margin, 0.0);
        assert!(envelope_comparison(&est, 4.0).is_err());
    }
}
