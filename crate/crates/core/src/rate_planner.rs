//! Coincidence-rate arithmetic for comparing experimental scenarios.
//!
//! Pair rate = flux x cross section x number of targets. Coincidences need
//! both polarimeters to register, so the coincidence rate carries the
//! overall polarimeter efficiency squared.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coincidence counts for which [`compare`] reports accumulation times.
pub const TIME_TO_N: [u64; 3] = [1_000, 10_000, 100_000];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateScenario {
    pub label: String,
    /// Incident particles per m^2 per s.
    pub flux: f64,
    pub n_targets: f64,
    /// Reaction cross section, m^2.
    pub sigma: f64,
    /// Overall efficiency of one polarimeter.
    pub efficiency: f64,
}

impl RateScenario {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("flux", self.flux),
            ("n_targets", self.n_targets),
            ("sigma", self.sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!(
                    "scenario '{}': {name} must be finite and nonnegative, got {v}",
                    self.label
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::Config(format!(
                "scenario '{}': efficiency must lie in [0, 1], got {}",
                self.label, self.efficiency
            )));
        }
        Ok(())
    }
}

/// Produced pairs per second.
pub fn pair_rate(s: &RateScenario) -> f64 {
    s.flux * s.sigma * s.n_targets
}

/// Coincidences per second between two polarimeters of efficiency `s.efficiency`.
pub fn coincidence_rate(s: &RateScenario) -> f64 {
    pair_rate(s) * s.efficiency * s.efficiency
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeToCount {
    pub n: u64,
    pub seconds_a: f64,
    pub seconds_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateComparison {
    pub label_a: String,
    pub label_b: String,
    /// Coincidence rate of `a` divided by that of `b`.
    pub ratio: f64,
    pub times: Vec<TimeToCount>,
}

pub fn compare(a: &RateScenario, b: &RateScenario) -> Result<RateComparison> {
    let (ra, rb) = (coincidence_rate(a), coincidence_rate(b));
    for (s, r) in [(a, ra), (b, rb)] {
        if r.is_nan() || r <= 0.0 {
            return Err(Error::ZeroRate {
                label: s.label.clone(),
            });
        }
    }
    Ok(RateComparison {
        label_a: a.label.clone(),
        label_b: b.label.clone(),
        ratio: ra / rb,
        times: TIME_TO_N
            .iter()
            .map(|&n| TimeToCount {
                n,
                seconds_a: n as f64 / ra,
                seconds_b: n as f64 / rb,
            })
            .collect(),
    })
}

/// Proton-proton scattering reference: 5e18 /m^2 s on 1.4e19 targets with
/// 5e-29 m^2 and polarimeters of efficiency 1e-4.
pub fn pp_reference() -> RateScenario {
    RateScenario {
        label: "pp".into(),
        flux: 5e18,
        n_targets: 1.4e19,
        sigma: 5e-29,
        efficiency: 1e-4,
    }
}

/// Deuteron photodisintegration at the cross-section maximum: 1e18 photons
/// per s in a 1 MeV band, same target count, 2.5e-31 m^2.
pub fn deuteron_reference() -> RateScenario {
    RateScenario {
        label: "deuteron".into(),
        flux: 1e18,
        n_targets: 1.4e19,
        sigma: 2.5e-31,
        efficiency: 1e-4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn reference_pair_rates() {
        assert!(rel(pair_rate(&pp_reference()), 3.5e9) < 1e-12);
        assert!(rel(pair_rate(&deuteron_reference()), 3.5e6) < 1e-12);
        let mut z = pp_reference();
        z.flux = 0.0;
        assert_eq!(pair_rate(&z), 0.0);
    }

    #[test]
    fn coincidence_rate_scales_with_efficiency_squared() {
        assert!(rel(coincidence_rate(&pp_reference()), 35.0) < 1e-12);
        let mut s = deuteron_reference();
        s.efficiency = 1.0;
        assert_eq!(coincidence_rate(&s), pair_rate(&s));
        s.efficiency = 0.0;
        assert_eq!(coincidence_rate(&s), 0.0);
    }

    #[test]
    fn reference_comparison() {
        let c = compare(&pp_reference(), &deuteron_reference()).unwrap();
        assert!(rel(c.ratio, 1e3) < 1e-12);
        let t = c.times[0];
        assert_eq!(t.n, 1000);
        // 0.035 coincidences/s -> about 7.9 hours for 1000
        assert!(rel(t.seconds_b, 1000.0 / 0.035) < 1e-12);
        assert!((t.seconds_b / 3600.0 - 7.94).abs() < 0.01);
        let same = compare(&pp_reference(), &pp_reference()).unwrap();
        assert_eq!(same.ratio, 1.0);
    }

    #[test]
    fn zero_rate_is_an_error() {
        let mut z = deuteron_reference();
        z.efficiency = 0.0;
        assert!(matches!(
            compare(&pp_reference(), &z),
            Err(Error::ZeroRate { label }) if label == "deuteron"
        ));
    }

    #[test]
    fn validation() {
        let mut s = pp_reference();
        s.efficiency = 2.0;
        assert!(s.validate().is_err());
        s.efficiency = 0.5;
        s.sigma = -1.0;
        assert!(s.validate().is_err());
    }
}
