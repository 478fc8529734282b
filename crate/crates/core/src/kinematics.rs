//! Two-body kinematics of `gamma + d -> p + n` with the deuteron at rest.
//!
//! All energies and momenta are in MeV (c = 1). The beam defines +z.

use serde::{Deserialize, Serialize};

use crate::cross_sections::{PhotonEnergy, THRESHOLD_MEV};
use crate::error::{check_range, Error, Result};

pub const PROTON_MASS_MEV: f64 = 938.272;
pub const NEUTRON_MASS_MEV: f64 = 939.565;
pub const DEUTERON_MASS_MEV: f64 = 1875.613;

/// Rest energies of the participants.
///
/// `Default` keeps the nucleon masses and sets the deuteron mass so that the
/// kinematic threshold equals [`THRESHOLD_MEV`], the value the cross-section
/// fits are written against. [`ParticleMasses::reference`] uses the tabulated
/// deuteron mass instead (threshold 2.2253 MeV).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleMasses {
    pub m_p: f64,
    pub m_n: f64,
    pub m_d: f64,
}

impl Default for ParticleMasses {
    fn default() -> Self {
        Self::matched_to_threshold(THRESHOLD_MEV)
    }
}

impl ParticleMasses {
    pub fn reference() -> Self {
        Self {
            m_p: PROTON_MASS_MEV,
            m_n: NEUTRON_MASS_MEV,
            m_d: DEUTERON_MASS_MEV,
        }
    }

    /// Reference nucleon masses with the deuteron mass solved from
    /// `((m_p + m_n)^2 - m_d^2) / (2 m_d) = threshold`.
    pub fn matched_to_threshold(threshold: f64) -> Self {
        let pair = PROTON_MASS_MEV + NEUTRON_MASS_MEV;
        Self {
            m_p: PROTON_MASS_MEV,
            m_n: NEUTRON_MASS_MEV,
            m_d: (threshold * threshold + pair * pair).sqrt() - threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("m_p", self.m_p), ("m_n", self.m_n), ("m_d", self.m_d)] {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::out_of_range(name, m, 0.0, f64::INFINITY));
            }
        }
        if self.m_d >= self.m_p + self.m_n {
            return Err(Error::Config("deuteron must be bound: m_d < m_p + m_n".into()));
        }
        Ok(())
    }

    /// Photon energy at which `p + n` can just be produced.
    pub fn threshold(&self) -> f64 {
        let pair = self.m_p + self.m_n;
        (pair - self.m_d) * (pair + self.m_d) / (2.0 * self.m_d)
    }
}

/// Frame quantities of one breakup at fixed photon energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakupKinematics {
    pub e_gamma: f64,
    /// Invariant mass squared, MeV^2.
    pub s: f64,
    /// Nucleon momentum in the CMS, MeV.
    pub p_cms: f64,
    pub e_kin_proton_cms: f64,
    pub e_kin_neutron_cms: f64,
    /// Mean per-nucleon CMS kinetic energy.
    pub e_kin_cms: f64,
    pub beta_proton_cms: f64,
    pub beta_neutron_cms: f64,
    /// Speed of the slower nucleon in the CMS.
    pub beta_nucleon_cms: f64,
    /// Speed of the CMS in the laboratory.
    pub beta_cms: f64,
}

pub fn breakup(e: PhotonEnergy, masses: &ParticleMasses) -> Result<BreakupKinematics> {
    masses.validate()?;
    let eg = e.mev();
    let threshold = masses.threshold();
    if eg < threshold {
        return Err(Error::BelowThreshold {
            e_gamma: eg,
            threshold,
        });
    }
    let (mp, mn, md) = (masses.m_p, masses.m_n, masses.m_d);
    let s = md * md + 2.0 * eg * md;
    let rs = s.sqrt();
    let sum = mp + mn;
    let diff = mp - mn;
    let lambda = ((s - sum * sum) * (s - diff * diff)).max(0.0);
    let p = lambda.sqrt() / (2.0 * rs);
    let ep = (s + mp * mp - mn * mn) / (2.0 * rs);
    let en = (s + mn * mn - mp * mp) / (2.0 * rs);
    let (bp, bn) = (p / ep, p / en);
    Ok(BreakupKinematics {
        e_gamma: eg,
        s,
        p_cms: p,
        e_kin_proton_cms: (ep - mp).max(0.0),
        e_kin_neutron_cms: (en - mn).max(0.0),
        e_kin_cms: 0.5 * ((ep - mp).max(0.0) + (en - mn).max(0.0)),
        beta_proton_cms: bp,
        beta_neutron_cms: bn,
        beta_nucleon_cms: bp.min(bn),
        beta_cms: eg / (eg + md),
    })
}

/// Breakup with both nucleons given the mean nucleon mass.
pub fn symmetric_breakup(e: PhotonEnergy, masses: &ParticleMasses) -> Result<BreakupKinematics> {
    let m = 0.5 * (masses.m_p + masses.m_n);
    breakup(
        e,
        &ParticleMasses {
            m_p: m,
            m_n: m,
            m_d: masses.m_d,
        },
    )
}

/// Ratio of nucleon speed in the CMS to the speed of the CMS itself.
pub fn velocity_ratio(e: PhotonEnergy, masses: &ParticleMasses) -> Result<f64> {
    let k = breakup(e, masses)?;
    Ok(k.beta_nucleon_cms / k.beta_cms)
}

/// Direction (polar angle from the beam) and kinetic energy of a particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameState {
    pub theta: f64,
    pub e_kin: f64,
}

fn boost_z(theta: f64, e_kin: f64, beta: f64, mass: f64) -> Result<FrameState> {
    check_range("theta", theta, 0.0, std::f64::consts::PI)?;
    check_range("beta", beta, -1.0 + f64::EPSILON, 1.0 - f64::EPSILON)?;
    if !(e_kin.is_finite() && e_kin >= 0.0) || !(mass.is_finite() && mass > 0.0) {
        return Err(Error::Config(format!(
            "boost needs e_kin >= 0 and mass > 0 (got {e_kin}, {mass})"
        )));
    }
    let energy = mass + e_kin;
    let p = (e_kin * (e_kin + 2.0 * mass)).sqrt();
    let gamma = 1.0 / ((1.0 - beta) * (1.0 + beta)).sqrt();
    let pz = gamma * (p * theta.cos() + beta * energy);
    let pt = p * theta.sin();
    let e_new = gamma * (energy + beta * p * theta.cos());
    // p^2 / (E + m) instead of E - m: no cancellation at low kinetic energy.
    Ok(FrameState {
        theta: pt.atan2(pz),
        e_kin: (pt * pt + pz * pz) / (e_new + mass),
    })
}

/// Boosts a CMS direction and kinetic energy into the laboratory.
pub fn cms_to_lab(theta_cms: f64, e_kin_cms: f64, beta_cms: f64, mass: f64) -> Result<FrameState> {
    boost_z(theta_cms, e_kin_cms, beta_cms, mass)
}

/// Inverse of [`cms_to_lab`].
pub fn lab_to_cms(theta_lab: f64, e_kin_lab: f64, beta_cms: f64, mass: f64) -> Result<FrameState> {
    boost_z(theta_lab, e_kin_lab, -beta_cms, mass)
}

/// Energy-momentum four-vector `(E, px, py, pz)` in MeV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourMomentum {
    pub e: f64,
    pub p: [f64; 3],
}

impl FourMomentum {
    fn boost_z(self, beta: f64) -> Self {
        let gamma = 1.0 / ((1.0 - beta) * (1.0 + beta)).sqrt();
        Self {
            e: gamma * (self.e + beta * self.p[2]),
            p: [self.p[0], self.p[1], gamma * (self.p[2] + beta * self.e)],
        }
    }
}

/// Laboratory four-momenta of the proton (emitted at CMS angles
/// `theta`, `phi`) and the back-to-back neutron.
pub fn lab_momenta(
    k: &BreakupKinematics,
    masses: &ParticleMasses,
    theta: f64,
    phi: f64,
) -> (FourMomentum, FourMomentum) {
    let dir = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    let proton = FourMomentum {
        e: masses.m_p + k.e_kin_proton_cms,
        p: dir.map(|d| k.p_cms * d),
    };
    let neutron = FourMomentum {
        e: masses.m_n + k.e_kin_neutron_cms,
        p: dir.map(|d| -k.p_cms * d),
    };
    (proton.boost_z(k.beta_cms), neutron.boost_z(k.beta_cms))
}

/// Per-nucleon kinetic energy from `E_gamma = threshold + 2 E_kin`.
pub fn near_threshold_e_kin(e: PhotonEnergy) -> f64 {
    0.5 * (e.mev() - THRESHOLD_MEV)
}
