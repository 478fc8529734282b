//! Spin correlations of a proton-neutron pair.
//!
//! Closed forms for the singlet, the three triplet substates and convex
//! mixtures of them, together with the classical interpolation bound and the
//! gap between quantum and classical correlations. Every joint distribution is
//! written as
//!
//! ```text
//! P(rA, rB) = 1/4 (1 + rA <A> + rB <B> + rA rB E)
//! ```
//!
//! where `<A>`, `<B>` are the single-arm spin expectations along the analyzer
//! axes and `E` the correlation. [`density_matrix_oracle`] recomputes the same
//! numbers from explicit two-spin state vectors.

mod oracle;

pub use oracle::density_matrix_oracle;

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

/// Tolerance on `|v|^2 - 1` for an analyzer axis.
pub const AXIS_TOLERANCE: f64 = 1e-12;

/// Tolerance on the sum of mixture weights.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Unit vector along which an analyzer resolves spin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct MeasurementAxis {
    x: f64,
    y: f64,
    z: f64,
}

impl MeasurementAxis {
    /// Photon beam direction.
    pub const BEAM: MeasurementAxis = MeasurementAxis {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm2 = x * x + y * y + z * z;
        if !norm2.is_finite() || (norm2 - 1.0).abs() > AXIS_TOLERANCE {
            return Err(Error::NonUnitAxis {
                x,
                y,
                z,
                norm: norm2.sqrt(),
            });
        }
        Ok(Self { x, y, z })
    }

    /// Rescales an arbitrary nonzero vector to unit length.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::ZeroAxis);
        }
        Ok(Self {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// Axis in the plane transverse to the beam at the given azimuth.
    pub fn transverse(azimuth: f64) -> Self {
        Self {
            x: azimuth.cos(),
            y: azimuth.sin(),
            z: 0.0,
        }
    }

    /// Axis at polar angle `polar` from the beam and azimuth `azimuth`.
    pub fn from_angles(polar: f64, azimuth: f64) -> Self {
        let s = polar.sin();
        Self {
            x: s * azimuth.cos(),
            y: s * azimuth.sin(),
            z: polar.cos(),
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &MeasurementAxis) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Angle between the two axes, in `[0, pi]`.
    pub fn angle_to(&self, other: &MeasurementAxis) -> f64 {
        self.dot(other).clamp(-1.0, 1.0).acos()
    }
}

impl TryFrom<[f64; 3]> for MeasurementAxis {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        MeasurementAxis::new(v[0], v[1], v[2])
    }
}

impl From<MeasurementAxis> for [f64; 3] {
    fn from(a: MeasurementAxis) -> Self {
        a.components()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum SpinOutcome {
    Up,
    Down,
}

impl SpinOutcome {
    pub fn value(self) -> i8 {
        match self {
            SpinOutcome::Up => 1,
            SpinOutcome::Down => -1,
        }
    }

    pub fn sign(self) -> f64 {
        f64::from(self.value())
    }
}

impl TryFrom<i8> for SpinOutcome {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(SpinOutcome::Up),
            -1 => Ok(SpinOutcome::Down),
            _ => Err(Error::Config(format!("spin outcome must be +1 or -1, got {v}"))),
        }
    }
}

impl From<SpinOutcome> for i8 {
    fn from(o: SpinOutcome) -> i8 {
        o.value()
    }
}

/// The four `(rA, rB)` combinations in the order used by every
/// four-element probability array in this crate.
pub const OUTCOME_PAIRS: [(SpinOutcome, SpinOutcome); 4] = [
    (SpinOutcome::Up, SpinOutcome::Up),
    (SpinOutcome::Up, SpinOutcome::Down),
    (SpinOutcome::Down, SpinOutcome::Up),
    (SpinOutcome::Down, SpinOutcome::Down),
];

/// Magnetic quantum number of a triplet substate along the preferred axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum TripletM {
    Minus,
    Zero,
    Plus,
}

impl TripletM {
    pub const ALL: [TripletM; 3] = [TripletM::Minus, TripletM::Zero, TripletM::Plus];

    pub fn value(self) -> i8 {
        match self {
            TripletM::Minus => -1,
            TripletM::Zero => 0,
            TripletM::Plus => 1,
        }
    }

    /// Position in `[m=-1, m=0, m=+1]` arrays.
    pub fn index(self) -> usize {
        (self.value() + 1) as usize
    }
}

impl TryFrom<i8> for TripletM {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            -1 => Ok(TripletM::Minus),
            0 => Ok(TripletM::Zero),
            1 => Ok(TripletM::Plus),
            _ => Err(Error::Config(format!("triplet m must be -1, 0 or +1, got {v}"))),
        }
    }
}

impl From<TripletM> for i8 {
    fn from(m: TripletM) -> i8 {
        m.value()
    }
}

/// Convex weights over `[singlet, m=-1, m=0, m=+1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct MixtureWeights([f64; 4]);

impl MixtureWeights {
    pub fn new(weights: [f64; 4]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights {
                weights,
                reason: "weights must be finite and nonnegative",
            });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidWeights {
                weights,
                reason: "weights must sum to 1",
            });
        }
        Ok(Self(weights))
    }

    /// Singlet weight `1 - r`, triplet weight `r` split according to
    /// `substates` (`[m=-1, m=0, m=+1]`, rescaled to sum to one).
    pub fn with_triplet_fraction(r: f64, substates: [f64; 3]) -> Result<Self> {
        check_range("triplet fraction", r, 0.0, 1.0)?;
        let total: f64 = substates.iter().sum();
        if substates.iter().any(|w| !w.is_finite() || *w < 0.0) || total <= 0.0 {
            return Err(Error::InvalidWeights {
                weights: [1.0 - r, substates[0], substates[1], substates[2]],
                reason: "triplet substate weights must be nonnegative with a positive sum",
            });
        }
        let t = substates.map(|w| r * w / total);
        Self::new([1.0 - r, t[0], t[1], t[2]])
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn singlet(&self) -> f64 {
        self.0[0]
    }

    pub fn triplet(&self, m: TripletM) -> f64 {
        self.0[1 + m.index()]
    }

    pub fn triplet_fraction(&self) -> f64 {
        self.0[1] + self.0[2] + self.0[3]
    }
}

impl TryFrom<[f64; 4]> for MixtureWeights {
    type Error = Error;

    fn try_from(w: [f64; 4]) -> Result<Self> {
        MixtureWeights::new(w)
    }
}

impl From<MixtureWeights> for [f64; 4] {
    fn from(w: MixtureWeights) -> Self {
        w.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinKind {
    Singlet,
    Triplet(TripletM),
    Mixture(MixtureWeights),
}

/// Spin state of the nucleon pair. The preferred axis quantizes the triplet
/// substates and defaults to the beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSpinState {
    pub kind: SpinKind,
    pub preferred_axis: MeasurementAxis,
}

impl PairSpinState {
    pub fn singlet() -> Self {
        Self::from_kind(SpinKind::Singlet)
    }

    pub fn triplet(m: TripletM) -> Self {
        Self::from_kind(SpinKind::Triplet(m))
    }

    pub fn mixture(weights: MixtureWeights) -> Self {
        Self::from_kind(SpinKind::Mixture(weights))
    }

    /// Singlet with fraction `r` of unpolarized triplet (equal substate weights).
    pub fn unpolarized(r: f64) -> Result<Self> {
        Ok(Self::mixture(MixtureWeights::with_triplet_fraction(
            r,
            [1.0, 1.0, 1.0],
        )?))
    }

    /// Singlet with fraction `r` of the m = 0 substate. For analyzer axes
    /// transverse to the preferred axis the triplet part correlates as
    /// `E_t = a.b = -E_s`.
    pub fn opposed(r: f64) -> Result<Self> {
        Ok(Self::mixture(MixtureWeights::with_triplet_fraction(
            r,
            [0.0, 1.0, 0.0],
        )?))
    }

    pub fn from_kind(kind: SpinKind) -> Self {
        Self {
            kind,
            preferred_axis: MeasurementAxis::BEAM,
        }
    }

    pub fn with_preferred_axis(mut self, axis: MeasurementAxis) -> Self {
        self.preferred_axis = axis;
        self
    }

    /// Weights over `[singlet, m=-1, m=0, m=+1]`.
    pub fn weights(&self) -> [f64; 4] {
        match self.kind {
            SpinKind::Singlet => [1.0, 0.0, 0.0, 0.0],
            SpinKind::Triplet(m) => {
                let mut w = [0.0; 4];
                w[1 + m.index()] = 1.0;
                w
            }
            SpinKind::Mixture(w) => w.as_array(),
        }
    }

    pub fn triplet_fraction(&self) -> f64 {
        let w = self.weights();
        w[1] + w[2] + w[3]
    }
}

/// Correlation `E(a, b)`, the mean of `rA rB`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorrelationValue(f64);

impl CorrelationValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// First and second moments of the two-arm outcome distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinMoments {
    pub mean_a: f64,
    pub mean_b: f64,
    pub correlation: f64,
}

impl SpinMoments {
    fn scaled(self, w: f64) -> Self {
        Self {
            mean_a: w * self.mean_a,
            mean_b: w * self.mean_b,
            correlation: w * self.correlation,
        }
    }

    fn add(self, o: Self) -> Self {
        Self {
            mean_a: self.mean_a + o.mean_a,
            mean_b: self.mean_b + o.mean_b,
            correlation: self.correlation + o.correlation,
        }
    }

    pub fn probability(&self, ra: SpinOutcome, rb: SpinOutcome) -> f64 {
        let (sa, sb) = (ra.sign(), rb.sign());
        let p = 0.25 * (1.0 + sa * self.mean_a + sb * self.mean_b + sa * sb * self.correlation);
        p.clamp(0.0, 1.0)
    }
}

fn component_moments(
    component: usize,
    n: &MeasurementAxis,
    a: &MeasurementAxis,
    b: &MeasurementAxis,
) -> SpinMoments {
    let (an, bn) = (a.dot(n), b.dot(n));
    match component {
        // singlet
        0 => SpinMoments {
            mean_a: 0.0,
            mean_b: 0.0,
            correlation: -a.dot(b),
        },
        // |1,-1>
        1 => SpinMoments {
            mean_a: -an,
            mean_b: -bn,
            correlation: an * bn,
        },
        // |1,0>
        2 => SpinMoments {
            mean_a: 0.0,
            mean_b: 0.0,
            correlation: a.dot(b) - 2.0 * an * bn,
        },
        // |1,+1>
        3 => SpinMoments {
            mean_a: an,
            mean_b: bn,
            correlation: an * bn,
        },
        _ => unreachable!("four spin components"),
    }
}

/// Single-arm means and correlation for the state at axes `a`, `b`.
pub fn moments(state: &PairSpinState, a: &MeasurementAxis, b: &MeasurementAxis) -> SpinMoments {
    let zero = SpinMoments {
        mean_a: 0.0,
        mean_b: 0.0,
        correlation: 0.0,
    };
    state
        .weights()
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .fold(zero, |acc, (k, w)| {
            acc.add(component_moments(k, &state.preferred_axis, a, b).scaled(*w))
        })
}

/// Probability that arm A reports `ra` and arm B reports `rb`.
pub fn joint_probability(
    state: &PairSpinState,
    a: &MeasurementAxis,
    b: &MeasurementAxis,
    ra: SpinOutcome,
    rb: SpinOutcome,
) -> f64 {
    moments(state, a, b).probability(ra, rb)
}

/// All four joint probabilities, ordered as [`OUTCOME_PAIRS`].
pub fn joint_distribution(
    state: &PairSpinState,
    a: &MeasurementAxis,
    b: &MeasurementAxis,
) -> [f64; 4] {
    let m = moments(state, a, b);
    OUTCOME_PAIRS.map(|(ra, rb)| m.probability(ra, rb))
}

pub fn correlation(
    state: &PairSpinState,
    a: &MeasurementAxis,
    b: &MeasurementAxis,
) -> CorrelationValue {
    CorrelationValue(moments(state, a, b).correlation.clamp(-1.0, 1.0))
}

/// `|E(a,b) + E(a,b') + E(a',b) - E(a',b')|`.
pub fn chsh_combination(
    state: &PairSpinState,
    a: &MeasurementAxis,
    a_prime: &MeasurementAxis,
    b: &MeasurementAxis,
    b_prime: &MeasurementAxis,
) -> f64 {
    let e = |x: &MeasurementAxis, y: &MeasurementAxis| correlation(state, x, y).value();
    (e(a, b) + e(a, b_prime) + e(a_prime, b) - e(a_prime, b_prime)).abs()
}

/// Largest correlation magnitude reachable by a local model, interpolated
/// linearly in the angle between the analyzers: `2 theta / pi - 1`.
pub fn bell_envelope(theta: f64) -> Result<f64> {
    check_range("theta", theta, 0.0, PI)?;
    Ok(2.0 * theta / PI - 1.0)
}

/// `|E_st| - |E_max|` for a singlet diluted by a fraction `r` of pairs whose
/// correlation is exactly opposite to the singlet's.
///
/// Only the branch `r <= 1/2`, `theta <= pi/2` is defined; there both
/// absolute values reduce to the signed forms used here.
pub fn envelope_gap(r: f64, theta: f64) -> Result<f64> {
    check_range("triplet fraction", r, 0.0, 0.5)?;
    check_range("theta", theta, 0.0, FRAC_PI_2)?;
    Ok((1.0 - 2.0 * r) * theta.cos() + 2.0 * theta / PI - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeGapMax {
    pub theta: f64,
    pub delta: f64,
}

/// Maximum of [`envelope_gap`] over `theta` in `[0, pi/2]`.
pub fn max_envelope_gap(r: f64) -> Result<EnvelopeGapMax> {
    check_range("triplet fraction", r, 0.0, 0.5)?;
    // Concave in theta on the branch, so golden-section search converges to
    // the global maximum.
    let f = |t: f64| (1.0 - 2.0 * r) * t.cos() + 2.0 * t / PI - 1.0;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, FRAC_PI_2);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-12 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    // Endpoints are candidates too: at r >= 1/2 - 1/pi the maximum sits on
    // theta = pi/2.
    let mid = 0.5 * (lo + hi);
    let best = [(0.0, f(0.0)), (mid, f(mid)), (FRAC_PI_2, f(FRAC_PI_2))]
        .into_iter()
        .fold((mid, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
    Ok(EnvelopeGapMax {
        theta: best.0,
        delta: best.1,
    })
}
