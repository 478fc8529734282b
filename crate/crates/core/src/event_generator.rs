//! Monte Carlo generation of `gamma + d -> p + n` events.
//!
//! For each event the generator draws a photon energy from the beam
//! spectrum, decides singlet or triplet from the triplet share of the
//! cross section inside the forward cone, draws the proton's CMS polar angle
//! from the matching angular law truncated to the cone, and finally samples
//! the latent spin outcomes at the analyzer axes from the joint distribution
//! of that pure state. The neutron is back-to-back with the proton.

use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cross_sections::{
    cone_average_factor, fit_ratios, ratios_unchecked, ConeAngle, ConeMode, PhotonEnergy, RangePolicy,
    THRESHOLD_MEV,
};
use crate::error::{check_range, Error, Result};
use crate::exec::Executor;
use crate::rng::{RngStream, StreamRng};
use crate::spin_model::{
    joint_distribution, MeasurementAxis, PairSpinState, SpinOutcome, TripletM, OUTCOME_PAIRS,
};

/// Photon energy spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BeamSpectrum {
    Monoenergetic { e_gamma_mev: f64 },
    /// Uniform in `[e_min_mev, e_max_mev]`.
    Band { e_min_mev: f64, e_max_mev: f64 },
}

impl BeamSpectrum {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            BeamSpectrum::Monoenergetic { e_gamma_mev } => (e_gamma_mev, e_gamma_mev),
            BeamSpectrum::Band {
                e_min_mev,
                e_max_mev,
            } => (e_min_mev, e_max_mev),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            BeamSpectrum::Monoenergetic { e_gamma_mev } => e_gamma_mev,
            BeamSpectrum::Band {
                e_min_mev,
                e_max_mev,
            } => e_min_mev + (e_max_mev - e_min_mev) * rng.random::<f64>(),
        }
    }
}

/// Spin state actually assigned to a generated pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateKind {
    Singlet,
    Triplet(TripletM),
}

impl StateKind {
    pub fn pure_state(self, preferred_axis: MeasurementAxis) -> PairSpinState {
        let s = match self {
            StateKind::Singlet => PairSpinState::singlet(),
            StateKind::Triplet(m) => PairSpinState::triplet(m),
        };
        s.with_preferred_axis(preferred_axis)
    }

    fn component(self) -> usize {
        match self {
            StateKind::Singlet => 0,
            StateKind::Triplet(m) => 1 + m.index(),
        }
    }
}

impl fmt::Display for StateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateKind::Singlet => f.write_str("singlet"),
            StateKind::Triplet(TripletM::Minus) => f.write_str("triplet-1"),
            StateKind::Triplet(TripletM::Zero) => f.write_str("triplet0"),
            StateKind::Triplet(TripletM::Plus) => f.write_str("triplet+1"),
        }
    }
}

impl FromStr for StateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "singlet" => Ok(StateKind::Singlet),
            "triplet-1" => Ok(StateKind::Triplet(TripletM::Minus)),
            "triplet0" => Ok(StateKind::Triplet(TripletM::Zero)),
            "triplet+1" => Ok(StateKind::Triplet(TripletM::Plus)),
            other => Err(Error::Config(format!("unknown state kind '{other}'"))),
        }
    }
}

impl Serialize for StateKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StateKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngularLaw {
    /// Uniform in `cos(Theta)`.
    Isotropic,
    /// Density proportional to `sin^2(Theta)` per unit solid angle.
    SinSquared,
}

// Integral of sin^3 from 0 to Theta, written in u = 1 - cos(Theta).
fn sin3_cdf(u: f64) -> f64 {
    u * u * (1.0 - u / 3.0)
}

/// Solves `sin3_cdf(u) = target` for `u` in `[0, hi]` by Newton steps kept
/// inside a shrinking bisection bracket.
fn invert_sin3_cdf(target: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, hi);
    let tol = 1e-12 * hi.max(f64::MIN_POSITIVE);
    // sqrt(target) is the small-angle solution and a good first guess.
    let mut u = target.sqrt().clamp(lo, hi);
    for _ in 0..200 {
        let g = sin3_cdf(u) - target;
        if g > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let slope = u * (2.0 - u);
        let newton = if slope > 0.0 { u - g / slope } else { f64::NAN };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - u).abs() <= tol || hi - lo <= tol {
            return next;
        }
        u = next;
    }
    u
}

/// Polar angle `Theta` in `[0, alpha]` drawn from `law` truncated to the cone.
pub fn sample_theta<R: Rng + ?Sized>(law: AngularLaw, cone: ConeAngle, rng: &mut R) -> f64 {
    let u_max = cone.one_minus_cos();
    let v: f64 = rng.random();
    let u = match law {
        AngularLaw::Isotropic => v * u_max,
        AngularLaw::SinSquared => invert_sin3_cdf(v * sin3_cdf(u_max), u_max),
    };
    // theta = acos(1 - u), evaluated without cancellation near 0.
    2.0 * (0.5 * u).sqrt().min(1.0).asin()
}

/// How the triplet share of generated pairs is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TripletModel {
    /// Share taken from the cross-section fits at the event energy and cone.
    CrossSection { substates: [f64; 3] },
    /// Fixed share `r` regardless of energy.
    Fixed { r: f64, substates: [f64; 3] },
}

impl TripletModel {
    fn substates(&self) -> [f64; 3] {
        match *self {
            TripletModel::CrossSection { substates } | TripletModel::Fixed { substates, .. } => {
                substates
            }
        }
    }
}

/// Draws the pair's spin state given the triplet probability.
pub fn sample_state<R: Rng + ?Sized>(
    triplet_probability: f64,
    substates_cdf: &[f64; 3],
    rng: &mut R,
) -> StateKind {
    let v: f64 = rng.random();
    if v >= triplet_probability {
        return StateKind::Singlet;
    }
    let w: f64 = rng.random();
    let m = TripletM::ALL
        .into_iter()
        .zip(substates_cdf.iter())
        .find(|(_, c)| w < **c)
        .map(|(m, _)| m)
        .unwrap_or(TripletM::Plus);
    StateKind::Triplet(m)
}

fn outcome_from_cdf(cdf: &[f64; 4], v: f64) -> (SpinOutcome, SpinOutcome) {
    let k = cdf.iter().position(|c| v < *c).unwrap_or(3);
    OUTCOME_PAIRS[k]
}

fn cumulative<const N: usize>(p: &[f64; N]) -> [f64; N] {
    let mut c = [0.0; N];
    let mut acc = 0.0;
    for i in 0..N {
        acc += p[i];
        c[i] = acc;
    }
    let total = acc;
    c.map(|x| x / total)
}

/// Draws `(rA, rB)` from the state's joint distribution at axes `a`, `b`.
pub fn sample_outcomes<R: Rng + ?Sized>(
    state: &PairSpinState,
    a: &MeasurementAxis,
    b: &MeasurementAxis,
    rng: &mut R,
) -> (SpinOutcome, SpinOutcome) {
    let cdf = cumulative(&joint_distribution(state, a, b));
    outcome_from_cdf(&cdf, rng.random())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisintegrationEvent {
    pub e_gamma: f64,
    pub theta_cms: f64,
    pub phi_cms: f64,
    pub state_kind: StateKind,
    #[serde(rename = "rA")]
    pub ra: SpinOutcome,
    #[serde(rename = "rB")]
    pub rb: SpinOutcome,
    #[serde(skip)]
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub n_events: u64,
    pub n_singlet: u64,
    /// Counts for `[m=-1, m=0, m=+1]`.
    pub n_triplet: [u64; 3],
}

impl GenerationSummary {
    pub fn record(&mut self, kind: StateKind) {
        self.n_events += 1;
        match kind {
            StateKind::Singlet => self.n_singlet += 1,
            StateKind::Triplet(m) => self.n_triplet[m.index()] += 1,
        }
    }

    pub fn triplet_count(&self) -> u64 {
        self.n_triplet.iter().sum()
    }

    /// Empirical triplet fraction; `None` for an empty run.
    pub fn triplet_fraction(&self) -> Option<f64> {
        (self.n_events > 0).then(|| self.triplet_count() as f64 / self.n_events as f64)
    }
}

impl Add for GenerationSummary {
    type Output = Self;

    fn add(mut self, o: Self) -> Self {
        self += o;
        self
    }
}

impl AddAssign for GenerationSummary {
    fn add_assign(&mut self, o: Self) {
        self.n_events += o.n_events;
        self.n_singlet += o.n_singlet;
        for i in 0..3 {
            self.n_triplet[i] += o.n_triplet[i];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub beam: BeamSpectrum,
    pub cone: ConeAngle,
    pub triplet: TripletModel,
    pub preferred_axis: MeasurementAxis,
    pub policy: RangePolicy,
}

#[derive(Debug, Clone, Copy)]
enum TripletShare {
    Constant(f64),
    FromFit,
}

/// Validated generator bound to one pair of analyzer axes.
#[derive(Debug, Clone)]
pub struct EventGenerator {
    config: GeneratorConfig,
    a: MeasurementAxis,
    b: MeasurementAxis,
    share: TripletShare,
    /// Exact solid-angle average of `sin^2` over the cone.
    cone_factor: f64,
    substates_cdf: [f64; 3],
    /// Outcome CDFs for `[singlet, m=-1, m=0, m=+1]` at `(a, b)`.
    outcome_cdfs: [[f64; 4]; 4],
}

impl EventGenerator {
    pub fn new(config: GeneratorConfig, a: MeasurementAxis, b: MeasurementAxis) -> Result<Self> {
        let (lo, hi) = config.beam.bounds();
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::Config(format!("invalid beam energy range [{lo}, {hi}]")));
        }
        let substates = config.triplet.substates();
        if substates.iter().any(|w| !w.is_finite() || *w < 0.0) || substates.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::Config(
                "triplet substate weights must be nonnegative with a positive sum".into(),
            ));
        }
        let cone_factor = cone_average_factor(config.cone, ConeMode::Exact);
        let share = match config.triplet {
            TripletModel::Fixed { r, .. } => {
                check_range("triplet fraction", r, 0.0, 1.0)?;
                for e in [lo, hi] {
                    if e < THRESHOLD_MEV {
                        return Err(Error::BelowThreshold {
                            e_gamma: e,
                            threshold: THRESHOLD_MEV,
                        });
                    }
                }
                TripletShare::Constant(r)
            }
            TripletModel::CrossSection { .. } => {
                let share_at = |e: f64| -> Result<f64> {
                    Ok(fit_ratios(PhotonEnergy::new(e)?, config.policy)?
                        .value
                        .triplet_fraction(cone_factor))
                };
                let at_lo = share_at(lo)?;
                share_at(hi)?;
                if lo == hi {
                    TripletShare::Constant(at_lo)
                } else {
                    TripletShare::FromFit
                }
            }
        };
        let mut outcome_cdfs = [[0.0; 4]; 4];
        let kinds = [
            StateKind::Singlet,
            StateKind::Triplet(TripletM::Minus),
            StateKind::Triplet(TripletM::Zero),
            StateKind::Triplet(TripletM::Plus),
        ];
        for kind in kinds {
            let state = kind.pure_state(config.preferred_axis);
            outcome_cdfs[kind.component()] = cumulative(&joint_distribution(&state, &a, &b));
        }
        Ok(Self {
            config,
            a,
            b,
            share,
            cone_factor,
            substates_cdf: cumulative(&substates),
            outcome_cdfs,
        })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn axes(&self) -> (MeasurementAxis, MeasurementAxis) {
        (self.a, self.b)
    }

    /// Triplet probability for a pair produced at `e_gamma`.
    pub fn triplet_probability(&self, e_gamma: f64) -> f64 {
        match self.share {
            TripletShare::Constant(r) => r,
            // Band endpoints were range-checked at construction.
            TripletShare::FromFit => ratios_unchecked(e_gamma).triplet_fraction(self.cone_factor),
        }
    }

    /// Share of triplet pairs at `e_gamma` drawn from the `b_E sin^2` term
    /// rather than the isotropic `a_E` term, within the cone.
    pub fn triplet_sin2_share(&self, e_gamma: f64) -> f64 {
        let k = ratios_unchecked(e_gamma).be_over_ae * self.cone_factor;
        k / (1.0 + k)
    }

    pub fn next_event(&self, rng: &mut StreamRng) -> DisintegrationEvent {
        let e_gamma = self.config.beam.sample(rng);
        let kind = sample_state(self.triplet_probability(e_gamma), &self.substates_cdf, rng);
        let law = match kind {
            StateKind::Singlet => AngularLaw::Isotropic,
            StateKind::Triplet(_) if rng.random::<f64>() < self.triplet_sin2_share(e_gamma) => {
                AngularLaw::SinSquared
            }
            StateKind::Triplet(_) => AngularLaw::Isotropic,
        };
        let theta_cms = sample_theta(law, self.config.cone, rng);
        let phi_cms = TAU * rng.random::<f64>();
        let (ra, rb) = outcome_from_cdf(&self.outcome_cdfs[kind.component()], rng.random());
        DisintegrationEvent {
            e_gamma,
            theta_cms,
            phi_cms,
            state_kind: kind,
            ra,
            rb,
            weight: 1.0,
        }
    }
}

/// Generates `n_events` events from one random stream.
pub fn generate(
    generator: &EventGenerator,
    n_events: u64,
    stream: RngStream,
) -> (Vec<DisintegrationEvent>, GenerationSummary) {
    let mut rng = stream.rng();
    let mut summary = GenerationSummary::default();
    let events = (0..n_events)
        .map(|_| {
            let ev = generator.next_event(&mut rng);
            summary.record(ev.state_kind);
            ev
        })
        .collect();
    (events, summary)
}

/// Number of events assigned to chunk `i` of `chunks` when `total` events are split.
pub fn chunk_len(total: u64, chunks: u32, i: u32) -> u64 {
    let chunks = u64::from(chunks.max(1));
    let base = total / chunks;
    base + u64::from(u64::from(i) < total % chunks)
}

/// Generates `n_events` split over `streams` independent streams of `seed`
/// (task index 0). Events are returned in stream order; the summary is the
/// sum of the per-stream summaries.
pub fn generate_streams(
    generator: &EventGenerator,
    n_events: u64,
    seed: u64,
    streams: u32,
    exec: Executor,
) -> (Vec<DisintegrationEvent>, GenerationSummary) {
    let ids: Vec<u32> = (0..streams.max(1)).collect();
    let parts = exec.map(&ids, |&i| {
        generate(
            generator,
            chunk_len(n_events, streams, i),
            RngStream::for_task(seed, 0, i),
        )
    });
    let mut events = Vec::with_capacity(n_events as usize);
    let mut summary = GenerationSummary::default();
    for (ev, s) in parts {
        events.extend(ev);
        summary += s;
    }
    (events, summary)
}

pub const EVENT_DUMP_HEADER: [&str; 6] = ["e_gamma", "theta_cms", "phi_cms", "state_kind", "rA", "rB"];

/// Writes events as comma-separated records under [`EVENT_DUMP_HEADER`].
pub struct EventDumpWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> EventDumpWriter<W> {
    pub fn new(out: W) -> std::io::Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(EVENT_DUMP_HEADER).map_err(std::io::Error::other)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, ev: &DisintegrationEvent) -> std::io::Result<()> {
        self.inner
            .write_record([
                ev.e_gamma.to_string(),
                ev.theta_cms.to_string(),
                ev.phi_cms.to_string(),
                ev.state_kind.to_string(),
                ev.ra.value().to_string(),
                ev.rb.value().to_string(),
            ])
            .map_err(std::io::Error::other)
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| e.into_error())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_model::correlation;

    fn mono(e: f64) -> BeamSpectrum {
        BeamSpectrum::Monoenergetic { e_gamma_mev: e }
    }

    fn config(triplet: TripletModel, cone_deg: f64) -> GeneratorConfig {
        GeneratorConfig {
            beam: mono(2.3),
            cone: ConeAngle::from_degrees(cone_deg).unwrap(),
            triplet,
            preferred_axis: MeasurementAxis::BEAM,
            policy: RangePolicy::Strict,
        }
    }

    #[test]
    fn cdf_inversion_is_accurate() {
        for hi in [1e-4, 6e-4, 0.1, 1.0, 2.0] {
            for k in 0..=20 {
                let target = sin3_cdf(hi) * k as f64 / 20.0;
                let u = invert_sin3_cdf(target, hi);
                assert!((0.0..=hi).contains(&u));
                // plain bisection oracle
                let (mut a, mut b) = (0.0, hi);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if sin3_cdf(m) > target {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                assert!((u - 0.5 * (a + b)).abs() <= 2e-12 * hi, "hi={hi} k={k}");
            }
        }
    }

    #[test]
    fn theta_stays_in_cone() {
        let mut rng = RngStream::new(3, 0).rng();
        let cone = ConeAngle::from_degrees(2.0).unwrap();
        for law in [AngularLaw::Isotropic, AngularLaw::SinSquared] {
            for _ in 0..10_000 {
                let t = sample_theta(law, cone, &mut rng);
                assert!((0.0..=cone.radians() + 1e-15).contains(&t));
            }
        }
    }

    #[test]
    fn fixed_zero_share_is_always_singlet() {
        let g = EventGenerator::new(
            config(TripletModel::Fixed { r: 0.0, substates: [1.0; 3] }, 2.0),
            MeasurementAxis::transverse(0.0),
            MeasurementAxis::transverse(1.0),
        )
        .unwrap();
        let (_, s) = generate(&g, 10_000, RngStream::new(1, 0));
        assert_eq!(s.n_singlet, 10_000);
    }

    #[test]
    fn empty_run() {
        let g = EventGenerator::new(
            config(TripletModel::CrossSection { substates: [1.0; 3] }, 2.0),
            MeasurementAxis::BEAM,
            MeasurementAxis::BEAM,
        )
        .unwrap();
        let (ev, s) = generate(&g, 0, RngStream::new(1, 0));
        assert!(ev.is_empty());
        assert_eq!(s, GenerationSummary::default());
        assert_eq!(s.triplet_fraction(), None);
    }

    #[test]
    fn strict_policy_rejects_out_of_window_beam() {
        let mut c = config(TripletModel::CrossSection { substates: [1.0; 3] }, 2.0);
        c.beam = mono(6.0);
        assert!(EventGenerator::new(c, MeasurementAxis::BEAM, MeasurementAxis::BEAM).is_err());
        c.policy = RangePolicy::Extrapolate;
        assert!(EventGenerator::new(c, MeasurementAxis::BEAM, MeasurementAxis::BEAM).is_ok());
        c.beam = mono(2.0);
        assert!(EventGenerator::new(c, MeasurementAxis::BEAM, MeasurementAxis::BEAM).is_err());
    }

    #[test]
    fn outcome_table_matches_state() {
        let a = MeasurementAxis::normalized(0.2, 0.5, 0.6).unwrap();
        let b = MeasurementAxis::normalized(-0.7, 0.1, 0.3).unwrap();
        let mut rng = RngStream::new(9, 0).rng();
        let state = PairSpinState::triplet(TripletM::Plus);
        let n = 200_000;
        let mean: f64 = (0..n)
            .map(|_| {
                let (x, y) = sample_outcomes(&state, &a, &b, &mut rng);
                x.sign() * y.sign()
            })
            .sum::<f64>()
            / n as f64;
        let e = correlation(&state, &a, &b).value();
        let sigma = ((1.0 - e * e) / n as f64).sqrt();
        assert!((mean - e).abs() < 4.0 * sigma);
    }

    #[test]
    fn state_kind_strings_round_trip() {
        for k in [
            StateKind::Singlet,
            StateKind::Triplet(TripletM::Minus),
            StateKind::Triplet(TripletM::Zero),
            StateKind::Triplet(TripletM::Plus),
        ] {
            assert_eq!(k.to_string().parse::<StateKind>().unwrap(), k);
        }
        assert!("triplet2".parse::<StateKind>().is_err());
    }

    #[test]
    fn dump_has_header_and_rows() {
        let g = EventGenerator::new(
            config(TripletModel::Fixed { r: 0.5, substates: [1.0; 3] }, 10.0),
            MeasurementAxis::transverse(0.0),
            MeasurementAxis::transverse(0.5),
        )
        .unwrap();
        let (events, _) = generate(&g, 5, RngStream::new(2, 0));
        let mut w = EventDumpWriter::new(Vec::new()).unwrap();
        for e in &events {
            w.write(e).unwrap();
        }
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "e_gamma,theta_cms,phi_cms,state_kind,rA,rB");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].split(',').count() == 6);
    }

    #[test]
    fn chunking_covers_total() {
        for (total, chunks) in [(0u64, 4u32), (10, 3), (1_000_001, 8), (5, 1)] {
            let sum: u64 = (0..chunks).map(|i| chunk_len(total, chunks, i)).sum();
            assert_eq!(sum, total);
        }
    }
}
