//! End-to-end simulated experiment: generate, detect, tally, estimate.
//!
//! Work is split into one task per (analyzer setting, stream). Task
//! `(k, i)` draws from [`RngStream::for_task`]`(seed, k, i)`, so the merged
//! tallies depend only on the seed, the stream count and the configuration,
//! never on scheduling.

use serde::{Deserialize, Serialize};

use crate::cross_sections::{ConeAngle, RangePolicy};
use crate::detector_model::{
    bell_test, detect, e_exp, envelope_comparison, BellTest, CoincidenceCounts,
    CorrelationEstimate, EnvelopeMargin, PolarimeterConfig,
};
use crate::error::{check_range, Error, Result};
use crate::event_generator::{
    chunk_len, BeamSpectrum, DisintegrationEvent, EventGenerator, GenerationSummary,
    GeneratorConfig, TripletModel,
};
use crate::exec::Executor;
use crate::rng::RngStream;
use crate::spin_model::{
    chsh_combination, correlation, MeasurementAxis, MixtureWeights, PairSpinState,
};

/// Analyzer axis given either as an azimuth in degrees in the plane
/// transverse to the beam, or as an explicit unit vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    AzimuthDeg(f64),
    Vector(MeasurementAxis),
}

impl AxisSpec {
    pub fn axis(&self) -> Result<MeasurementAxis> {
        match *self {
            AxisSpec::AzimuthDeg(d) if d.is_finite() => {
                Ok(MeasurementAxis::transverse(d.to_radians()))
            }
            AxisSpec::AzimuthDeg(d) => Err(Error::Config(format!("invalid azimuth {d}"))),
            AxisSpec::Vector(a) => Ok(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzerSetting {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub a: AxisSpec,
    pub b: AxisSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshSettings {
    pub a: AxisSpec,
    pub a_prime: AxisSpec,
    pub b: AxisSpec,
    pub b_prime: AxisSpec,
}

impl Default for ChshSettings {
    fn default() -> Self {
        Self {
            a: AxisSpec::AzimuthDeg(0.0),
            a_prime: AxisSpec::AzimuthDeg(90.0),
            b: AxisSpec::AzimuthDeg(45.0),
            b_prime: AxisSpec::AzimuthDeg(315.0),
        }
    }
}

fn uniform_substates() -> [f64; 3] {
    [1.0, 1.0, 1.0]
}

/// How triplet pairs enter the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum TripletHandling {
    /// Triplet share from the cross-section fits at the beam energy and cone.
    Auto {
        #[serde(default = "uniform_substates")]
        substates: [f64; 3],
    },
    /// Fixed triplet share `r`.
    Forced {
        r: f64,
        #[serde(default = "uniform_substates")]
        substates: [f64; 3],
    },
    /// Fixed share `r` of the m = 0 substate, which for transverse analyzer
    /// axes correlates exactly opposite to the singlet.
    Extreme { r: f64 },
}

impl TripletHandling {
    fn model(&self) -> TripletModel {
        match *self {
            TripletHandling::Auto { substates } => TripletModel::CrossSection { substates },
            TripletHandling::Forced { r, substates } => TripletModel::Fixed { r, substates },
            TripletHandling::Extreme { r } => TripletModel::Fixed {
                r,
                substates: [0.0, 1.0, 0.0],
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarimeterSpec {
    pub efficiency: f64,
    pub analyzing_power: f64,
    #[serde(default = "fifty")]
    pub detector_angle_deg: f64,
}

fn fifty() -> f64 {
    50.0
}

impl Default for PolarimeterSpec {
    fn default() -> Self {
        Self {
            efficiency: 1.0,
            analyzing_power: 1.0,
            detector_angle_deg: 50.0,
        }
    }
}

/// Complete description of a simulated run. Angles are in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub beam: BeamSpectrum,
    /// Photons per second; informational, rates are handled by the planner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam_intensity: Option<f64>,
    pub cone_alpha_deg: f64,
    /// Explicit analyzer settings.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub settings: Vec<AnalyzerSetting>,
    /// Shorthand: one setting per angle with `a` at azimuth 0 and `b` at the angle.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub thetas_deg: Vec<f64>,
    /// Adds the four CHSH settings and the combined test.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chsh: Option<ChshSettings>,
    pub triplet: TripletHandling,
    pub polarimeter: PolarimeterSpec,
    /// Quantization axis of triplet substates; defaults to the beam.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preferred_axis: Option<MeasurementAxis>,
    pub seed: u64,
    pub streams: u32,
    /// Events generated per analyzer setting.
    pub n_events: u64,
    #[serde(default)]
    pub allow_extrapolation: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            beam: BeamSpectrum::Monoenergetic { e_gamma_mev: 2.3 },
            beam_intensity: None,
            cone_alpha_deg: 2.0,
            settings: Vec::new(),
            thetas_deg: vec![0.0, 20.0, 40.0, 60.0, 90.0],
            chsh: Some(ChshSettings::default()),
            triplet: TripletHandling::Auto {
                substates: uniform_substates(),
            },
            polarimeter: PolarimeterSpec::default(),
            preferred_axis: None,
            seed: 1,
            streams: 8,
            n_events: 100_000,
            allow_extrapolation: false,
        }
    }
}

/// One analyzer setting after resolving labels and axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSetting {
    pub label: String,
    pub a: MeasurementAxis,
    pub b: MeasurementAxis,
}

impl ExperimentConfig {
    pub fn policy(&self) -> RangePolicy {
        if self.allow_extrapolation {
            RangePolicy::Extrapolate
        } else {
            RangePolicy::Strict
        }
    }

    pub fn preferred_axis(&self) -> MeasurementAxis {
        self.preferred_axis.unwrap_or(MeasurementAxis::BEAM)
    }

    /// Explicit settings, then the angle shorthand, then the CHSH quadruple.
    pub fn resolved_settings(&self) -> Result<Vec<ResolvedSetting>> {
        let mut out = Vec::new();
        for (i, s) in self.settings.iter().enumerate() {
            out.push(ResolvedSetting {
                label: s.label.clone().unwrap_or_else(|| format!("setting{i}")),
                a: s.a.axis()?,
                b: s.b.axis()?,
            });
        }
        for &t in &self.thetas_deg {
            check_range("theta_deg", t, 0.0, 180.0)?;
            out.push(ResolvedSetting {
                label: format!("theta={t}"),
                a: MeasurementAxis::transverse(0.0),
                b: MeasurementAxis::transverse(t.to_radians()),
            });
        }
        if let Some(c) = &self.chsh {
            let (a, ap, b, bp) = (c.a.axis()?, c.a_prime.axis()?, c.b.axis()?, c.b_prime.axis()?);
            for (label, x, y) in [
                ("chsh:a,b", a, b),
                ("chsh:a,b'", a, bp),
                ("chsh:a',b", ap, b),
                ("chsh:a',b'", ap, bp),
            ] {
                out.push(ResolvedSetting {
                    label: label.into(),
                    a: x,
                    b: y,
                });
            }
        }
        if out.is_empty() {
            return Err(Error::Config("no analyzer settings configured".into()));
        }
        Ok(out)
    }

    fn polarimeters(&self, s: &ResolvedSetting) -> Result<(PolarimeterConfig, PolarimeterConfig)> {
        let p = |axis| PolarimeterConfig {
            axis,
            efficiency: self.polarimeter.efficiency,
            analyzing_power: self.polarimeter.analyzing_power,
            detector_angle_deg: self.polarimeter.detector_angle_deg,
        };
        let (pa, pb) = (p(s.a), p(s.b));
        pa.validate()?;
        Ok((pa, pb))
    }

    fn generator(&self, s: &ResolvedSetting) -> Result<EventGenerator> {
        EventGenerator::new(
            GeneratorConfig {
                beam: self.beam,
                cone: ConeAngle::from_degrees(self.cone_alpha_deg)?,
                triplet: self.triplet.model(),
                preferred_axis: self.preferred_axis(),
                policy: self.policy(),
            },
            s.a,
            s.b,
        )
    }

    /// Checks every precondition without generating events.
    pub fn validate(&self) -> Result<()> {
        if self.streams == 0 {
            return Err(Error::Config("streams must be at least 1".into()));
        }
        if let TripletHandling::Extreme { r } = self.triplet {
            check_range("triplet fraction", r, 0.0, 1.0)?;
        }
        for s in self.resolved_settings()? {
            self.polarimeters(&s)?;
            self.generator(&s)?;
        }
        Ok(())
    }

    /// Triplet share expected at a fixed energy, if it is well defined.
    pub fn expected_triplet_fraction(&self) -> Option<f64> {
        match (self.triplet, self.beam) {
            (TripletHandling::Forced { r, .. } | TripletHandling::Extreme { r }, _) => Some(r),
            (TripletHandling::Auto { .. }, BeamSpectrum::Monoenergetic { e_gamma_mev }) => {
                let s = self.resolved_settings().ok()?;
                Some(self.generator(s.first()?).ok()?.triplet_probability(e_gamma_mev))
            }
            _ => None,
        }
    }

    /// Mixed state the generator produces at fixed energy, if well defined.
    pub fn expected_state(&self) -> Option<PairSpinState> {
        let r = self.expected_triplet_fraction()?;
        let substates = match self.triplet {
            TripletHandling::Auto { substates } | TripletHandling::Forced { substates, .. } => {
                substates
            }
            TripletHandling::Extreme { .. } => [0.0, 1.0, 0.0],
        };
        let w = MixtureWeights::with_triplet_fraction(r, substates).ok()?;
        Some(PairSpinState::mixture(w).with_preferred_axis(self.preferred_axis()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingResult {
    pub label: String,
    pub a: MeasurementAxis,
    pub b: MeasurementAxis,
    pub theta_deg: f64,
    pub counts: CoincidenceCounts,
    pub generation: GenerationSummary,
    pub estimate: Option<CorrelationEstimate>,
    pub zero_coincidences: bool,
    /// `A^2 E(a, b)` for the expected mixed state.
    pub predicted: Option<f64>,
    pub envelope: Option<EnvelopeMargin>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub test: BellTest,
    pub predicted: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub summary: GenerationSummary,
    pub empirical_triplet_fraction: Option<f64>,
    pub expected_triplet_fraction: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub settings: Vec<SettingResult>,
    pub chsh: Option<ChshResult>,
    pub generation: GenerationReport,
    /// No setting recorded a single coincidence.
    pub all_zero_coincidences: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

struct Prepared {
    settings: Vec<ResolvedSetting>,
    generators: Vec<EventGenerator>,
    polarimeters: Vec<(PolarimeterConfig, PolarimeterConfig)>,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    config.validate()?;
    let settings = config.resolved_settings()?;
    let generators = settings
        .iter()
        .map(|s| config.generator(s))
        .collect::<Result<Vec<_>>>()?;
    let polarimeters = settings
        .iter()
        .map(|s| config.polarimeters(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(Prepared {
        settings,
        generators,
        polarimeters,
    })
}

fn run_task(
    generator: &EventGenerator,
    pols: &(PolarimeterConfig, PolarimeterConfig),
    n_events: u64,
    stream: RngStream,
    sink: &mut dyn FnMut(&DisintegrationEvent),
) -> (GenerationSummary, CoincidenceCounts) {
    let mut rng = stream.rng();
    let mut summary = GenerationSummary::default();
    let mut counts = CoincidenceCounts::default();
    for _ in 0..n_events {
        let ev = generator.next_event(&mut rng);
        summary.record(ev.state_kind);
        counts.record(&detect(&ev, &pols.0, &pols.1, &mut rng));
        sink(&ev);
    }
    (summary, counts)
}

/// Runs the configured experiment.
pub fn simulate(config: &ExperimentConfig, exec: Executor) -> Result<RunReport> {
    let p = prepare(config)?;
    let tasks: Vec<(u32, u32)> = (0..p.settings.len() as u32)
        .flat_map(|k| (0..config.streams).map(move |i| (k, i)))
        .collect();
    let parts = exec.map(&tasks, |&(k, i)| {
        run_task(
            &p.generators[k as usize],
            &p.polarimeters[k as usize],
            chunk_len(config.n_events, config.streams, i),
            RngStream::for_task(config.seed, k, i),
            &mut |_| {},
        )
    });
    Ok(assemble(config, &p, &tasks, parts))
}

/// Like [`simulate`] but runs sequentially and hands every generated event to
/// `sink`, in setting-then-stream order.
pub fn simulate_with_events(
    config: &ExperimentConfig,
    sink: &mut dyn FnMut(&DisintegrationEvent),
) -> Result<RunReport> {
    let p = prepare(config)?;
    let tasks: Vec<(u32, u32)> = (0..p.settings.len() as u32)
        .flat_map(|k| (0..config.streams).map(move |i| (k, i)))
        .collect();
    let parts = tasks
        .iter()
        .map(|&(k, i)| {
            run_task(
                &p.generators[k as usize],
                &p.polarimeters[k as usize],
                chunk_len(config.n_events, config.streams, i),
                RngStream::for_task(config.seed, k, i),
                sink,
            )
        })
        .collect();
    Ok(assemble(config, &p, &tasks, parts))
}

fn assemble(
    config: &ExperimentConfig,
    p: &Prepared,
    tasks: &[(u32, u32)],
    parts: Vec<(GenerationSummary, CoincidenceCounts)>,
) -> RunReport {
    let n = p.settings.len();
    let mut gens = vec![GenerationSummary::default(); n];
    let mut counts = vec![CoincidenceCounts::default(); n];
    for (&(k, _), (g, c)) in tasks.iter().zip(parts) {
        gens[k as usize] += g;
        counts[k as usize] += c;
    }
    let expected = config.expected_state();
    let dilution = config.polarimeter.analyzing_power.powi(2);
    let results: Vec<SettingResult> = p
        .settings
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let theta = s.a.angle_to(&s.b);
            let estimate = e_exp(&counts[k]).ok();
            SettingResult {
                label: s.label.clone(),
                a: s.a,
                b: s.b,
                theta_deg: theta.to_degrees(),
                counts: counts[k],
                generation: gens[k],
                estimate,
                zero_coincidences: estimate.is_none(),
                predicted: expected.map(|st| dilution * correlation(&st, &s.a, &s.b).value()),
                envelope: estimate.and_then(|e| envelope_comparison(&e, theta).ok()),
            }
        })
        .collect();

    let chsh = config.chsh.and_then(|c| {
        let quad: Vec<&SettingResult> = results[n - 4..].iter().collect();
        let est: Vec<CorrelationEstimate> = quad.iter().filter_map(|r| r.estimate).collect();
        let est: [CorrelationEstimate; 4] = est.try_into().ok()?;
        let axes = (c.a.axis().ok()?, c.a_prime.axis().ok()?, c.b.axis().ok()?, c.b_prime.axis().ok()?);
        Some(ChshResult {
            test: bell_test(&est),
            predicted: expected
                .map(|st| dilution * chsh_combination(&st, &axes.0, &axes.1, &axes.2, &axes.3)),
        })
    });

    let summary = gens.iter().fold(GenerationSummary::default(), |a, b| a + *b);
    RunReport {
        config: config.clone(),
        all_zero_coincidences: results.iter().all(|r| r.zero_coincidences),
        settings: results,
        chsh,
        generation: GenerationReport {
            summary,
            empirical_triplet_fraction: summary.triplet_fraction(),
            expected_triplet_fraction: config.expected_triplet_fraction(),
        },
        timing: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            n_events: 2_000,
            streams: 3,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn default_config_validates() {
        ExperimentConfig::default().validate().unwrap();
        let s = ExperimentConfig::default().resolved_settings().unwrap();
        assert_eq!(s.len(), 9);
        assert_eq!(s[5].label, "chsh:a,b");
    }

    #[test]
    fn validation_errors() {
        let mut c = small();
        c.streams = 0;
        assert!(c.validate().is_err());
        let mut c = small();
        c.thetas_deg.clear();
        c.chsh = None;
        assert!(c.validate().is_err());
        let mut c = small();
        c.polarimeter.efficiency = 1.5;
        assert!(c.validate().is_err());
        let mut c = small();
        c.beam = BeamSpectrum::Monoenergetic { e_gamma_mev: 6.0 };
        assert!(c.validate().is_err());
        c.allow_extrapolation = true;
        assert!(c.validate().is_ok());
        let mut c = small();
        c.cone_alpha_deg = 200.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let c = small();
        let a = simulate(&c, Executor::Sequential).unwrap();
        let b = simulate(&c, Executor::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn event_sink_sees_every_event_and_matches() {
        let c = small();
        let mut n = 0u64;
        let with = simulate_with_events(&c, &mut |_| n += 1).unwrap();
        assert_eq!(n, 9 * c.n_events);
        assert_eq!(with, simulate(&c, Executor::default()).unwrap());
    }

    #[test]
    fn config_json_round_trip() {
        let mut c = small();
        c.settings.push(AnalyzerSetting {
            label: None,
            a: AxisSpec::Vector(MeasurementAxis::BEAM),
            b: AxisSpec::AzimuthDeg(30.0),
        });
        c.triplet = TripletHandling::Extreme { r: 0.18 };
        let text = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_fields_rejected() {
        let mut v = serde_json::to_value(small()).unwrap();
        v["bogus"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ExperimentConfig>(v).is_err());
    }

    #[test]
    fn expected_state_in_extreme_mode() {
        let mut c = small();
        c.triplet = TripletHandling::Extreme { r: 0.25 };
        let st = c.expected_state().unwrap();
        let a = MeasurementAxis::transverse(0.0);
        let b = MeasurementAxis::transverse(0.4);
        let e = correlation(&st, &a, &b).value();
        assert!((e - (2.0 * 0.25 - 1.0) * 0.4f64.cos()).abs() < 1e-12);
    }
}
