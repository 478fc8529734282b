//! Tabulated outputs for the `analytic`, `xsec`, `rates` and `simulate`
//! commands, each serializable as JSON and writable as CSV.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cross_sections::{
    cone_average_factor, fit_ratios, sigma_total_m1, ConeAngle, ConeMode, PhotonEnergy,
    RangePolicy, RATIO_FIT_WINDOW_MEV, THRESHOLD_MEV,
};
use crate::error::{check_range, Error, Result};
use crate::rate_planner::{
    coincidence_rate, compare, deuteron_reference, pair_rate, pp_reference, RateComparison,
    RateScenario,
};
use crate::simulation::RunReport;
use crate::spin_model::{bell_envelope, envelope_gap, max_envelope_gap};

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv output: {e}"))
}

fn write_rows<W: Write>(out: W, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Config(format!("csv output: {e}")))
}

// ---- analytic ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticConfig {
    #[serde(default = "default_theta_grid")]
    pub theta_deg: Vec<f64>,
    #[serde(default = "default_r_values")]
    pub r_values: Vec<f64>,
}

fn default_theta_grid() -> Vec<f64> {
    (0..=36).map(|i| 5.0 * i as f64).collect()
}

fn default_r_values() -> Vec<f64> {
    vec![0.0, 0.1, 0.18]
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        Self {
            theta_deg: default_theta_grid(),
            r_values: default_r_values(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRow {
    pub theta_deg: f64,
    /// Singlet correlation `-cos(theta)`.
    pub e_singlet: f64,
    /// Local-model envelope `2 theta / pi - 1`.
    pub e_max: f64,
    /// Envelope gap per entry of `r_values`; absent beyond 90 degrees.
    pub delta: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxGapRow {
    pub r: f64,
    pub theta_deg: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticTable {
    pub r_values: Vec<f64>,
    pub rows: Vec<AnalyticRow>,
    pub max_gap: Vec<MaxGapRow>,
}

pub fn analytic_table(cfg: &AnalyticConfig) -> Result<AnalyticTable> {
    for &r in &cfg.r_values {
        check_range("r", r, 0.0, 0.5)?;
    }
    let mut rows = Vec::with_capacity(cfg.theta_deg.len());
    for &d in &cfg.theta_deg {
        check_range("theta_deg", d, 0.0, 180.0)?;
        let t = d.to_radians();
        let delta = cfg
            .r_values
            .iter()
            .map(|&r| (t <= FRAC_PI_2).then(|| envelope_gap(r, t)).transpose())
            .collect::<Result<Vec<_>>>()?;
        rows.push(AnalyticRow {
            theta_deg: d,
            e_singlet: -t.cos(),
            e_max: bell_envelope(t)?,
            delta,
        });
    }
    let max_gap = cfg
        .r_values
        .iter()
        .map(|&r| {
            let m = max_envelope_gap(r)?;
            Ok(MaxGapRow {
                r,
                theta_deg: m.theta.to_degrees(),
                delta: m.delta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalyticTable {
        r_values: cfg.r_values.clone(),
        rows,
        max_gap,
    })
}

impl AnalyticTable {
    /// Wide layout: `grid` rows, then one `max` row per `r` with the gap in
    /// that `r`'s column only.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut header: Vec<String> = ["kind", "theta_deg", "e_singlet", "e_max"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(self.r_values.iter().map(|r| format!("delta_r={r}")));
        let mut rows = Vec::new();
        for row in &self.rows {
            let mut v = vec![
                "grid".into(),
                row.theta_deg.to_string(),
                row.e_singlet.to_string(),
                row.e_max.to_string(),
            ];
            v.extend(row.delta.iter().map(|d| cell(*d)));
            rows.push(v);
        }
        for (i, m) in self.max_gap.iter().enumerate() {
            let t = m.theta_deg.to_radians();
            let mut v = vec![
                "max".into(),
                m.theta_deg.to_string(),
                (-t.cos()).to_string(),
                bell_envelope(t)?.to_string(),
            ];
            v.extend((0..self.r_values.len()).map(|j| if j == i { m.delta.to_string() } else { String::new() }));
            rows.push(v);
        }
        write_rows(out, &header, &rows)
    }
}

// ---- cross sections ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XsecConfig {
    #[serde(default = "default_energies")]
    pub energies_mev: Vec<f64>,
    #[serde(default = "default_alphas")]
    pub alpha_deg: Vec<f64>,
}

fn default_energies() -> Vec<f64> {
    vec![2.226, 2.25, 2.3, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0]
}

fn default_alphas() -> Vec<f64> {
    vec![0.0, 2.0, 5.0, 10.0, 25.0]
}

impl Default for XsecConfig {
    fn default() -> Self {
        Self {
            energies_mev: default_energies(),
            alpha_deg: default_alphas(),
        }
    }
}

/// One (energy, cone) cell. Fitted columns are empty where the fit does not
/// apply and extrapolation was not requested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XsecRow {
    pub e_gamma_mev: f64,
    pub alpha_deg: f64,
    pub sigma_m1: Option<f64>,
    pub am_over_ae: Option<f64>,
    pub be_over_ae: Option<f64>,
    pub fraction_forward: Option<f64>,
    pub cone_factor_exact: f64,
    pub cone_factor_approx: f64,
    pub fraction_cone_exact: Option<f64>,
    pub fraction_cone_approx: Option<f64>,
    /// Some populated value came from outside its fit window.
    pub extrapolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XsecTable {
    pub allow_extrapolation: bool,
    pub rows: Vec<XsecRow>,
}

const XSEC_HEADER: [&str; 11] = [
    "e_gamma_mev",
    "alpha_deg",
    "sigma_m1",
    "am_over_ae",
    "be_over_ae",
    "fraction_forward",
    "cone_factor_exact",
    "cone_factor_approx",
    "fraction_cone_exact",
    "fraction_cone_approx",
    "extrapolated",
];

/// Energies below threshold are rejected outright; energies beyond every
/// fit window need `allow_extrapolation`.
pub fn xsec_table(cfg: &XsecConfig, allow_extrapolation: bool) -> Result<XsecTable> {
    let policy = if allow_extrapolation {
        RangePolicy::Extrapolate
    } else {
        RangePolicy::Strict
    };
    let mut rows = Vec::new();
    for &x in &cfg.energies_mev {
        let e = PhotonEnergy::new(x)?;
        if x < THRESHOLD_MEV {
            return Err(Error::BelowThreshold {
                e_gamma: x,
                threshold: THRESHOLD_MEV,
            });
        }
        if !allow_extrapolation && x > RATIO_FIT_WINDOW_MEV.1 {
            return Err(Error::OutsideValidity {
                fit: "cross-section ratios",
                e_gamma: x,
                lo: THRESHOLD_MEV,
                hi: RATIO_FIT_WINDOW_MEV.1,
            });
        }
        let sigma = sigma_total_m1(e, policy).ok();
        let ratios = fit_ratios(e, policy).ok();
        for &d in &cfg.alpha_deg {
            let alpha = ConeAngle::from_degrees(d)?;
            let (fe, fa) = (
                cone_average_factor(alpha, ConeMode::Exact),
                cone_average_factor(alpha, ConeMode::Approx),
            );
            rows.push(XsecRow {
                e_gamma_mev: x,
                alpha_deg: d,
                sigma_m1: sigma.map(|s| s.value),
                am_over_ae: ratios.map(|r| r.value.am_over_ae),
                be_over_ae: ratios.map(|r| r.value.be_over_ae),
                fraction_forward: ratios.map(|r| r.value.triplet_fraction(0.0)),
                cone_factor_exact: fe,
                cone_factor_approx: fa,
                fraction_cone_exact: ratios.map(|r| r.value.triplet_fraction(fe)),
                fraction_cone_approx: ratios.map(|r| r.value.triplet_fraction(fa)),
                extrapolated: sigma.is_some_and(|s| s.extrapolated)
                    || ratios.is_some_and(|r| r.extrapolated),
            });
        }
    }
    Ok(XsecTable {
        allow_extrapolation,
        rows,
    })
}

impl XsecTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let header: Vec<String> = XSEC_HEADER.iter().map(|s| s.to_string()).collect();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.e_gamma_mev.to_string(),
                    r.alpha_deg.to_string(),
                    cell(r.sigma_m1),
                    cell(r.am_over_ae),
                    cell(r.be_over_ae),
                    cell(r.fraction_forward),
                    r.cone_factor_exact.to_string(),
                    r.cone_factor_approx.to_string(),
                    cell(r.fraction_cone_exact),
                    cell(r.fraction_cone_approx),
                    r.extrapolated.to_string(),
                ]
            })
            .collect();
        write_rows(out, &header, &rows)
    }
}

// ---- rates ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub scenarios: Vec<RateScenario>,
    /// Externally quoted coincidence-rate ratio of the first scenario to the
    /// second, checked against the computed one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quoted_ratio: Option<f64>,
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self {
            scenarios: vec![pp_reference(), deuteron_reference()],
            quoted_ratio: None,
        }
    }
}

/// A quoted ratio is flagged when it differs from the computed one by more
/// than this factor.
pub const RATIO_DISCREPANCY_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRates {
    pub scenario: RateScenario,
    pub pair_rate: f64,
    pub coincidence_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatesReport {
    pub scenarios: Vec<ScenarioRates>,
    /// First scenario against each of the others.
    pub comparisons: Vec<RateComparison>,
    pub quoted_ratio: Option<f64>,
    pub notes: Vec<String>,
}

pub fn rates_report(cfg: &RatesConfig) -> Result<RatesReport> {
    if cfg.scenarios.is_empty() {
        return Err(Error::Config("no rate scenarios configured".into()));
    }
    for s in &cfg.scenarios {
        s.validate()?;
    }
    if let Some(q) = cfg.quoted_ratio {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::Config(format!("quoted_ratio must be positive, got {q}")));
        }
    }
    let scenarios = cfg
        .scenarios
        .iter()
        .map(|s| ScenarioRates {
            scenario: s.clone(),
            pair_rate: pair_rate(s),
            coincidence_rate: coincidence_rate(s),
        })
        .collect();
    let first = &cfg.scenarios[0];
    let comparisons = cfg.scenarios[1..]
        .iter()
        .map(|b| compare(first, b))
        .collect::<Result<Vec<_>>>()?;
    let mut notes = Vec::new();
    if let (Some(q), Some(c)) = (cfg.quoted_ratio, comparisons.first()) {
        let factor = (c.ratio / q).max(q / c.ratio);
        if factor > RATIO_DISCREPANCY_FACTOR {
            notes.push(format!(
                "discrepancy: computed coincidence-rate ratio {}/{} = {:.3e} but the quoted ratio is {:.3e} (off by a factor {:.3e})",
                c.label_a, c.label_b, c.ratio, q, factor
            ));
        }
    }
    Ok(RatesReport {
        scenarios,
        comparisons,
        quoted_ratio: cfg.quoted_ratio,
        notes,
    })
}

impl RatesReport {
    /// Long layout with a `kind` column: `scenario`, `time`, `note` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let header: Vec<String> = [
            "kind",
            "label",
            "pair_rate",
            "coincidence_rate",
            "ratio",
            "n",
            "seconds_a",
            "seconds_b",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let mut rows = Vec::new();
        for s in &self.scenarios {
            rows.push(vec![
                "scenario".into(),
                s.scenario.label.clone(),
                s.pair_rate.to_string(),
                s.coincidence_rate.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]);
        }
        for c in &self.comparisons {
            for t in &c.times {
                rows.push(vec![
                    "time".into(),
                    format!("{}/{}", c.label_a, c.label_b),
                    String::new(),
                    String::new(),
                    c.ratio.to_string(),
                    t.n.to_string(),
                    t.seconds_a.to_string(),
                    t.seconds_b.to_string(),
                ]);
            }
        }
        for n in &self.notes {
            let mut v = vec!["note".into(), n.clone()];
            v.resize(header.len(), String::new());
            rows.push(v);
        }
        write_rows(out, &header, &rows)
    }
}

// ---- simulation report ----

impl RunReport {
    /// One row per analyzer setting, plus a `chsh` row when requested.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let header: Vec<String> = [
            "label",
            "theta_deg",
            "n_ll",
            "n_rr",
            "n_rl",
            "n_lr",
            "n_singles",
            "n_misses",
            "e_exp",
            "std_err",
            "predicted",
            "margin",
            "margin_err",
            "zero_coincidences",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let mut rows: Vec<Vec<String>> = self
            .settings
            .iter()
            .map(|s| {
                let c = &s.counts;
                vec![
                    s.label.clone(),
                    s.theta_deg.to_string(),
                    c.n_ll.to_string(),
                    c.n_rr.to_string(),
                    c.n_rl.to_string(),
                    c.n_lr.to_string(),
                    c.n_singles.to_string(),
                    c.n_misses.to_string(),
                    cell(s.estimate.map(|e| e.e_exp)),
                    cell(s.estimate.map(|e| e.std_err)),
                    cell(s.predicted),
                    cell(s.envelope.map(|m| m.margin)),
                    cell(s.envelope.map(|m| m.std_err)),
                    s.zero_coincidences.to_string(),
                ]
            })
            .collect();
        if let Some(ch) = &self.chsh {
            let mut v = vec!["chsh".to_string(), String::new()];
            v.resize(8, String::new());
            v.extend([
                ch.test.s_exp.to_string(),
                ch.test.std_err.to_string(),
                cell(ch.predicted),
                String::new(),
                String::new(),
                "false".into(),
            ]);
            rows.push(v);
        }
        write_rows(out, &header, &rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn analytic_defaults() {
        let t = analytic_table(&AnalyticConfig::default()).unwrap();
        assert_eq!(t.rows.len(), 37);
        assert_eq!(t.max_gap.len(), 3);
        assert!((t.max_gap[0].theta_deg - 39.54).abs() < 0.1);
        assert!(t.rows[36].delta.iter().all(Option::is_none));
        let s = csv_string(|b| t.write_csv(b));
        assert!(s.starts_with("kind,theta_deg,e_singlet,e_max,delta_r=0,delta_r=0.1,delta_r=0.18\n"));
        assert_eq!(s.lines().filter(|l| l.starts_with("max,")).count(), 3);
    }

    #[test]
    fn analytic_rejects_bad_r() {
        let cfg = AnalyticConfig {
            r_values: vec![0.7],
            ..AnalyticConfig::default()
        };
        assert!(analytic_table(&cfg).is_err());
    }

    #[test]
    fn xsec_gating() {
        let t = xsec_table(&XsecConfig::default(), false).unwrap();
        let at = |e: f64| t.rows.iter().find(|r| r.e_gamma_mev == e).unwrap();
        assert!(at(2.25).sigma_m1.is_some() && at(2.25).am_over_ae.is_none());
        assert!(at(5.0).sigma_m1.is_none() && at(5.0).am_over_ae.is_some());
        assert!(t.rows.iter().all(|r| !r.extrapolated));

        let t = xsec_table(&XsecConfig::default(), true).unwrap();
        // the ratio fits are undefined at threshold itself
        assert!(t.rows.iter().all(|r| r.sigma_m1.is_some()));
        assert!(t.rows.iter().all(|r| r.am_over_ae.is_some() == (r.e_gamma_mev > THRESHOLD_MEV)));
        assert!(t.rows.iter().any(|r| r.extrapolated));

        let below = XsecConfig {
            energies_mev: vec![2.0],
            ..XsecConfig::default()
        };
        assert!(matches!(xsec_table(&below, true), Err(Error::BelowThreshold { .. })));
        let above = XsecConfig {
            energies_mev: vec![6.0],
            ..XsecConfig::default()
        };
        assert!(matches!(xsec_table(&above, false), Err(Error::OutsideValidity { .. })));
        assert!(xsec_table(&above, true).is_ok());
    }

    #[test]
    fn xsec_csv_header() {
        let t = xsec_table(&XsecConfig::default(), false).unwrap();
        let s = csv_string(|b| t.write_csv(b));
        assert_eq!(s.lines().next().unwrap(), XSEC_HEADER.join(","));
        assert_eq!(s.lines().count(), 1 + 9 * 5);
    }

    #[test]
    fn rates_discrepancy_note() {
        let mut cfg = RatesConfig::default();
        let r = rates_report(&cfg).unwrap();
        assert!(r.notes.is_empty());
        cfg.quoted_ratio = Some(1e10);
        let r = rates_report(&cfg).unwrap();
        assert_eq!(r.notes.len(), 1);
        assert!(r.notes[0].contains("1.000e10"), "{}", r.notes[0]);
        assert!(r.notes[0].contains("1.000e3"));
        cfg.quoted_ratio = Some(1.5e3);
        assert!(rates_report(&cfg).unwrap().notes.is_empty());
        let s = csv_string(|b| r.write_csv(b));
        assert!(s.contains("note,discrepancy"));
    }

    #[test]
    fn rates_json_round_trip() {
        let r = rates_report(&RatesConfig::default()).unwrap();
        let back: RatesReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
