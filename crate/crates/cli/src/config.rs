//! TOML experiment configs with explicit unit suffixes.
//!
//! Every physical field is a quoted string carrying its unit ("1.76 ns",
//! "2.9 meV"); there are no unitless rate fields. `RawConfig` is the
//! serde image of the file, `Experiment` the validated form handed to the
//! runner. `diagnose` collects every problem instead of stopping at the
//! first so `coemit validate` reports the whole file at once.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use coemit::analytic::FitModel;
use coemit::bath::SpectralDensity;
use coemit::dynamics::{Geometry, Grids, PtSettings, Scenario};
use coemit::quantum::{DecayMode, LindbladSpec};
use coemit::units::Quantity;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawConfig {
    pub scenario: RawScenario,
    pub numerics: RawNumerics,
    #[serde(default)]
    pub postprocess: RawPostprocess,
    #[serde(default)]
    pub output: RawOutput,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawScenario {
    /// "measurement_induced" or "superradiant".
    pub geometry: String,
    /// "g2" (default) or "coherence" (inter-emitter coherence from |Ψ_S⟩).
    #[serde(default)]
    pub observable: Option<String>,
    /// Radiative lifetime γ⁻¹ (time) or rate ("/ns").
    pub lifetime: String,
    /// Pump γ_p⁻¹, same conventions.
    pub pump: String,
    /// Optional PPD γ_d⁻¹. With phonons present this is the extra
    /// Markovian dephasing on top of the exact SPC treatment.
    #[serde(default)]
    pub dephasing: Option<String>,
    #[serde(default)]
    pub phonons: Option<RawPhonons>,
    /// Free-text provenance note ("reconstructed from plotted curves");
    /// kept in the config as an audit trail, not used numerically.
    #[serde(default)]
    pub sweep_note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawPhonons {
    /// Spectral density preset: "ingaas-deformation" or "ohmic".
    pub preset: String,
    pub temperature: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawNumerics {
    pub dt: String,
    pub tau_max: String,
    #[serde(default)]
    pub t_mem: Option<String>,
    #[serde(default)]
    pub svd_threshold: Option<f64>,
    #[serde(default)]
    pub max_bond: Option<usize>,
    #[serde(default)]
    pub t_settle: Option<String>,
    #[serde(default)]
    pub tau_fine_max: Option<String>,
    #[serde(default)]
    pub coarsen: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RawPostprocess {
    /// Gaussian IRF full width at half maximum; adds a convolved CSV.
    #[serde(default)]
    pub irf_fwhm: Option<String>,
    /// Fits to run on the curve: "ppd" and/or "initial-drop".
    #[serde(default)]
    pub fit: Vec<String>,
    /// τ window of the fits, default the full curve.
    #[serde(default)]
    pub fit_window: Option<[String; 2]>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RawOutput {
    /// File stem of the produced CSVs; defaults to the preset/run name.
    #[serde(default)]
    pub tag: Option<String>,
}

/// What the runner computes for one config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    G2,
    Coherence,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub observable: Observable,
    pub scenario: Scenario,
    pub irf_fwhm: Option<f64>,
    pub fits: Vec<FitModel>,
    pub fit_window: Option<(f64, f64)>,
}

fn time_ps(field: &str, s: &str) -> Result<f64> {
    Quantity::parse(s)
        .and_then(|q| q.as_time_ps())
        .with_context(|| format!("field `{field}`"))
}

fn rate_per_ps(field: &str, s: &str) -> Result<f64> {
    Quantity::parse(s)
        .and_then(|q| q.as_rate_per_ps())
        .with_context(|| format!("field `{field}`"))
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig> {
        toml::from_str(text).context("config parse error")
    }

    /// Validated experiment; `name` becomes the output file stem unless the
    /// config carries its own tag.
    pub fn to_experiment(&self, name: &str) -> Result<Experiment> {
        let sc = &self.scenario;
        let (geometry, decay_mode) = match sc.geometry.as_str() {
            "measurement_induced" => (Geometry::MeasurementInduced, DecayMode::Independent),
            "superradiant" => (Geometry::Superradiant, DecayMode::Superradiant),
            other => bail!("field `scenario.geometry`: unknown geometry {other:?}"),
        };
        let observable = match sc.observable.as_deref() {
            None | Some("g2") => Observable::G2,
            Some("coherence") => Observable::Coherence,
            Some(other) => bail!("field `scenario.observable`: unknown observable {other:?}"),
        };
        let gamma = rate_per_ps("scenario.lifetime", &sc.lifetime)?;
        let gamma_p = rate_per_ps("scenario.pump", &sc.pump)?;
        let gamma_d = match &sc.dephasing {
            Some(s) => rate_per_ps("scenario.dephasing", s)?,
            None => 0.0,
        };
        let phonons = match &sc.phonons {
            Some(p) => {
                let temperature = Quantity::parse(&p.temperature)
                    .and_then(|q| q.as_temperature_k())
                    .context("field `scenario.phonons.temperature`")?;
                Some(
                    SpectralDensity::from_preset(&p.preset, temperature)
                        .context("field `scenario.phonons.preset`")?,
                )
            }
            None => None,
        };
        // extra Markovian PPD rides on ppd_extra when the exact phonon
        // treatment is active, and on the plain Lindblad rate otherwise
        let (lindblad_gd, ppd_extra) = if phonons.is_some() {
            (0.0, gamma_d)
        } else {
            (gamma_d, 0.0)
        };

        let nm = &self.numerics;
        let dt = time_ps("numerics.dt", &nm.dt)?;
        let tau_max = time_ps("numerics.tau_max", &nm.tau_max)?;
        let defaults = PtSettings::default();
        let t_mem = match &nm.t_mem {
            Some(s) => time_ps("numerics.t_mem", s)?,
            None => defaults.t_mem,
        };
        let mut grids = Grids::new(
            dt,
            match &nm.t_settle {
                Some(s) => time_ps("numerics.t_settle", s)?,
                None => 0.0,
            },
            tau_max,
        );
        if let Some(s) = &nm.tau_fine_max {
            grids.tau_fine_max = time_ps("numerics.tau_fine_max", s)?;
        }
        if let Some(c) = nm.coarsen {
            grids.coarsen = c;
        }
        let scenario = Scenario {
            lindblad: LindbladSpec {
                gamma,
                gamma_p,
                gamma_d: lindblad_gd,
                decay_mode,
            },
            phonons,
            ppd_extra,
            geometry,
            grids,
            pt: PtSettings {
                t_mem,
                svd_threshold: nm.svd_threshold.unwrap_or(defaults.svd_threshold),
                max_bond: nm.max_bond.unwrap_or(defaults.max_bond),
            },
        };
        scenario.validate().context("scenario validation")?;

        let pp = &self.postprocess;
        let irf_fwhm = match &pp.irf_fwhm {
            Some(s) => Some(time_ps("postprocess.irf_fwhm", s)?),
            None => None,
        };
        let fits = pp
            .fit
            .iter()
            .map(|f| match f.as_str() {
                "ppd" => Ok(FitModel::Ppd),
                "initial-drop" => Ok(FitModel::InitialDrop),
                other => bail!("field `postprocess.fit`: unknown model {other:?}"),
            })
            .collect::<Result<Vec<_>>>()?;
        let fit_window = match &pp.fit_window {
            Some([a, b]) => Some((
                time_ps("postprocess.fit_window[0]", a)?,
                time_ps("postprocess.fit_window[1]", b)?,
            )),
            None => None,
        };
        if observable == Observable::Coherence && (irf_fwhm.is_some() || !fits.is_empty()) {
            bail!("postprocess fits/IRF apply to g2 curves only");
        }

        Ok(Experiment {
            name: self
                .output
                .tag
                .clone()
                .unwrap_or_else(|| name.to_string()),
            observable,
            scenario,
            irf_fwhm,
            fits,
            fit_window,
        })
    }
}

/// Dry-run check: every diagnostic for a config, empty when valid.
pub fn diagnose(raw: &RawConfig, name: &str) -> Vec<String> {
    let mut out = Vec::new();
    match raw.to_experiment(name) {
        Ok(exp) => {
            let g = &exp.scenario.grids;
            if exp.scenario.phonons.is_some() && exp.scenario.pt.t_mem > 20.0 {
                out.push(format!(
                    "t_mem = {} ps is far beyond the phonon memory; expect slow builds",
                    exp.scenario.pt.t_mem
                ));
            }
            if g.dt > 0.5 && exp.scenario.phonons.is_some() {
                out.push(format!(
                    "dt = {} ps is coarse for a phonon kernel; consider <= 0.5 ps",
                    g.dt
                ));
            }
            if let Some(fwhm) = exp.irf_fwhm {
                let worst = g.tau_max * (g.coarsen - 1.0);
                if worst > fwhm / 10.0 {
                    out.push(format!(
                        "coarsen = {} gives grid spacing up to {:.1} ps near tau_max, \
                         too coarse for fwhm = {} ps (needs <= fwhm/10)",
                        g.coarsen, worst, fwhm
                    ));
                }
            }
        }
        Err(e) => out.push(format!("{e:#}")),
    }
    out
}
