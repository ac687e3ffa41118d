//! Experiment execution: curves, fits, convolution, CSV bundles.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;

use coemit::analytic::{fit_model, FitModel, FitResult};
use coemit::csvio::{write_coherence_csv, write_g2_csv};
use coemit::dynamics::{coherence_trajectory, g2_curve_cached, tau_steps};
use coemit::postprocess::{convolve_irf, InstrumentResponse};
use coemit::quantum::DensityMatrix;

use crate::config::{Experiment, Observable};

/// Files produced for one experiment.
#[derive(Debug)]
pub struct RunArtifacts {
    pub name: String,
    pub files: Vec<PathBuf>,
}

pub fn run_experiment(
    exp: &Experiment,
    out_dir: &Path,
    cache_dir: Option<&Path>,
) -> Result<RunArtifacts> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output dir {}", out_dir.display()))?;
    let mut files = Vec::new();
    match exp.observable {
        Observable::G2 => {
            let curve = g2_curve_cached(&exp.scenario, cache_dir)
                .with_context(|| format!("computing g2 for {}", exp.name))?;
            let path = out_dir.join(format!("{}.csv", exp.name));
            write_g2_csv(&path, &curve)?;
            files.push(path);
            if let Some(fwhm) = exp.irf_fwhm {
                let irf = InstrumentResponse::new(fwhm)?;
                let conv = convolve_irf(&curve, &irf)
                    .with_context(|| format!("convolving {}", exp.name))?;
                let path = out_dir.join(format!("{}-irf.csv", exp.name));
                write_g2_csv(&path, &conv)?;
                files.push(path);
            }
            for model in &exp.fits {
                let window = exp
                    .fit_window
                    .unwrap_or((0.0, exp.scenario.grids.tau_max));
                let fit = fit_model(&curve, *model, window)
                    .with_context(|| format!("fitting {:?} to {}", model, exp.name))?;
                let tag = match model {
                    FitModel::Ppd => "ppd",
                    FitModel::InitialDrop => "initial-drop",
                };
                let path = out_dir.join(format!("{}-fit-{}.csv", exp.name, tag));
                write_fit_csv(&path, &fit)?;
                files.push(path);
            }
        }
        Observable::Coherence => {
            let grids = &exp.scenario.grids;
            let n = (grids.tau_max / grids.dt).round() as usize;
            let traj = coherence_trajectory(&exp.scenario, &DensityMatrix::psi_s(0.0), n)
                .with_context(|| format!("computing coherences for {}", exp.name))?;
            // thin dense trajectories to the composite grid used for curves
            let keep: std::collections::BTreeSet<usize> = tau_steps(grids).into_iter().collect();
            let times: Vec<f64> = traj
                .iter()
                .enumerate()
                .filter(|(i, _)| keep.contains(i))
                .map(|(_, (t, _))| *t)
                .collect();
            let vals: Vec<_> = traj
                .iter()
                .enumerate()
                .filter(|(i, _)| keep.contains(i))
                .map(|(_, (_, c))| *c)
                .collect();
            let path = out_dir.join(format!("{}.csv", exp.name));
            write_coherence_csv(&path, &times, &vals)?;
            files.push(path);
        }
    }
    Ok(RunArtifacts {
        name: exp.name.clone(),
        files,
    })
}

fn write_fit_csv(path: &Path, fit: &FitResult) -> Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# coemit fit v1")?;
    writeln!(f, "param,value,variance")?;
    for ((name, value), var) in fit.params.iter().zip(&fit.covariance_diag) {
        writeln!(f, "{name},{value:.12e},{var:.12e}")?;
    }
    writeln!(f, "rms_residual,{:.12e},0", fit.residual_norm)?;
    Ok(())
}

/// Run a suite with at most `workers` experiments in flight.
pub fn run_suite(
    exps: &[Experiment],
    out_dir: &Path,
    cache_dir: Option<&Path>,
    workers: usize,
) -> Result<Vec<RunArtifacts>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .context("building worker pool")?;
    pool.install(|| {
        exps.par_iter()
            .map(|e| run_experiment(e, out_dir, cache_dir))
            .collect()
    })
}
