//! CSV export of curves and trajectories.
//!
//! Bodies are plain `tau_ps,g2` (or `t_ps,re_c,im_c`) tables; the header is
//! a block of `# key: value` comments recording the scenario and numerics a
//! curve was computed with, plus a fingerprint hash of those lines. No
//! timestamps anywhere: rerunning a scenario reproduces the file verbatim.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::dynamics::{G2Curve, Geometry, Scenario};
use crate::error::{CoemitError, Result};
use crate::linalg::C64;
use crate::quantum::DecayMode;

fn scenario_lines(sc: &Scenario) -> Vec<(String, String)> {
    let l = &sc.lindblad;
    let mut out = vec![
        (
            "geometry".into(),
            match sc.geometry {
                Geometry::MeasurementInduced => "measurement_induced".into(),
                Geometry::Superradiant => "superradiant".into(),
            },
        ),
        (
            "decay_mode".into(),
            match l.decay_mode {
                DecayMode::Independent => "independent".into(),
                DecayMode::Superradiant => "superradiant".into(),
            },
        ),
        ("gamma_ps-1".into(), format!("{:.12e}", l.gamma)),
        ("gamma_p_ps-1".into(), format!("{:.12e}", l.gamma_p)),
        ("gamma_d_ps-1".into(), format!("{:.12e}", l.gamma_d)),
        ("ppd_extra_ps-1".into(), format!("{:.12e}", sc.ppd_extra)),
        (
            "phonons".into(),
            sc.phonons
                .as_ref()
                .map(|sd| sd.fingerprint())
                .unwrap_or_else(|| "none".into()),
        ),
        ("dt_ps".into(), format!("{:.12e}", sc.grids.dt)),
        ("t_settle_ps".into(), format!("{:.12e}", sc.grids.t_settle)),
        ("tau_max_ps".into(), format!("{:.12e}", sc.grids.tau_max)),
    ];
    if sc.phonons.is_some() {
        out.push(("t_mem_ps".into(), format!("{:.12e}", sc.pt.t_mem)));
    }
    out
}

/// Short hash identifying the scenario + numerics of a curve.
pub fn curve_fingerprint(curve: &G2Curve) -> String {
    let mut text = String::new();
    for (k, v) in scenario_lines(&curve.scenario) {
        let _ = writeln!(text, "{k}: {v}");
    }
    let n = &curve.numerics;
    let _ = writeln!(
        text,
        "svd_threshold: {:.3e}\nmax_bond: {}",
        n.svd_threshold, n.max_bond
    );
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    let digest = h.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Write a g² curve as `tau_ps,g2` with a scenario header.
pub fn write_g2_csv(path: &Path, curve: &G2Curve) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# coemit g2 v1")?;
    writeln!(f, "# fingerprint: {}", curve_fingerprint(curve))?;
    for (k, v) in scenario_lines(&curve.scenario) {
        writeln!(f, "# {k}: {v}")?;
    }
    let n = &curve.numerics;
    writeln!(f, "# svd_threshold: {:.3e}", n.svd_threshold)?;
    writeln!(f, "# max_bond: {}", n.max_bond)?;
    writeln!(f, "# max_bond_used: {}", n.max_bond_used)?;
    writeln!(f, "# pt_converged: {}", n.pt_converged)?;
    writeln!(f, "# i0_ps-1: {:.12e}", curve.i0)?;
    writeln!(f, "tau_ps,g2")?;
    for (t, g) in curve.tau.iter().zip(&curve.g2) {
        writeln!(f, "{t:.12e},{g:.12e}")?;
    }
    Ok(())
}

/// Write a coherence trajectory as `t_ps,re_c,im_c`.
pub fn write_coherence_csv(path: &Path, times: &[f64], c: &[C64]) -> Result<()> {
    if times.len() != c.len() {
        return Err(CoemitError::GridMismatch(format!(
            "{} times vs {} values",
            times.len(),
            c.len()
        )));
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# coemit coherence v1")?;
    writeln!(f, "t_ps,re_c,im_c")?;
    for (t, v) in times.iter().zip(c) {
        writeln!(f, "{t:.12e},{:.12e},{:.12e}", v.re, v.im)?;
    }
    Ok(())
}

/// Read back a curve body plus its `# key: value` header.
pub fn read_csv(path: &Path) -> Result<(BTreeMap<String, String>, Vec<Vec<f64>>)> {
    let f = BufReader::new(std::fs::File::open(path)?);
    let mut header = BTreeMap::new();
    let mut rows = Vec::new();
    let mut width = None;
    for line in f.lines() {
        let line = line?;
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                header.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if width.is_none() && cells.iter().all(|c| c.parse::<f64>().is_err()) {
            // column title row
            width = Some(cells.len());
            continue;
        }
        let row: Vec<f64> = cells
            .iter()
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|e| CoemitError::Format(format!("bad number {c:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if let Some(w) = width {
            if row.len() != w {
                return Err(CoemitError::Format(format!(
                    "row width {} != {}",
                    row.len(),
                    w
                )));
            }
        }
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Grids, NumericsReport, PtSettings};
    use crate::quantum::LindbladSpec;

    fn sample_curve() -> G2Curve {
        let sc = Scenario {
            lindblad: LindbladSpec {
                gamma: 1.0 / 1760.0,
                gamma_p: 1.0 / 1760.0,
                gamma_d: 1.0 / 3900.0,
                decay_mode: DecayMode::Independent,
            },
            phonons: None,
            ppd_extra: 0.0,
            geometry: Geometry::MeasurementInduced,
            grids: Grids::new(0.5, 100.0, 50.0),
            pt: PtSettings::default(),
        };
        G2Curve {
            tau: vec![0.0, 0.5, 1.0],
            g2: vec![0.95, 0.96, 0.97],
            i0: 0.5,
            scenario: sc,
            numerics: NumericsReport {
                dt: 0.5,
                svd_threshold: 1e-8,
                max_bond: 256,
                max_bond_used: 1,
                pt_converged: true,
            },
        }
    }

    #[test]
    fn g2_roundtrip() {
        let dir = std::env::temp_dir().join("coemit-csv-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("curve.csv");
        let curve = sample_curve();
        write_g2_csv(&path, &curve).unwrap();
        let (header, rows) = read_csv(&path).unwrap();
        assert_eq!(header["fingerprint"], curve_fingerprint(&curve));
        assert_eq!(header["geometry"], "measurement_induced");
        assert_eq!(rows.len(), 3);
        for (row, (t, g)) in rows.iter().zip(curve.tau.iter().zip(&curve.g2)) {
            assert_eq!(row[0], *t);
            assert_eq!(row[1], *g);
        }
    }

    #[test]
    fn export_is_reproducible() {
        let dir = std::env::temp_dir().join("coemit-csv-test");
        std::fs::create_dir_all(&dir).unwrap();
        let (p1, p2) = (dir.join("a.csv"), dir.join("b.csv"));
        let curve = sample_curve();
        write_g2_csv(&p1, &curve).unwrap();
        write_g2_csv(&p2, &curve).unwrap();
        assert_eq!(
            std::fs::read(&p1).unwrap(),
            std::fs::read(&p2).unwrap(),
            "identical runs must produce identical bytes"
        );
    }

    #[test]
    fn fingerprint_tracks_parameters() {
        let a = sample_curve();
        let mut b = sample_curve();
        b.scenario.lindblad.gamma_d = 1.0 / 199.0;
        assert_ne!(curve_fingerprint(&a), curve_fingerprint(&b));
        let mut c = sample_curve();
        c.g2[0] = 0.0; // data does not enter the fingerprint
        assert_eq!(curve_fingerprint(&a), curve_fingerprint(&c));
    }

    #[test]
    fn coherence_roundtrip() {
        let dir = std::env::temp_dir().join("coemit-csv-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("coh.csv");
        let times = vec![0.0, 0.1, 0.2];
        let c = vec![
            C64::new(0.5, 0.0),
            C64::new(0.4, 1e-3),
            C64::new(0.3, -2e-3),
        ];
        write_coherence_csv(&path, &times, &c).unwrap();
        let (_, rows) = read_csv(&path).unwrap();
        for (row, (t, v)) in rows.iter().zip(times.iter().zip(&c)) {
            assert_eq!(row[0], *t);
            assert_eq!(row[1], v.re);
            assert_eq!(row[2], v.im);
        }
    }
}
