//! `report`: turns the artifacts of earlier subcommands into a text summary
//! and plot-ready CSVs under `<run_dir>/report`.
//!
//! Everything is recomputed from the artifacts with fixed formatting, so a
//! rerun rewrites byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::commands::{DIAGNOSTICS_CSV, MODES_CSV, TOY_JSONL};
use crate::error::{AppError, AppResult};
use crate::harness::{ConvergenceReport, SUMMARY_JSON};

/// Files `report` knows how to use, relative to the run directory.
pub fn known_artifacts() -> Vec<String> {
    vec![
        MODES_CSV.to_string(),
        TOY_JSONL.to_string(),
        format!("simulate/{DIAGNOSTICS_CSV}"),
        format!("converge/{SUMMARY_JSON}"),
    ]
}

fn read_csv(path: &Path) -> AppResult<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| AppError::format(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| AppError::format(path, e))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(|e| AppError::format(path, e))?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

fn column(header: &[String], name: &str, path: &Path) -> AppResult<usize> {
    header.iter().position(|h| h == name).ok_or_else(|| AppError::format(path, format!("no column `{name}`")))
}

fn num(s: &str, path: &Path) -> AppResult<f64> {
    s.parse().map_err(|_| AppError::format(path, format!("`{s}` is not a number")))
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> AppResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| AppError::format(path, e))?;
    w.write_record(header).map_err(|e| AppError::format(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| AppError::format(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

pub fn report(run_dir: &Path) -> AppResult<Vec<PathBuf>> {
    let present: Vec<String> = known_artifacts().into_iter().filter(|a| run_dir.join(a).is_file()).collect();
    if present.is_empty() {
        return Err(AppError::MissingArtifacts(known_artifacts()));
    }
    let out = run_dir.join("report");
    fs::create_dir_all(&out).map_err(|e| AppError::io(&out, e))?;
    let mut summary = String::new();
    let mut written = Vec::new();

    let modes = run_dir.join(MODES_CSV);
    if modes.is_file() {
        let (h, rows) = read_csv(&modes)?;
        let mut idx = vec![column(&h, "rho", &modes)?];
        for i in 1..=4 {
            idx.push(column(&h, &format!("re_lambda_{i}"), &modes)?);
        }
        let stable = column(&h, "stable", &modes)?;
        let curves: Vec<Vec<String>> = rows.iter().map(|r| idx.iter().map(|&i| r[i].clone()).collect()).collect();
        let path = out.join("eigen_curves.csv");
        write_csv(&path, &["rho", "re_lambda_1", "re_lambda_2", "re_lambda_3", "re_lambda_4"], &curves)?;
        written.push(path);
        let unstable = rows.iter().filter(|r| r[stable] != "true").count();
        let _ = writeln!(summary, "modes: {} frequencies, {} unstable", rows.len(), unstable);
    }

    let toy = run_dir.join(TOY_JSONL);
    if toy.is_file() {
        let text = fs::read_to_string(&toy).map_err(|e| AppError::io(&toy, e))?;
        let mut worst_ratio: f64 = 0.0;
        let mut worst_comm: f64 = 0.0;
        let mut worst_det: f64 = 0.0;
        let mut n = 0;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let v: serde_json::Value = serde_json::from_str(line).map_err(|e| AppError::format(&toy, e))?;
            let get = |k: &str| v[k].as_f64().unwrap_or(0.0);
            worst_ratio = worst_ratio.max(get("max_ratio_ODE5"));
            worst_comm = worst_comm.max(get("commutator_residual"));
            worst_det = worst_det.max(get("det_residual"));
            n += 1;
        }
        let _ = writeln!(
            summary,
            "toy: {n} draws, max decay ratio {worst_ratio:.6e}, max commutator residual {worst_comm:.3e}, max det residual {worst_det:.3e}"
        );
    }

    let diag = run_dir.join("simulate").join(DIAGNOSTICS_CSV);
    if diag.is_file() {
        let (h, rows) = read_csv(&diag)?;
        let names = ["t", "l2_b", "l2_u", "l2_j0", "l2_j1", "pj1", "pj1_predicted"];
        let idx: Vec<usize> = names.iter().map(|n| column(&h, n, &diag)).collect::<AppResult<_>>()?;
        let env: Vec<Vec<String>> = rows.iter().map(|r| idx.iter().map(|&i| r[i].clone()).collect()).collect();
        let path = out.join("decay_envelopes.csv");
        write_csv(&path, &names, &env)?;
        written.push(path);
        let mut worst: f64 = 0.0;
        for r in &rows {
            let (a, b) = (num(&r[idx[5]], &diag)?, num(&r[idx[6]], &diag)?);
            if b > 0.0 {
                worst = worst.max((a - b).abs() / b);
            }
        }
        let _ = writeln!(summary, "simulate: {} snapshots, max relative P j1 deviation {worst:.3e}", rows.len());
    }

    let conv = run_dir.join("converge").join(SUMMARY_JSON);
    if conv.is_file() {
        let text = fs::read_to_string(&conv).map_err(|e| AppError::io(&conv, e))?;
        let rep: ConvergenceReport = serde_json::from_str(&text).map_err(|e| AppError::format(&conv, e))?;
        let s = &rep.slopes;
        let entries = [
            ("err_b", s.err_b),
            ("err_u", s.err_u),
            ("err_j0", s.err_j0),
            ("j1_norm", s.j1_norm),
            ("j1_vs_scale", s.j1_vs_scale),
        ];
        let rows: Vec<Vec<String>> = entries
            .iter()
            .map(|(n, sl)| match sl {
                Some(sl) => vec![n.to_string(), format!("{:e}", sl.slope), format!("{:e}", sl.residual)],
                None => vec![n.to_string(), String::new(), String::new()],
            })
            .collect();
        let path = out.join("convergence_slopes.csv");
        write_csv(&path, &["quantity", "slope", "residual"], &rows)?;
        written.push(path);
        let _ = writeln!(summary, "converge: {} -> {}, {} members{}", rep.kind, rep.limit, rep.rows.len(), if rep.partial { " (partial)" } else { "" });
        for (n, sl) in entries {
            if let Some(sl) = sl {
                let _ = writeln!(summary, "  slope {n}: {:.4} (residual {:.2e})", sl.slope, sl.residual);
            }
        }
        let ratios: Vec<String> = rep.j1_scale_ratio.iter().map(|r| format!("{r:.4e}")).collect();
        let _ = writeln!(summary, "  j1 scale ratio: {}", ratios.join(", "));
    }

    let path = out.join("summary.txt");
    fs::write(&path, &summary).map_err(|e| AppError::io(&path, e))?;
    written.insert(0, path);
    Ok(written)
}
