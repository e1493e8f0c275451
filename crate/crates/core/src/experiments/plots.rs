use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiments::sweep::CONVERGENCE_CSV;

fn header(source: &str) -> String {
    format!("# gnuplot script generated by osnls\n# source: {source}\n")
}

/// Gap-vs-ω log-log scripts for a convergence report, drift-vs-time scripts for
/// a diagnostics CSV. `report` may be a CSV file or a directory holding
/// `convergence.csv`. Scripts are written next to the report and reference it
/// by file name; the returned paths are in emission order.
pub fn emit_plot_scripts(report: &Path) -> Result<Vec<PathBuf>> {
    let csv_path = if report.is_dir() { report.join(CONVERGENCE_CSV) } else { report.to_path_buf() };
    if !csv_path.is_file() {
        return Err(Error::MissingReport(csv_path));
    }
    let dir = csv_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let name = csv_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();

    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_path(&csv_path)?;
    let columns: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let has_rows = rd.records().next().transpose()?.is_some();

    let mut scripts: Vec<(String, String)> = Vec::new();
    if !has_rows || columns.is_empty() {
        scripts.push((format!("plot_{stem}.gp"), header(&name)));
    } else if columns.first().map(String::as_str) == Some("omega") {
        for (k, col) in columns.iter().enumerate().filter(|(_, c)| c.starts_with("gap_")) {
            let mut s = header(&name);
            let _ = writeln!(s, "set datafile separator \",\"");
            let _ = writeln!(s, "set key autotitle columnhead");
            let _ = writeln!(s, "set logscale xy");
            let _ = writeln!(s, "set xlabel \"omega\"");
            let _ = writeln!(s, "set ylabel \"{col}\"");
            let _ = writeln!(s, "set terminal pngcairo");
            let _ = writeln!(s, "set output \"{col}.png\"");
            let _ = writeln!(s, "plot \"{name}\" using 1:{} with linespoints", k + 1);
            scripts.push((format!("plot_{col}.gp"), s));
        }
    } else if columns.first().map(String::as_str) == Some("time") {
        let find = |c: &str| columns.iter().position(|x| x == c).map(|i| i + 1);
        let mut s = header(&name);
        let _ = writeln!(s, "set datafile separator \",\"");
        let _ = writeln!(s, "set key autotitle columnhead");
        let _ = writeln!(s, "set xlabel \"t\"");
        let _ = writeln!(s, "set ylabel \"drift\"");
        let _ = writeln!(s, "set terminal pngcairo");
        let _ = writeln!(s, "set output \"{stem}_drift.png\"");
        let mut curves = Vec::new();
        if let Some(m) = find("mass") {
            let _ = writeln!(s, "stats \"{name}\" using {m} every ::0::0 name \"M0\" nooutput");
            curves.push(format!("\"{name}\" using 1:(abs(${m}-M0_min)/M0_min) title \"relative mass drift\""));
        }
        if let Some(h) = find("hamiltonian") {
            let _ = writeln!(s, "stats \"{name}\" using {h} every ::0::0 name \"H0\" nooutput");
            curves.push(format!("\"{name}\" using 1:(abs(${h}-H0_min)) title \"hamiltonian drift\""));
        }
        if !curves.is_empty() {
            let _ = writeln!(s, "set logscale y");
            let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
        }
        scripts.push((format!("plot_{stem}_drift.gp"), s));
    } else {
        scripts.push((format!("plot_{stem}.gp"), header(&name)));
    }

    let mut paths = Vec::with_capacity(scripts.len());
    for (file, body) in scripts {
        let p = dir.join(file);
        fs::write(&p, body)?;
        paths.push(p);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_script_per_pair() {
        let dir = tempfile::tempdir().unwrap();
        let csv = "omega,sup_h1_gap,gap_q4_r4,gap_qinf_r2,sup_grad,status\n8,0.1,0.2,0.3,0.5,completed\n";
        fs::write(dir.path().join(CONVERGENCE_CSV), csv).unwrap();
        let paths = emit_plot_scripts(dir.path()).unwrap();
        let names: Vec<_> = paths.iter().map(|p| p.file_name().unwrap().to_str().unwrap()).collect();
        assert_eq!(names, ["plot_gap_q4_r4.gp", "plot_gap_qinf_r2.gp"]);
        let body = fs::read_to_string(&paths[0]).unwrap();
        assert!(body.contains("using 1:3") && body.contains("set logscale xy"));

        let again = emit_plot_scripts(&dir.path().join(CONVERGENCE_CSV)).unwrap();
        assert_eq!(fs::read_to_string(&again[0]).unwrap(), body);
    }

    #[test]
    fn empty_report_gives_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(CONVERGENCE_CSV);
        fs::write(&p, "omega,sup_h1_gap,gap_q4_r4,sup_grad,status\n").unwrap();
        let paths = emit_plot_scripts(&p).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(fs::read_to_string(&paths[0]).unwrap(), header(CONVERGENCE_CSV));
    }

    #[test]
    fn drift_script_for_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("diagnostics.csv");
        fs::write(&p, "time,mass,hamiltonian,grad_l2,linf,w14,holder_half\n0,1,0.5,0.1,0.1,0.1,0.1\n").unwrap();
        let paths = emit_plot_scripts(&p).unwrap();
        let body = fs::read_to_string(&paths[0]).unwrap();
        assert!(paths[0].ends_with("plot_diagnostics_drift.gp"));
        assert!(body.contains("relative mass drift") && body.contains("hamiltonian drift"));
    }

    #[test]
    fn missing_report() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(emit_plot_scripts(dir.path()), Err(Error::MissingReport(_))));
        assert!(matches!(
            emit_plot_scripts(&dir.path().join("nope.csv")),
            Err(Error::MissingReport(_))
        ));
    }
}
