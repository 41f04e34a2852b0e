//! Files written for scenarios and sweeps: trajectory CSV, gnuplot text,
//! JSON summaries and tomography records.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ScenarioResult, SweepRow, Transition};
use crate::correlations::{write_trajectory_csv, TrajectoryPoint};
use crate::error::{Error, Result};
use crate::qstate::DensityMatrix;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

/// Gnuplot-ready text: `# key: value` header lines, a blank line, then one
/// `t C D I` row per point.
pub fn emit_plot_data(points: &[TrajectoryPoint], metadata: &[(&str, String)], path: &Path) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Config(format!(
            "no trajectory points to write to {}",
            path.display()
        )));
    }
    let ctx = || format!("writing {}", path.display());
    let mut w = create(path)?;
    let mut text = String::new();
    for (key, value) in metadata {
        text.push_str(&format!("# {key}: {value}\n"));
    }
    text.push_str("# columns: t C D I\n\n");
    for p in points {
        text.push_str(&format!(
            "{} {} {} {}\n",
            p.t, p.triple.classical, p.triple.discord, p.triple.total
        ));
    }
    w.write_all(text.as_bytes()).map_err(|e| Error::io(ctx(), e))?;
    w.flush().map_err(|e| Error::io(ctx(), e))
}

/// Data rows `[t, C, D, I]` of a file written by [`emit_plot_data`].
pub fn read_plot_data(path: &Path) -> Result<Vec<[f64; 4]>> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |why: String| Error::format(format!("{} line {}", path.display(), n + 1), why);
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|e| bad(format!("`{v}`: {e}"))))
            .collect::<Result<_>>()?;
        let row: [f64; 4] = values
            .try_into()
            .map_err(|v: Vec<f64>| bad(format!("expected 4 columns, found {}", v.len())))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Paths written by [`write_scenario_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub trajectory_csv: PathBuf,
    pub plot_data: PathBuf,
    pub summary_json: PathBuf,
    pub tomography: Vec<PathBuf>,
}

#[derive(Serialize)]
struct TomographySummary<'a> {
    t: f64,
    record_csv: String,
    fidelity: f64,
    linear_min_eigenvalue: f64,
    reconstructed: &'a DensityMatrix,
}

#[derive(Serialize)]
struct ScenarioSummary<'a> {
    label: &'a str,
    engine: &'a str,
    sequence: &'a str,
    samples: usize,
    transition: Option<Transition>,
    final_fidelity: f64,
    checkpoints: &'a [(f64, f64)],
    /// Standard errors of `(c1, c2, c3)` per sample, Monte-Carlo only.
    #[serde(skip_serializing_if = "Option::is_none")]
    stderr: Option<&'a [[f64; 3]]>,
    tomography: Vec<TomographySummary<'a>>,
}

/// File-name stem for a label: anything outside `[A-Za-z0-9._-]` becomes `_`.
pub(crate) fn file_stem(label: &str) -> String {
    let stem: String = label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    if stem.is_empty() {
        "scenario".into()
    } else {
        stem
    }
}

/// Writes `<label>.csv`, `<label>.dat`, `<label>.json` and one
/// `<label>_tomo<k>.csv` per tomograph into `dir`.
pub fn write_scenario_outputs(r: &ScenarioResult, dir: &Path) -> Result<OutputFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let stem = file_stem(&r.label);
    let trajectory_csv = dir.join(format!("{stem}.csv"));
    write_trajectory_csv(&r.points, create(&trajectory_csv)?)?;

    let plot_data = dir.join(format!("{stem}.dat"));
    let t_bar = match r.transition {
        Some(tr) if tr.censored => format!("{} (censored: plateau lasts past the last sample)", tr.t_bar),
        Some(tr) => tr.t_bar.to_string(),
        None => "none (D already below the plateau band at the second sample)".into(),
    };
    let meta = [
        ("label", r.label.clone()),
        ("engine", r.engine.to_string()),
        ("sequence", r.sequence.clone()),
        ("t_bar", t_bar),
        ("final_fidelity", r.final_fidelity.to_string()),
    ];
    emit_plot_data(&r.points, &meta, &plot_data)?;

    let mut tomography = Vec::new();
    let mut tomo_summaries = Vec::new();
    for (k, dump) in r.tomography.iter().enumerate() {
        let path = dir.join(format!("{stem}_tomo{k}.csv"));
        dump.record.write_csv(create(&path)?)?;
        tomo_summaries.push(TomographySummary {
            t: dump.t,
            record_csv: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            fidelity: dump.fidelity,
            linear_min_eigenvalue: dump.linear_min_eigenvalue,
            reconstructed: &dump.reconstructed,
        });
        tomography.push(path);
    }

    let summary_json = dir.join(format!("{stem}.json"));
    let summary = ScenarioSummary {
        label: &r.label,
        engine: r.engine.name(),
        sequence: &r.sequence,
        samples: r.points.len(),
        transition: r.transition,
        final_fidelity: r.final_fidelity,
        checkpoints: &r.checkpoints,
        stderr: r.stderr.as_deref(),
        tomography: tomo_summaries,
    };
    let ctx = format!("writing {}", summary_json.display());
    let mut w = create(&summary_json)?;
    serde_json::to_writer_pretty(&mut w, &summary).map_err(|e| Error::format(ctx.clone(), e))?;
    w.write_all(b"\n").map_err(|e| Error::io(ctx.clone(), e))?;
    w.flush().map_err(|e| Error::io(ctx, e))?;

    Ok(OutputFiles {
        trajectory_csv,
        plot_data,
        summary_json,
        tomography,
    })
}

/// Sweep summary CSV with columns `label, engine, sequence, t_bar,
/// censored, final_fidelity, checkpoints, error`; checkpoints are written
/// as `t:D` pairs separated by `;`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let ctx = "writing sweep CSV";
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "label",
        "engine",
        "sequence",
        "t_bar",
        "censored",
        "final_fidelity",
        "checkpoints",
        "error",
    ])
    .map_err(|e| Error::format(ctx, e))?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        let checkpoints: Vec<String> = r.checkpoints.iter().map(|(t, d)| format!("{t}:{d}")).collect();
        w.write_record([
            r.label.clone(),
            r.engine.to_string(),
            r.sequence.clone(),
            opt(r.t_bar),
            r.censored.to_string(),
            opt(r.final_fidelity),
            checkpoints.join(";"),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(|e| Error::format(ctx, e))?;
    }
    w.flush().map_err(|e| Error::io(ctx, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{InitialState, NoiseModel};
    use crate::harness::{run_scenario, EngineKind, SampleGrid, Scenario, TomographySpec};
    use crate::qstate::BDParams;

    fn small() -> Scenario {
        let mut s = Scenario::new(
            "free / demo",
            EngineKind::Analytic,
            InitialState::Bd(BDParams::new(1.0, 0.7, -0.7)),
        );
        s.noise = NoiseModel::White { gamma: [2.439, 5.263] };
        s.grid = Some(SampleGrid::Uniform {
            start: 0.0,
            end: 0.1,
            points: 3,
        });
        s
    }

    #[test]
    fn plot_data_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = run_scenario(&small()).unwrap();
        let path = dir.path().join("p.dat");
        emit_plot_data(&r.points, &[("label", "x".into())], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with('#')).count(), 2);
        let rows = read_plot_data(&path).unwrap();
        assert_eq!(rows.len(), 3);
        for (row, p) in rows.iter().zip(&r.points) {
            let expect = [p.t, p.triple.classical, p.triple.discord, p.triple.total];
            for (a, b) in row.iter().zip(expect) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        assert!(emit_plot_data(&[], &[], &path).is_err());
        let missing = dir.path().join("no/such/dir/p.dat");
        let err = emit_plot_data(&r.points, &[], &missing).unwrap_err().to_string();
        assert!(err.contains("no/such/dir"), "{err}");
    }

    #[test]
    fn outputs_are_reproducible() {
        let mut s = small();
        s.tomography = Some(TomographySpec {
            shots: 1000,
            seed: 3,
            at: vec![0.05],
        });
        let write = || {
            let dir = tempfile::tempdir().unwrap();
            let files = write_scenario_outputs(&run_scenario(&s).unwrap(), dir.path()).unwrap();
            assert!(files.trajectory_csv.ends_with("free___demo.csv"));
            let mut all = vec![files.trajectory_csv, files.plot_data, files.summary_json];
            all.extend(files.tomography);
            all.iter().map(|p| std::fs::read(p).unwrap()).collect::<Vec<_>>()
        };
        let (a, b) = (write(), write());
        assert_eq!(a.len(), 4);
        assert_eq!(a, b);
        let json: serde_json::Value = serde_json::from_slice(&a[2]).unwrap();
        assert_eq!(json["tomography"][0]["t"], 0.05);
        assert_eq!(json["samples"], 3);
    }
}
