//! Result serialization: plot-ready CSV plus JSON summaries.
//!
//! Every output file embeds the exact resolved configuration it was produced
//! from: CSV files carry it as a leading `# config: ...` comment line, JSON
//! files as a `config` field. Floating-point values are printed with 17
//! significant digits so re-reading reproduces the recorded values exactly.
//! The delimiter is a comma and the line terminator is LF.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::config::RunConfig;
use crate::consensus1d::{SteadyStateReport, Trajectory1D};
use crate::flock::{DistanceSeries, FlockSnapshot};
use crate::sweep::SweepResult;

/// Version stamp written into every JSON summary.
pub const OUTPUT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot encode {path}: {source}")]
    Encode {
        path: PathBuf,
        source: serde_json::Error,
    },
}

/// 17 significant digits: enough to reconstruct the exact f64.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn provenance(config: &RunConfig) -> String {
    serde_json::to_string(config).expect("config serialization cannot fail")
}

fn create(path: &Path) -> Result<BufWriter<File>, OutputError> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

/// Scalar-run trajectory: `t, m, d_rho, x_0 ... x_{n-1}`, one row per
/// recorded state. The `d_rho` field is empty on predator-free runs. An empty
/// trajectory produces a header-only file.
pub fn write_trajectory_1d(
    path: &Path,
    config: &RunConfig,
    trajectory: &Trajectory1D,
) -> Result<(), OutputError> {
    let mut w = create(path)?;
    let err = io_err(path);
    let n = trajectory.states.first().map_or(0, Vec::len);
    let mut line = format!("# config: {}\nt,m,d_rho", provenance(config));
    for i in 0..n {
        line.push_str(&format!(",x_{i}"));
    }
    line.push('\n');
    w.write_all(line.as_bytes()).map_err(err)?;
    for (t, state) in trajectory.states.iter().enumerate() {
        let d_rho = trajectory
            .escape_distances
            .as_ref()
            .map_or(String::new(), |d| fmt(d[t]));
        let mut row = format!("{t},{},{d_rho}", trajectory.component_counts[t]);
        for v in state {
            row.push(',');
            row.push_str(&fmt(*v));
        }
        row.push('\n');
        w.write_all(row.as_bytes()).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Flock distance series: `t, m, dbar, dcheck, min_agent_index` with `t` in
/// seconds.
pub fn write_flock_series(
    path: &Path,
    config: &RunConfig,
    series: &DistanceSeries,
    dt: f64,
) -> Result<(), OutputError> {
    let mut w = create(path)?;
    w.write_all(format!("# config: {}\nt,m,dbar,dcheck,min_agent_index\n", provenance(config)).as_bytes())
        .map_err(io_err(path))?;
    for step in 0..series.mean.len() {
        let row = format!(
            "{},{},{},{},{}\n",
            fmt(step as f64 * dt),
            series.component_counts[step],
            fmt(series.mean[step]),
            fmt(series.min[step]),
            series.min_index[step],
        );
        w.write_all(row.as_bytes()).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// One positional snapshot: `agent, rx, ry, rz, vx, vy, vz` per agent plus a
/// final row labelled `predator`.
pub fn write_flock_snapshot(
    path: &Path,
    config: &RunConfig,
    snapshot: &FlockSnapshot,
) -> Result<(), OutputError> {
    let mut w = create(path)?;
    w.write_all(format!("# config: {}\nagent,rx,ry,rz,vx,vy,vz\n", provenance(config)).as_bytes())
        .map_err(io_err(path))?;
    let row = |label: String, r: &nalgebra::Vector3<f64>, v: &nalgebra::Vector3<f64>| {
        format!(
            "{label},{},{},{},{},{},{}\n",
            fmt(r.x),
            fmt(r.y),
            fmt(r.z),
            fmt(v.x),
            fmt(v.y),
            fmt(v.z)
        )
    };
    for i in 0..snapshot.state.len() {
        let line = row(
            i.to_string(),
            &snapshot.state.positions[i],
            &snapshot.state.velocities[i],
        );
        w.write_all(line.as_bytes()).map_err(io_err(path))?;
    }
    let line = row(
        "predator".to_string(),
        &snapshot.predator.position,
        &snapshot.predator.velocity,
    );
    w.write_all(line.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Sweep table: `rho, mean_objective, std_objective, mean_clusters,
/// trials_ok, trials_failed`. `mean_clusters` is empty for flock sweeps.
pub fn write_sweep_csv(
    path: &Path,
    config: &RunConfig,
    result: &SweepResult,
) -> Result<(), OutputError> {
    let mut w = create(path)?;
    w.write_all(
        format!(
            "# config: {}\nrho,mean_objective,std_objective,mean_clusters,trials_ok,trials_failed\n",
            provenance(config)
        )
        .as_bytes(),
    )
    .map_err(io_err(path))?;
    for record in &result.records {
        let clusters = record.mean_clusters.map_or(String::new(), fmt);
        let row = format!(
            "{},{},{},{clusters},{},{}\n",
            fmt(record.rho),
            fmt(record.mean_objective),
            fmt(record.std_objective),
            record.trials_ok,
            record.trials_failed,
        );
        w.write_all(row.as_bytes()).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Serialize)]
struct SweepJson<'a> {
    config: &'a RunConfig,
    rho_star: f64,
    records: &'a [crate::sweep::RhoRecord],
    trial_seeds: &'a [u64],
    version: &'a str,
}

pub fn write_sweep_json(
    path: &Path,
    config: &RunConfig,
    result: &SweepResult,
) -> Result<(), OutputError> {
    write_json(
        path,
        &SweepJson {
            config,
            rho_star: result.rho_star,
            records: &result.records,
            trial_seeds: &result.trial_seeds,
            version: OUTPUT_VERSION,
        },
    )
}

#[derive(Serialize)]
struct Summary1dJson<'a> {
    config: &'a RunConfig,
    report: &'a SteadyStateReport,
    version: &'a str,
}

pub fn write_1d_summary(
    path: &Path,
    config: &RunConfig,
    report: &SteadyStateReport,
) -> Result<(), OutputError> {
    write_json(
        path,
        &Summary1dJson {
            config,
            report,
            version: OUTPUT_VERSION,
        },
    )
}

#[derive(Serialize)]
struct FlockSummaryJson<'a> {
    config: &'a RunConfig,
    steps: usize,
    capture: Option<crate::flock::CaptureEvent>,
    min_mean_distance: f64,
    min_min_distance: f64,
    version: &'a str,
}

pub fn write_flock_summary(
    path: &Path,
    config: &RunConfig,
    series: &DistanceSeries,
) -> Result<(), OutputError> {
    let min_of = |values: &[f64]| values.iter().copied().fold(f64::INFINITY, f64::min);
    write_json(
        path,
        &FlockSummaryJson {
            config,
            steps: series.mean.len().saturating_sub(1),
            capture: series.capture,
            min_mean_distance: min_of(&series.mean),
            min_min_distance: min_of(&series.min),
            version: OUTPUT_VERSION,
        },
    )
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), OutputError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| OutputError::Encode {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(io_err(path))?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Simulate1dConfig;
    use crate::consensus1d::{simulate_1d, ForceLaw, Predator1D, Sim1DParams};

    fn test_config() -> RunConfig {
        RunConfig::Simulate1d(Simulate1dConfig {
            agents: 3,
            rho: 0.1,
            seed: 7,
            predator: None,
            eps_ss: 1e-9,
            t_max: 10_000,
            out_dir: None,
        })
    }

    fn read(path: &Path) -> String {
        std::fs::read_to_string(path).unwrap()
    }

    #[test]
    fn trajectory_csv_has_the_contracted_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trajectory.csv");
        let (trajectory, _) = simulate_1d(&[0.0, 0.05, 0.5], &Sim1DParams::new(0.1)).unwrap();
        write_trajectory_1d(&path, &test_config(), &trajectory).unwrap();
        let text = read(&path);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# config: {\"mode\":\"simulate-1d\""));
        assert_eq!(lines[1], "t,m,d_rho,x_0,x_1,x_2");
        // one data row per recorded state, n + 3 data columns
        assert_eq!(lines.len() - 2, trajectory.states.len());
        for row in &lines[2..] {
            assert_eq!(row.split(',').count(), 6);
        }
        // predator-free: the d_rho field is empty
        assert_eq!(lines[2].split(',').nth(2), Some(""));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn trajectory_csv_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trajectory.csv");
        let predator = Predator1D {
            x_p: 0.6,
            rho_p: 0.2,
            s: 2.0,
            force_law: ForceLaw::Linear,
        };
        let (trajectory, _) =
            simulate_1d(&[0.1, 0.33, 0.72], &Sim1DParams::new(0.2).with_predator(predator))
                .unwrap();
        write_trajectory_1d(&path, &test_config(), &trajectory).unwrap();
        let text = read(&path);
        for (t, row) in text.lines().skip(2).enumerate() {
            let fields: Vec<&str> = row.split(',').collect();
            assert_eq!(fields[0].parse::<usize>().unwrap(), t);
            assert_eq!(
                fields[1].parse::<usize>().unwrap(),
                trajectory.component_counts[t]
            );
            let d: f64 = fields[2].parse().unwrap();
            assert_eq!(d, trajectory.escape_distances.as_ref().unwrap()[t]);
            for (i, field) in fields[3..].iter().enumerate() {
                let v: f64 = field.parse().unwrap();
                assert_eq!(v, trajectory.states[t][i], "x_{i} at t={t} drifted");
            }
        }
    }

    #[test]
    fn empty_trajectory_writes_a_header_only_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trajectory.csv");
        let empty = Trajectory1D {
            states: vec![],
            component_counts: vec![],
            escape_distances: None,
        };
        write_trajectory_1d(&path, &test_config(), &empty).unwrap();
        let text = read(&path);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "t,m,d_rho");
    }

    #[test]
    fn summary_json_embeds_config_and_version() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.json");
        let (_, report) = simulate_1d(&[0.0, 0.05, 0.5], &Sim1DParams::new(0.1)).unwrap();
        write_1d_summary(&path, &test_config(), &report).unwrap();
        let value: serde_json::Value = serde_json::from_str(&read(&path)).unwrap();
        assert_eq!(value["config"]["mode"], "simulate-1d");
        assert_eq!(value["version"], OUTPUT_VERSION);
        assert_eq!(value["report"]["m_star"], 2);
        assert_eq!(value["report"]["d_ss"], serde_json::Value::Null);
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let err =
            write_1d_summary(Path::new("/nonexistent-dir/x.json"), &test_config(), &SteadyStateReport {
                x_ss: vec![],
                m_star: 0,
                alphas: vec![],
                component_sizes: vec![],
                d_ss: None,
                converged: true,
                t_stop: 0,
            })
            .unwrap_err();
        assert!(matches!(err, OutputError::Io { .. }));
    }
}
