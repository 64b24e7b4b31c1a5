//! `trustnet run | sweep | analyze`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::analysis::{
    ensemble_mass_scaling, ensemble_spatial_profile, ensemble_spectrum, mean_rho_by, probe_correlations,
    tail_window, BoxAnchoring,
};
use crate::config::{Config, TopologyKind};
use crate::engine::{run_ensemble, Snapshot};
use crate::error::{Error, Result};
use crate::game::Strategy;
use crate::io;
use crate::rules::RuleKind;
use crate::sweep::{heatmap_sweep, initial_condition_grid};
use crate::topology::build_lattice;

#[derive(Debug, Parser)]
#[command(name = "trustnet", version, about = "Networked evolutionary trust game simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an ensemble and write per-run series and snapshots.
    Run(CommonArgs),
    /// Sweep initial shares × rules × topologies × r_UT.
    Sweep(CommonArgs),
    /// Compute fractal, G(l), spectrum and lag-correlation tables from run outputs.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if absent.
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Config override, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Output directories of `run`.
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Tables to produce.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = Which::ALL)]
    pub which: Vec<Which>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Fractal,
    Gl,
    Spectrum,
    Lagcorr,
}

impl Which {
    pub const ALL: [Which; 4] = [Which::Fractal, Which::Gl, Which::Spectrum, Which::Lagcorr];
}

impl CommonArgs {
    pub fn load_config(&self) -> Result<Config> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        Config::load(self.config.as_deref(), &overrides)
    }
}

/// Runs the parsed command and returns the paths it wrote.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    let common = match &cli.command {
        Command::Run(c) | Command::Sweep(c) => c,
        Command::Analyze(a) => &a.common,
    };
    let cfg = common.load_config()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Run(c) => cmd_run(&cfg, &c.out),
        Command::Sweep(c) => cmd_sweep(&cfg, &c.out),
        Command::Analyze(a) => cmd_analyze(&cfg, &a.inputs, &a.which, &a.common.out),
    })
}

fn create_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn file_names(paths: &[PathBuf]) -> Vec<String> {
    paths
        .iter()
        .filter_map(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .collect()
}

/// Writes `timeseries_<r>.csv`, `snapshots_<r>.csv`, optional `nodes_<r>.csv`
/// and `probes_<r>.csv`, `ensemble_summary.csv` and `manifest.json`.
///
/// Without `snapshot_every`, only the final state is written as a snapshot.
pub fn cmd_run(cfg: &Config, out: &Path) -> Result<Vec<PathBuf>> {
    let sim = cfg.sim_config()?;
    let records = run_ensemble(&sim)?;
    create_dir(out)?;
    let mut written = Vec::new();
    for r in &records {
        let i = r.run_index;
        let p = out.join(format!("timeseries_{i}.csv"));
        io::write_timeseries(&p, r)?;
        written.push(p);

        let p = out.join(format!("snapshots_{i}.csv"));
        if sim.snapshot_every.is_some() {
            io::write_snapshots(&p, &r.snapshots)?;
        } else {
            let last = Snapshot {
                step: r.steps(),
                state: r.final_state.clone(),
            };
            io::write_snapshots(&p, std::slice::from_ref(&last))?;
        }
        written.push(p);

        if !r.node_series.is_empty() {
            let p = out.join(format!("nodes_{i}.csv"));
            io::write_node_series(&p, &r.node_series)?;
            written.push(p);
        }
        if let Some(probes) = &r.probes {
            let p = out.join(format!("probes_{i}.csv"));
            io::write_probes(&p, probes)?;
            written.push(p);
        }
    }
    let p = out.join("ensemble_summary.csv");
    io::write_ensemble_summary(&p, &records, cfg.window)?;
    written.push(p);

    let manifest = json!({
        "command": "run",
        "config": cfg.to_json(),
        "runs": records.iter().map(|r| json!({"run": r.run_index, "seed": r.seed})).collect::<Vec<_>>(),
        "artifacts": file_names(&written),
    });
    let p = out.join("manifest.json");
    write_json(&p, &manifest)?;
    written.push(p);
    Ok(written)
}

/// Writes `sweep.csv` and `manifest.json`.
pub fn cmd_sweep(cfg: &Config, out: &Path) -> Result<Vec<PathBuf>> {
    let mut base_cfg = cfg.clone();
    base_cfg.record_nodes.clear();
    base_cfg.probe_distances.clear();
    let base = base_cfg.sim_config_for(TopologyKind::Lattice, cfg.rules[0], cfg.r_ut_values[0])?;
    let grid = initial_condition_grid(cfg.grid_step)?;
    let topologies: Vec<_> = cfg.topologies.iter().map(|&t| cfg.topology_spec(t)).collect();
    let rows = heatmap_sweep(&base, &grid, &cfg.rules, &topologies, &cfg.r_ut_values, cfg.window)?;
    create_dir(out)?;
    let csv = out.join("sweep.csv");
    io::write_sweep(&csv, &rows)?;
    let manifest = json!({
        "command": "sweep",
        "config": cfg.to_json(),
        "cells": rows.len(),
        "cell_seed": "first 8 bytes (little-endian) of SHA-256 over the master seed and the cell key",
        "artifacts": ["sweep.csv"],
    });
    let m = out.join("manifest.json");
    write_json(&m, &manifest)?;
    Ok(vec![csv, m])
}

/// A `run` output directory as read back by `analyze`.
pub struct RunDir {
    pub path: PathBuf,
    pub config: Config,
    pub runs: usize,
}

impl RunDir {
    pub fn open(path: &Path) -> Result<RunDir> {
        let mpath = path.join("manifest.json");
        let text = std::fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
        let manifest: Value = serde_json::from_str(&text)?;
        let bad = |m: &str| Error::invalid(format!("{}: {m}", mpath.display()));
        if manifest["command"] != "run" {
            return Err(bad("not the manifest of a `run` output"));
        }
        let config = Config::from_map(manifest["config"].as_object().ok_or_else(|| bad("missing config"))?)?;
        let runs = manifest["runs"].as_array().ok_or_else(|| bad("missing runs"))?.len();
        Ok(RunDir {
            path: path.to_path_buf(),
            config,
            runs,
        })
    }

    fn file(&self, stem: &str, run: usize) -> PathBuf {
        self.path.join(format!("{stem}_{run}.csv"))
    }

    fn r_ut(&self) -> Result<f64> {
        self.config.r_ut.ok_or_else(|| Error::config("r_UT", "missing from run manifest"))
    }

    fn side(&self) -> Result<usize> {
        match self.config.topology {
            TopologyKind::Lattice => Ok(self.config.side),
            TopologyKind::ScaleFree => Err(Error::UnsupportedTopology),
        }
    }

    /// The latest snapshot of every run.
    pub fn final_snapshots(&self) -> Result<Vec<Vec<Strategy>>> {
        (0..self.runs)
            .map(|r| {
                let p = self.file("snapshots", r);
                io::read_snapshots(&p)?
                    .pop()
                    .map(|s| s.state)
                    .ok_or_else(|| Error::InsufficientData(format!("{}: no snapshot", p.display())))
            })
            .collect()
    }

    pub fn k_i_series(&self) -> Result<Vec<Vec<f64>>> {
        (0..self.runs)
            .map(|r| {
                Ok(io::read_timeseries(&self.file("timeseries", r))?
                    .iter()
                    .map(|row| row.counts[0] as f64)
                    .collect())
            })
            .collect()
    }
}

/// Fractal, G(l), spectrum and lag-correlation tables over `inputs`.
pub fn cmd_analyze(cfg: &Config, inputs: &[PathBuf], which: &[Which], out: &Path) -> Result<Vec<PathBuf>> {
    let dirs = inputs.iter().map(|p| RunDir::open(p)).collect::<Result<Vec<_>>>()?;
    create_dir(out)?;
    let mut written = Vec::new();
    let mut done = Vec::new();
    for &w in which {
        if done.contains(&w) {
            continue;
        }
        done.push(w);
        let p = match w {
            Which::Fractal => {
                let p = out.join("fractal.csv");
                io::write_fractal(&p, &fractal_rows(cfg, &dirs)?)?;
                p
            }
            Which::Gl => {
                let p = out.join("gl.csv");
                io::write_gl(&p, &gl_rows(&dirs)?)?;
                p
            }
            Which::Spectrum => {
                let p = out.join("spectrum.csv");
                io::write_spectrum(&p, &spectrum_rows(cfg, &dirs)?)?;
                p
            }
            Which::Lagcorr => {
                let p = out.join("lagcorr.csv");
                io::write_lagcorr(&p, &lag_rows(cfg, &dirs)?)?;
                p
            }
        };
        written.push(p);
    }
    Ok(written)
}

fn rule_of(d: &RunDir) -> RuleKind {
    d.config.rule
}

fn fractal_rows(cfg: &Config, dirs: &[RunDir]) -> Result<Vec<io::FractalRow>> {
    let mut rows = Vec::new();
    for d in dirs {
        let side = d.side()?;
        let snaps = d.final_snapshots()?;
        let views: Vec<&[Strategy]> = snaps.iter().map(Vec::as_slice).collect();
        let sides = cfg.box_sides_for(side);
        for s in Strategy::ALL {
            let curve = ensemble_mass_scaling(&views, side, s, &sides, BoxAnchoring::TargetCentered)?;
            rows.push(io::FractalRow {
                r_ut: d.r_ut()?,
                rule: rule_of(d),
                strategy: s,
                a: curve.exponent().ok(),
            });
        }
    }
    Ok(rows)
}

fn gl_rows(dirs: &[RunDir]) -> Result<Vec<io::GlRow>> {
    let mut rows = Vec::new();
    for d in dirs {
        let net = build_lattice(d.side()?)?;
        let snaps = d.final_snapshots()?;
        let views: Vec<&[Strategy]> = snaps.iter().map(Vec::as_slice).collect();
        for (l, g) in ensemble_spatial_profile(&views, &net)? {
            rows.push(io::GlRow { l, rule: rule_of(d), g });
        }
    }
    Ok(rows)
}

fn spectrum_rows(cfg: &Config, dirs: &[RunDir]) -> Result<Vec<io::SpectrumRow>> {
    let mut rows = Vec::new();
    for d in dirs {
        let series = d.k_i_series()?;
        let tails = series
            .iter()
            .map(|s| tail_window(s, cfg.temporal_window))
            .collect::<Result<Vec<_>>>()?;
        let spec = ensemble_spectrum(&tails)?;
        for (&freq, &power) in spec.frequencies.iter().zip(&spec.power) {
            rows.push(io::SpectrumRow {
                freq,
                power,
                rule: rule_of(d),
            });
        }
    }
    Ok(rows)
}

fn lag_rows(cfg: &Config, dirs: &[RunDir]) -> Result<Vec<io::LagRow>> {
    let mut rows = Vec::new();
    for d in dirs {
        d.side()?;
        // distance -> correlations over runs
        let mut by_distance: Vec<(usize, Vec<crate::analysis::LagCorrelation>)> = Vec::new();
        for r in 0..d.runs {
            let probes = io::read_probes(&d.file("probes", r))?;
            let series = io::read_node_series(&d.file("nodes", r))?;
            let find = |node: usize| -> Result<&[u8]> {
                series
                    .iter()
                    .find(|s| s.node == node)
                    .map(|s| s.codes.as_slice())
                    .ok_or_else(|| Error::InsufficientData(format!("run {r}: no series for node {node}")))
            };
            let focal = tail_window(find(probes.focal)?, cfg.temporal_window)?;
            let probe_series = probes
                .probes
                .iter()
                .map(|&(dist, node)| Ok((dist, tail_window(find(node)?, cfg.temporal_window)?)))
                .collect::<Result<Vec<_>>>()?;
            for (dist, corr) in probe_correlations(focal, &probe_series, cfg.max_lag)? {
                match by_distance.iter_mut().find(|(k, _)| *k == dist) {
                    Some((_, v)) => v.push(corr),
                    None => by_distance.push((dist, vec![corr])),
                }
            }
        }
        for (dist, corrs) in &by_distance {
            let refs: Vec<_> = corrs.iter().collect();
            for (lag, rho) in mean_rho_by(&refs, |x| x).into_iter().enumerate() {
                rows.push(io::LagRow {
                    distance: *dist,
                    lag,
                    rho,
                    rule: rule_of(d),
                });
            }
        }
    }
    Ok(rows)
}
