//! CSV artifacts. Every file starts with a header row, uses LF newlines and
//! writes floats in shortest round-trip form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use csv::{ReaderBuilder, StringRecord, Terminator, WriterBuilder};

use crate::analysis::steady_state_wealth;
use crate::engine::{NodeSeries, ProbeSet, RunRecord, Snapshot};
use crate::error::{Error, Result};
use crate::game::Strategy;
use crate::rules::RuleKind;
use crate::sweep::SweepRow;

pub const TIMESERIES_HEADER: &[&str] = &["step", "k_I", "k_T", "k_U", "W"];
pub const SNAPSHOT_HEADER: &[&str] = &["step", "node", "strategy_code"];
pub const PROBES_HEADER: &[&str] = &["distance", "node"];
pub const SUMMARY_HEADER: &[&str] = &["run", "seed", "mean_W", "final_kI", "final_kT", "final_kU"];
pub const SWEEP_HEADER: &[&str] = &[
    "f_I", "f_T", "f_U", "rule", "topology", "r_UT", "mean_W", "std_W", "mean_kI", "mean_kT", "mean_kU",
];
pub const FRACTAL_HEADER: &[&str] = &["r_UT", "rule", "strategy", "a"];
pub const GL_HEADER: &[&str] = &["l", "rule", "G"];
pub const SPECTRUM_HEADER: &[&str] = &["freq", "power", "rule"];
pub const LAGCORR_HEADER: &[&str] = &["distance", "lag", "rho", "rule"];

/// Shortest round-trip decimal, in exponent form outside `[1e-5, 1e16)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_f64)
}

/// Writes `header` and `rows` to `path`, replacing any existing file.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let mut inner = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

/// Data records of `path` with their 1-based line numbers, after checking the header.
pub fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<(usize, StringRecord)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let found = r.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            row: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                row: line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        rows.push((line, rec));
    }
    Ok(rows)
}

fn field<T: FromStr>(path: &Path, line: usize, rec: &StringRecord, header: &[&str], col: usize) -> Result<T> {
    rec[col].trim().parse().map_err(|_| Error::Schema {
        path: path.to_path_buf(),
        row: line,
        message: format!("column `{}`: cannot parse `{}`", header[col], &rec[col]),
    })
}

fn schema(path: &Path, row: usize, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        row,
        message: message.into(),
    }
}

/// One row of `timeseries_<r>.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeseriesRow {
    pub step: usize,
    pub counts: [usize; 3],
    pub wealth: f64,
}

pub fn write_timeseries(path: &Path, record: &RunRecord) -> Result<()> {
    let rows = record.counts.iter().zip(&record.wealth).enumerate().map(|(t, (c, w))| {
        [t.to_string(), c[0].to_string(), c[1].to_string(), c[2].to_string(), fmt_f64(*w)]
    });
    write_csv(path, TIMESERIES_HEADER, rows)
}

/// Reads a time series; steps must run 0, 1, 2, … without gaps.
pub fn read_timeseries(path: &Path) -> Result<Vec<TimeseriesRow>> {
    let h = TIMESERIES_HEADER;
    read_csv(path, h)?
        .into_iter()
        .enumerate()
        .map(|(expect, (line, rec))| {
            let step: usize = field(path, line, &rec, h, 0)?;
            if step != expect {
                return Err(schema(path, line, format!("expected step {expect}, found {step}")));
            }
            Ok(TimeseriesRow {
                step,
                counts: [
                    field(path, line, &rec, h, 1)?,
                    field(path, line, &rec, h, 2)?,
                    field(path, line, &rec, h, 3)?,
                ],
                wealth: field(path, line, &rec, h, 4)?,
            })
        })
        .collect()
}

pub fn write_snapshots(path: &Path, snapshots: &[Snapshot]) -> Result<()> {
    let rows = snapshots.iter().flat_map(|s| {
        s.state
            .iter()
            .enumerate()
            .map(move |(i, st)| [s.step.to_string(), i.to_string(), st.code().to_string()])
    });
    write_csv(path, SNAPSHOT_HEADER, rows)
}

/// Reads snapshots; each step must list nodes `0..n` in order with the same `n`.
pub fn read_snapshots(path: &Path) -> Result<Vec<Snapshot>> {
    let h = SNAPSHOT_HEADER;
    let mut out: Vec<Snapshot> = Vec::new();
    for (line, rec) in read_csv(path, h)? {
        let step: usize = field(path, line, &rec, h, 0)?;
        let node: usize = field(path, line, &rec, h, 1)?;
        let code: u8 = field(path, line, &rec, h, 2)?;
        let s = Strategy::from_code(code)
            .ok_or_else(|| schema(path, line, format!("strategy code {code} not in 1..=3")))?;
        if node == 0 {
            if let Some(prev) = out.last() {
                if step <= prev.step {
                    return Err(schema(path, line, format!("step {step} does not increase")));
                }
            }
            out.push(Snapshot { step, state: Vec::new() });
        }
        let cur = out
            .last_mut()
            .filter(|c| c.step == step && c.state.len() == node)
            .ok_or_else(|| schema(path, line, format!("node {node} of step {step} out of order")))?;
        cur.state.push(s);
    }
    if let Some(first) = out.first() {
        if let Some(bad) = out.iter().find(|s| s.state.len() != first.state.len()) {
            return Err(schema(
                path,
                0,
                format!("step {} has {} nodes, step {} has {}", bad.step, bad.state.len(), first.step, first.state.len()),
            ));
        }
    }
    Ok(out)
}

/// Per-node strategy series in the snapshot schema, one row per (step, node).
pub fn write_node_series(path: &Path, series: &[NodeSeries]) -> Result<()> {
    let steps = series.first().map_or(0, |s| s.codes.len());
    let rows = (0..steps).flat_map(|t| {
        series
            .iter()
            .map(move |s| [t.to_string(), s.node.to_string(), s.codes[t].to_string()])
    });
    write_csv(path, SNAPSHOT_HEADER, rows)
}

pub fn read_node_series(path: &Path) -> Result<Vec<NodeSeries>> {
    let h = SNAPSHOT_HEADER;
    let mut out: Vec<NodeSeries> = Vec::new();
    for (line, rec) in read_csv(path, h)? {
        let step: usize = field(path, line, &rec, h, 0)?;
        let node: usize = field(path, line, &rec, h, 1)?;
        let code: u8 = field(path, line, &rec, h, 2)?;
        if Strategy::from_code(code).is_none() {
            return Err(schema(path, line, format!("strategy code {code} not in 1..=3")));
        }
        let idx = match out.iter().position(|s| s.node == node) {
            Some(i) => i,
            None if step == 0 => {
                out.push(NodeSeries { node, codes: Vec::new() });
                out.len() - 1
            }
            None => return Err(schema(path, line, format!("node {node} first appears at step {step}"))),
        };
        if out[idx].codes.len() != step {
            return Err(schema(path, line, format!("node {node}: step {step} out of order")));
        }
        out[idx].codes.push(code);
    }
    if let Some(first) = out.first() {
        if out.iter().any(|s| s.codes.len() != first.codes.len()) {
            return Err(schema(path, 0, "node series have different lengths"));
        }
    }
    Ok(out)
}

/// Focal node at distance 0, then one row per probe.
pub fn write_probes(path: &Path, probes: &ProbeSet) -> Result<()> {
    let rows = std::iter::once((0, probes.focal))
        .chain(probes.probes.iter().copied())
        .map(|(d, n)| [d.to_string(), n.to_string()]);
    write_csv(path, PROBES_HEADER, rows)
}

pub fn read_probes(path: &Path) -> Result<ProbeSet> {
    let h = PROBES_HEADER;
    let rows = read_csv(path, h)?;
    let mut focal = None;
    let mut probes = Vec::new();
    for (line, rec) in rows {
        let d: usize = field(path, line, &rec, h, 0)?;
        let n: usize = field(path, line, &rec, h, 1)?;
        match (d, focal) {
            (0, None) => focal = Some(n),
            (0, Some(_)) => return Err(schema(path, line, "more than one focal node")),
            (_, None) => return Err(schema(path, line, "probe listed before the focal node")),
            _ => probes.push((d, n)),
        }
    }
    let focal = focal.ok_or_else(|| schema(path, 1, "no focal node"))?;
    Ok(ProbeSet { focal, probes })
}

pub fn write_ensemble_summary(path: &Path, records: &[RunRecord], window: f64) -> Result<()> {
    let rows = records
        .iter()
        .map(|r| {
            let last = r.counts.last().expect("series include t=0");
            Ok([
                r.run_index.to_string(),
                r.seed.to_string(),
                fmt_f64(steady_state_wealth(r, window)?),
                last[0].to_string(),
                last[1].to_string(),
                last[2].to_string(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    write_csv(path, SUMMARY_HEADER, rows)
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        [
            fmt_f64(r.initial.0[0]),
            fmt_f64(r.initial.0[1]),
            fmt_f64(r.initial.0[2]),
            r.rule.token().to_string(),
            r.topology.token().to_string(),
            fmt_f64(r.r_ut),
            fmt_f64(r.mean_w),
            fmt_f64(r.std_w),
            fmt_f64(r.mean_k[0]),
            fmt_f64(r.mean_k[1]),
            fmt_f64(r.mean_k[2]),
        ]
    });
    write_csv(path, SWEEP_HEADER, rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FractalRow {
    pub r_ut: f64,
    pub rule: RuleKind,
    pub strategy: Strategy,
    /// Empty in the CSV when the strategy is absent from every snapshot.
    pub a: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlRow {
    pub l: usize,
    pub rule: RuleKind,
    pub g: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRow {
    pub freq: f64,
    pub power: f64,
    pub rule: RuleKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LagRow {
    pub distance: usize,
    pub lag: usize,
    /// Empty in the CSV when undefined in every run.
    pub rho: Option<f64>,
    pub rule: RuleKind,
}

pub fn write_fractal(path: &Path, rows: &[FractalRow]) -> Result<()> {
    let rows = rows
        .iter()
        .map(|r| [fmt_f64(r.r_ut), r.rule.token().to_string(), r.strategy.to_string(), opt(r.a)]);
    write_csv(path, FRACTAL_HEADER, rows)
}

pub fn write_gl(path: &Path, rows: &[GlRow]) -> Result<()> {
    let rows = rows
        .iter()
        .map(|r| [r.l.to_string(), r.rule.token().to_string(), fmt_f64(r.g)]);
    write_csv(path, GL_HEADER, rows)
}

pub fn write_spectrum(path: &Path, rows: &[SpectrumRow]) -> Result<()> {
    let rows = rows
        .iter()
        .map(|r| [fmt_f64(r.freq), fmt_f64(r.power), r.rule.token().to_string()]);
    write_csv(path, SPECTRUM_HEADER, rows)
}

pub fn write_lagcorr(path: &Path, rows: &[LagRow]) -> Result<()> {
    let rows = rows
        .iter()
        .map(|r| [r.distance.to_string(), r.lag.to_string(), opt(r.rho), r.rule.token().to_string()]);
    write_csv(path, LAGCORR_HEADER, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, SimConfig, TopologySpec};
    use crate::game::GameParams;
    use crate::rules::UpdateRule;
    use Strategy::*;

    fn record() -> RunRecord {
        let mut c = SimConfig::new(
            TopologySpec::Lattice { side: 6 },
            GameParams::new(6.0, 0.33).unwrap(),
            UpdateRule::of(RuleKind::Prop),
        );
        c.steps = 12;
        c.runs = 1;
        c.snapshot_every = Some(5);
        c.record_nodes = vec![3, 0];
        c.probe_distances = vec![1, 2, 3];
        run(&c, 0).unwrap()
    }

    #[test]
    fn timeseries_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ts.csv");
        let r = record();
        write_timeseries(&p, &r).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("step,k_I,k_T,k_U,W\n0,"));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 14);
        let rows = read_timeseries(&p).unwrap();
        for (t, row) in rows.iter().enumerate() {
            assert_eq!(row.step, t);
            assert_eq!(row.counts, r.counts[t]);
            assert_eq!(row.wealth.to_bits(), r.wealth[t].to_bits());
        }
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.25), "0.25");
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(4.5e-26), "4.5e-26");
        assert_eq!(fmt_f64(-2e20), "-2e20");
        assert_eq!(fmt_f64(1234.5), "1234.5");
    }

    #[test]
    fn floats_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let vals = [0.1 + 0.2, 1.0 / 3.0, 1e-300, 123456789.12345679, -0.0, 5e300];
        let rows: Vec<SpectrumRow> = vals.iter().map(|&v| SpectrumRow { freq: v, power: v, rule: RuleKind::Ui }).collect();
        write_spectrum(&p, &rows).unwrap();
        let back = read_csv(&p, SPECTRUM_HEADER).unwrap();
        for ((_, rec), v) in back.iter().zip(vals) {
            assert_eq!(rec[0].parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn snapshots_nodes_and_probes_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = record();
        assert_eq!(r.snapshots.iter().map(|s| s.step).collect::<Vec<_>>(), vec![0, 5, 10]);
        let p = dir.path().join("snap.csv");
        write_snapshots(&p, &r.snapshots).unwrap();
        assert_eq!(read_snapshots(&p).unwrap(), r.snapshots);
        let p = dir.path().join("nodes.csv");
        write_node_series(&p, &r.node_series).unwrap();
        assert_eq!(read_node_series(&p).unwrap(), r.node_series);
        let p = dir.path().join("probes.csv");
        let probes = r.probes.clone().unwrap();
        write_probes(&p, &probes).unwrap();
        assert_eq!(read_probes(&p).unwrap(), probes);
    }

    #[test]
    fn schema_errors_report_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "step,node,strategy_code\n0,0,1\n0,1,4\n").unwrap();
        match read_snapshots(&p) {
            Err(Error::Schema { row, message, .. }) => {
                assert_eq!(row, 3);
                assert!(message.contains('4'));
            }
            other => panic!("{other:?}"),
        }
        std::fs::write(&p, "step,k_I,k_T,k_U,W\n0,1,2,3,0.5\n1,1,x,3,0.5\n").unwrap();
        assert!(matches!(read_timeseries(&p), Err(Error::Schema { row: 3, .. })));
        std::fs::write(&p, "step,k_I,k_T,k_U,W\n0,1,2,3,0.5\n2,1,2,3,0.5\n").unwrap();
        assert!(matches!(read_timeseries(&p), Err(Error::Schema { row: 3, .. })));
        std::fs::write(&p, "step,kI\n0,1\n").unwrap();
        assert!(matches!(read_timeseries(&p), Err(Error::Schema { row: 1, .. })));
        std::fs::write(&p, "step,k_I,k_T,k_U,W\n0,1,2\n").unwrap();
        assert!(matches!(read_timeseries(&p), Err(Error::Schema { row: 2, .. })));
        assert!(matches!(read_timeseries(&dir.path().join("missing.csv")), Err(Error::Io { .. })));
    }

    #[test]
    fn undefined_values_are_empty_fields() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lag.csv");
        write_lagcorr(
            &p,
            &[
                LagRow { distance: 2, lag: 0, rho: Some(0.5), rule: RuleKind::Prop },
                LagRow { distance: 2, lag: 1, rho: None, rule: RuleKind::Prop },
            ],
        )
        .unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "distance,lag,rho,rule\n2,0,0.5,prop\n2,1,,prop\n");
        let p = dir.path().join("frac.csv");
        write_fractal(&p, &[FractalRow { r_ut: 0.66, rule: RuleKind::Ui, strategy: I, a: Some(2.0) }]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "r_UT,rule,strategy,a\n0.66,ui,I,2\n");
        let p = dir.path().join("gl.csv");
        write_gl(&p, &[GlRow { l: 3, rule: RuleKind::Moran, g: 0.25 }]).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "l,rule,G\n3,moran,0.25\n");
    }
}
