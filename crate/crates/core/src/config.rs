//! Flat JSON configuration shared by the `run`, `sweep` and `analyze` commands.
//!
//! Every key is optional. `--set key=value` overrides are applied on top of
//! the file; a value that parses as JSON is taken as such, anything else as a
//! bare string (so `rule=prop` and `r_UT=0.33` both work).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::analysis::window_len;
use crate::engine::{Fractions, SimConfig, TopologySpec};
use crate::error::{Error, Result};
use crate::game::GameParams;
use crate::rules::{RuleKind, UpdateRule};
use crate::sweep::initial_condition_grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TopologyKind {
    Lattice,
    ScaleFree,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 2] = [TopologyKind::Lattice, TopologyKind::ScaleFree];

    pub fn token(self) -> &'static str {
        match self {
            TopologyKind::Lattice => "lattice",
            TopologyKind::ScaleFree => "scale_free",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lattice" | "regular" => Ok(TopologyKind::Lattice),
            "scale_free" | "sf" | "ba" => Ok(TopologyKind::ScaleFree),
            other => Err(Error::invalid(format!(
                "unknown topology `{other}` (expected lattice | scale_free)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub topology: TopologyKind,
    pub side: usize,
    pub nodes: usize,
    pub m: usize,
    pub r_t: f64,
    /// Required by `run`; `sweep` reads `r_ut_values` instead.
    pub r_ut: Option<f64>,
    pub rule: RuleKind,
    pub q: f64,
    pub initial: Fractions,
    pub steps: usize,
    pub runs: usize,
    pub seed: u64,
    pub snapshot_every: Option<usize>,
    pub record_nodes: Vec<usize>,
    pub probe_distances: Vec<usize>,
    /// Trailing fraction of steps averaged for steady-state wealth.
    pub window: f64,
    /// Trailing fraction of steps used for spectra and lag correlations.
    pub temporal_window: f64,
    pub f_min: f64,
    pub max_lag: usize,
    /// Box sides for mass scaling; defaults to `1..=side/2`.
    pub box_sides: Option<Vec<usize>>,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    pub grid_step: f64,
    pub rules: Vec<RuleKind>,
    pub topologies: Vec<TopologyKind>,
    pub r_ut_values: Vec<f64>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            topology: TopologyKind::Lattice,
            side: 32,
            nodes: 1024,
            m: 2,
            r_t: GameParams::DEFAULT_R_T,
            r_ut: None,
            rule: RuleKind::Ui,
            q: UpdateRule::DEFAULT_Q,
            initial: Fractions([0.30, 0.25, 0.45]),
            steps: SimConfig::DEFAULT_STEPS,
            runs: SimConfig::DEFAULT_RUNS,
            seed: 0,
            snapshot_every: None,
            record_nodes: Vec::new(),
            probe_distances: Vec::new(),
            window: 0.25,
            temporal_window: 0.5,
            f_min: 0.004,
            max_lag: 20,
            box_sides: None,
            threads: 0,
            grid_step: 0.05,
            rules: RuleKind::ALL.to_vec(),
            topologies: TopologyKind::ALL.to_vec(),
            r_ut_values: vec![0.11, 0.33, 0.66],
        }
    }
}

const KEYS: &[&str] = &[
    "topology",
    "side",
    "nodes",
    "m",
    "R_T",
    "r_UT",
    "rule",
    "q",
    "f_I",
    "f_T",
    "f_U",
    "steps",
    "runs",
    "seed",
    "snapshot_every",
    "record_nodes",
    "probe_distances",
    "window",
    "temporal_window",
    "f_min",
    "max_lag",
    "box_sides",
    "threads",
    "grid_step",
    "rules",
    "topologies",
    "r_UT_values",
];

/// Splits `key=value` and parses the value as JSON, falling back to a string.
pub fn parse_override(s: &str) -> Result<(String, Value)> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| Error::invalid(format!("override `{s}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::invalid(format!("override `{s}` has an empty key")));
    }
    let raw = raw.trim();
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

struct Reader<'a> {
    map: &'a Map<String, Value>,
}

impl Reader<'_> {
    fn get(&self, key: &str) -> Option<&Value> {
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => as_f64(key, v),
        }
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|v| as_f64(key, v)).transpose()
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => as_usize(key, v),
        }
    }

    fn opt_usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key).map(|v| as_usize(key, v)).transpose()
    }

    fn u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .ok_or_else(|| Error::config(key, format!("expected a non-negative integer, got {v}"))),
        }
    }

    fn parsed<T: FromStr<Err = Error>>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => as_parsed(key, v),
        }
    }

    fn list<T>(&self, key: &str, item: impl Fn(&str, &Value) -> Result<T>) -> Result<Option<Vec<T>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items.iter().map(|v| item(key, v)).collect::<Result<_>>().map(Some),
            // A scalar stands for a one-element list.
            Some(v) => Ok(Some(vec![item(key, v)?])),
        }
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::config(key, format!("expected a number, got {v}")))
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::config(key, format!("expected a non-negative integer, got {v}")))
}

fn as_parsed<T: FromStr<Err = Error>>(key: &str, v: &Value) -> Result<T> {
    let s = v
        .as_str()
        .ok_or_else(|| Error::config(key, format!("expected a string, got {v}")))?;
    s.parse().map_err(|e: Error| Error::config(key, strip_prefix(e)))
}

/// Drops the variant prefix so the diagnostic reads `config key `k`: ...`.
fn strip_prefix(e: Error) -> String {
    match e {
        Error::InvalidArgument(m) => m,
        other => other.to_string(),
    }
}

impl Config {
    /// Reads `path` (if any), applies overrides in order, and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config> {
        let mut map = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                match serde_json::from_str::<Value>(&text) {
                    Ok(Value::Object(m)) => m,
                    Ok(_) => {
                        return Err(Error::invalid(format!(
                            "{}: config must be a JSON object",
                            p.display()
                        )))
                    }
                    Err(e) => return Err(Error::invalid(format!("{}: {e}", p.display()))),
                }
            }
            None => Map::new(),
        };
        for o in overrides {
            let (k, v) = parse_override(o)?;
            map.insert(k, v);
        }
        Config::from_map(&map)
    }

    pub fn from_json_str(text: &str) -> Result<Config> {
        match serde_json::from_str::<Value>(text)? {
            Value::Object(m) => Config::from_map(&m),
            _ => Err(Error::invalid("config must be a JSON object")),
        }
    }

    pub fn from_map(map: &Map<String, Value>) -> Result<Config> {
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::config(k.clone(), "unknown key"));
        }
        let d = Config::default();
        let r = Reader { map };
        let c = Config {
            topology: r.parsed("topology", d.topology)?,
            side: r.usize("side", d.side)?,
            nodes: r.usize("nodes", d.nodes)?,
            m: r.usize("m", d.m)?,
            r_t: r.f64("R_T", d.r_t)?,
            r_ut: r.opt_f64("r_UT")?,
            rule: r.parsed("rule", d.rule)?,
            q: r.f64("q", d.q)?,
            initial: Fractions([
                r.f64("f_I", d.initial.0[0])?,
                r.f64("f_T", d.initial.0[1])?,
                r.f64("f_U", d.initial.0[2])?,
            ]),
            steps: r.usize("steps", d.steps)?,
            runs: r.usize("runs", d.runs)?,
            seed: r.u64("seed", d.seed)?,
            snapshot_every: r.opt_usize("snapshot_every")?,
            record_nodes: r.list("record_nodes", as_usize)?.unwrap_or(d.record_nodes),
            probe_distances: r.list("probe_distances", as_usize)?.unwrap_or(d.probe_distances),
            window: r.f64("window", d.window)?,
            temporal_window: r.f64("temporal_window", d.temporal_window)?,
            f_min: r.f64("f_min", d.f_min)?,
            max_lag: r.usize("max_lag", d.max_lag)?,
            box_sides: r.list("box_sides", as_usize)?,
            threads: r.usize("threads", d.threads)?,
            grid_step: r.f64("grid_step", d.grid_step)?,
            rules: r.list("rules", as_parsed)?.unwrap_or(d.rules),
            topologies: r.list("topologies", as_parsed)?.unwrap_or(d.topologies),
            r_ut_values: r.list("r_UT_values", as_f64)?.unwrap_or(d.r_ut_values),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |key: &str, ok: bool, msg: String| if ok { Ok(()) } else { Err(Error::config(key, msg)) };
        check("side", self.side >= 2, format!("lattice side must be >= 2, got {}", self.side))?;
        check("m", self.m >= 1, format!("must be >= 1, got {}", self.m))?;
        check(
            "nodes",
            self.nodes > self.m,
            format!("must exceed m = {}, got {}", self.m, self.nodes),
        )?;
        GameParams::new(self.r_t, 0.5).map_err(|e| Error::config("R_T", strip_prefix(e)))?;
        if let Some(r) = self.r_ut {
            GameParams::new(self.r_t, r).map_err(|e| Error::config("r_UT", strip_prefix(e)))?;
        }
        for &r in &self.r_ut_values {
            GameParams::new(self.r_t, r).map_err(|e| Error::config("r_UT_values", strip_prefix(e)))?;
        }
        UpdateRule::new(self.rule, self.q).map_err(|e| Error::config("q", strip_prefix(e)))?;
        self.initial
            .validate()
            .map_err(|e| Error::config("f_I/f_T/f_U", strip_prefix(e)))?;
        check("steps", self.steps >= 1, "must be >= 1".into())?;
        check("runs", self.runs >= 1, "must be >= 1".into())?;
        check("snapshot_every", self.snapshot_every != Some(0), "must be >= 1".into())?;
        window_len(self.steps, self.window).map_err(|e| Error::config("window", strip_prefix(e)))?;
        window_len(self.steps, self.temporal_window)
            .map_err(|e| Error::config("temporal_window", strip_prefix(e)))?;
        check(
            "f_min",
            self.f_min >= 0.0 && self.f_min < 0.5,
            format!("must lie in [0, 0.5), got {}", self.f_min),
        )?;
        if let Some(sides) = &self.box_sides {
            check("box_sides", !sides.is_empty() && sides.iter().all(|&b| b >= 1), "must be a non-empty list of positive sides".into())?;
        }
        initial_condition_grid(self.grid_step).map_err(|e| Error::config("grid_step", strip_prefix(e)))?;
        check("rules", !self.rules.is_empty(), "must not be empty".into())?;
        check("topologies", !self.topologies.is_empty(), "must not be empty".into())?;
        check("r_UT_values", !self.r_ut_values.is_empty(), "must not be empty".into())?;
        Ok(())
    }

    pub fn topology_spec(&self, kind: TopologyKind) -> TopologySpec {
        match kind {
            TopologyKind::Lattice => TopologySpec::Lattice { side: self.side },
            TopologyKind::ScaleFree => TopologySpec::ScaleFree {
                nodes: self.nodes,
                m: self.m,
            },
        }
    }

    /// Engine configuration for a given topology, rule and `r_UT`.
    pub fn sim_config_for(&self, topology: TopologyKind, rule: RuleKind, r_ut: f64) -> Result<SimConfig> {
        let params = GameParams::new(self.r_t, r_ut).map_err(|e| Error::config("r_UT", strip_prefix(e)))?;
        let rule = UpdateRule::new(rule, self.q).map_err(|e| Error::config("q", strip_prefix(e)))?;
        let mut sim = SimConfig::new(self.topology_spec(topology), params, rule);
        sim.initial = self.initial;
        sim.steps = self.steps;
        sim.runs = self.runs;
        sim.master_seed = self.seed;
        sim.snapshot_every = self.snapshot_every;
        sim.record_nodes = self.record_nodes.clone();
        sim.probe_distances = self.probe_distances.clone();
        sim.validate().map_err(|e| match e {
            Error::UnsupportedTopology => Error::config("probe_distances", "probes require the lattice topology"),
            Error::InvalidArgument(m) if m.starts_with("record node") => Error::config("record_nodes", m),
            other => other,
        })?;
        Ok(sim)
    }

    /// Engine configuration for the single-scenario `run` command.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let r_ut = self
            .r_ut
            .ok_or_else(|| Error::config("r_UT", "required; must lie in the open interval (0,1)"))?;
        self.sim_config_for(self.topology, self.rule, r_ut)
    }

    /// Mass-scaling box sides for a lattice of side `side`.
    pub fn box_sides_for(&self, side: usize) -> Vec<usize> {
        match &self.box_sides {
            Some(b) => b.clone(),
            None => (1..=side / 2).collect(),
        }
    }

    /// The flat JSON object this configuration parses back from.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        put("topology", self.topology.token().into());
        put("side", self.side.into());
        put("nodes", self.nodes.into());
        put("m", self.m.into());
        put("R_T", self.r_t.into());
        put("r_UT", self.r_ut.map_or(Value::Null, Value::from));
        put("rule", self.rule.token().into());
        put("q", self.q.into());
        put("f_I", self.initial.0[0].into());
        put("f_T", self.initial.0[1].into());
        put("f_U", self.initial.0[2].into());
        put("steps", self.steps.into());
        put("runs", self.runs.into());
        put("seed", self.seed.into());
        put("snapshot_every", self.snapshot_every.map_or(Value::Null, Value::from));
        put("record_nodes", self.record_nodes.clone().into());
        put("probe_distances", self.probe_distances.clone().into());
        put("window", self.window.into());
        put("temporal_window", self.temporal_window.into());
        put("f_min", self.f_min.into());
        put("max_lag", self.max_lag.into());
        put("box_sides", self.box_sides.clone().map_or(Value::Null, Value::from));
        put("threads", self.threads.into());
        put("grid_step", self.grid_step.into());
        put("rules", self.rules.iter().map(|r| r.token()).collect::<Vec<_>>().into());
        put("topologies", self.topologies.iter().map(|t| t.token()).collect::<Vec<_>>().into());
        put("r_UT_values", self.r_ut_values.clone().into());
        Value::Object(m)
    }
}
