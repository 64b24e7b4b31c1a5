//! Synchronous evolutionary dynamics and seeded Monte Carlo ensembles.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{all_payoffs_into, GameParams, Population, Strategy, Wealth};
use crate::rules::UpdateRule;
use crate::seed::{self, Domain};
use crate::topology::{build_lattice, build_scale_free, Network, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "topology", rename_all = "snake_case")]
pub enum TopologySpec {
    Lattice { side: usize },
    ScaleFree { nodes: usize, m: usize },
}

impl TopologySpec {
    pub fn token(&self) -> &'static str {
        match self {
            TopologySpec::Lattice { .. } => "lattice",
            TopologySpec::ScaleFree { .. } => "scale_free",
        }
    }

    pub fn node_count(&self) -> usize {
        match *self {
            TopologySpec::Lattice { side } => side * side,
            TopologySpec::ScaleFree { nodes, .. } => nodes,
        }
    }

    /// Builds the network for the run seeded with `run_seed`. Lattices ignore the seed.
    pub fn build(&self, run_seed: u64) -> Result<Network> {
        match *self {
            TopologySpec::Lattice { side } => build_lattice(side),
            TopologySpec::ScaleFree { nodes, m } => {
                build_scale_free(nodes, m, &mut seed::run_stream(run_seed, Domain::Graph))
            }
        }
    }
}

/// Initial strategy shares `(f_I, f_T, f_U)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fractions(pub [f64; 3]);

impl Fractions {
    pub fn new(f_i: f64, f_t: f64, f_u: f64) -> Result<Self> {
        let f = Fractions([f_i, f_t, f_u]);
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::invalid(format!(
                "initial fractions must be non-negative, got {:?}",
                self.0
            )));
        }
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "initial fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }

    /// Exact per-strategy totals for `pop` nodes by largest-remainder rounding.
    pub fn apportion(&self, pop: usize) -> [usize; 3] {
        let exact = self.0.map(|f| f * pop as f64);
        let mut counts = exact.map(|x| x.floor() as usize);
        let assigned: usize = counts.iter().sum();
        let mut order = [0usize, 1, 2];
        // Stable sort keeps I < T < U priority among equal remainders.
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal)
        });
        for &k in order.iter().take(pop.saturating_sub(assigned)) {
            counts[k] += 1;
        }
        counts
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub topology: TopologySpec,
    pub params: GameParams,
    pub rule: UpdateRule,
    pub initial: Fractions,
    pub steps: usize,
    pub runs: usize,
    pub master_seed: u64,
    /// Record the full lattice every this many steps (step 0 included).
    pub snapshot_every: Option<usize>,
    /// Nodes whose strategy code is recorded at every step.
    pub record_nodes: Vec<NodeId>,
    /// When non-empty, each run draws a random focal node and one probe node
    /// at each of these lattice distances, and records their series.
    pub probe_distances: Vec<usize>,
}

impl SimConfig {
    pub const DEFAULT_STEPS: usize = 5000;
    pub const DEFAULT_RUNS: usize = 100;

    pub fn new(topology: TopologySpec, params: GameParams, rule: UpdateRule) -> Self {
        SimConfig {
            topology,
            params,
            rule,
            initial: Fractions([0.30, 0.25, 0.45]),
            steps: Self::DEFAULT_STEPS,
            runs: Self::DEFAULT_RUNS,
            master_seed: 0,
            snapshot_every: None,
            record_nodes: Vec::new(),
            probe_distances: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.initial.validate()?;
        if self.runs == 0 {
            return Err(Error::invalid("runs must be >= 1"));
        }
        if self.snapshot_every == Some(0) {
            return Err(Error::invalid("snapshot_every must be >= 1"));
        }
        let n = self.topology.node_count();
        if let Some(&bad) = self.record_nodes.iter().find(|&&i| i >= n) {
            return Err(Error::invalid(format!("record node {bad} outside 0..{n}")));
        }
        if !self.probe_distances.is_empty() && !matches!(self.topology, TopologySpec::Lattice { .. }) {
            return Err(Error::UnsupportedTopology);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub state: Vec<Strategy>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSeries {
    pub node: NodeId,
    pub codes: Vec<u8>,
}

/// Focal node plus `(distance, node)` probes chosen for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSet {
    pub focal: NodeId,
    pub probes: Vec<(usize, NodeId)>,
}

/// Everything recorded for one realization. Series hold `steps + 1` entries,
/// the first being the initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_index: usize,
    pub seed: u64,
    pub node_count: usize,
    /// Per-step population totals `[k_I, k_T, k_U]`.
    pub counts: Vec<[usize; 3]>,
    /// Per-step global net wealth.
    pub wealth: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub node_series: Vec<NodeSeries>,
    pub probes: Option<ProbeSet>,
    pub final_state: Vec<Strategy>,
}

impl RunRecord {
    pub fn steps(&self) -> usize {
        self.counts.len() - 1
    }

    /// The `k_I`, `k_T` or `k_U` series as reals.
    pub fn count_series(&self, s: Strategy) -> Vec<f64> {
        self.counts.iter().map(|c| c[s as usize] as f64).collect()
    }

    pub fn series_of(&self, node: NodeId) -> Option<&[u8]> {
        self.node_series
            .iter()
            .find(|ns| ns.node == node)
            .map(|ns| ns.codes.as_slice())
    }
}

/// Random placement of exactly apportioned strategy totals.
pub fn init_population<R: Rng + ?Sized>(pop: usize, fractions: &Fractions, rng: &mut R) -> Result<Population> {
    fractions.validate()?;
    let counts = fractions.apportion(pop);
    let mut s = Vec::with_capacity(pop);
    for (strategy, &k) in Strategy::ALL.iter().zip(&counts) {
        s.extend(std::iter::repeat_n(*strategy, k));
    }
    s.shuffle(rng);
    Ok(Population::new(s))
}

/// One synchronous update: every node applies `rule` against the payoffs of
/// the current state. Node `i` draws from the stream keyed by `(run_seed, t, i)`.
pub fn step(
    net: &Network,
    state: &Population,
    params: &GameParams,
    rule: &UpdateRule,
    run_seed: u64,
    t: usize,
) -> Population {
    let mut w = Wealth::zeros(net.node_count());
    all_payoffs_into(net, state, params, w.as_mut_slice());
    let mut next = state.clone();
    step_into(net, state, &w, params, rule, run_seed, t, &mut next);
    next
}

#[allow(clippy::too_many_arguments)]
fn step_into(
    net: &Network,
    state: &Population,
    w: &Wealth,
    params: &GameParams,
    rule: &UpdateRule,
    run_seed: u64,
    t: usize,
    next: &mut Population,
) {
    for (i, slot) in next.as_mut_slice().iter_mut().enumerate() {
        let mut rng = seed::agent_stream(run_seed, t as u64, i as u64);
        *slot = rule.apply(i, state, w, net, params, &mut rng);
    }
}

/// Focal node and one probe per requested distance, drawn from the run's probe stream.
fn draw_probes(net: &Network, distances: &[usize], run_seed: u64) -> Result<ProbeSet> {
    let mut rng = seed::run_stream(run_seed, Domain::Probe);
    let focal = rng.random_range(0..net.node_count());
    let nodes = crate::analysis::select_probe_nodes(net, focal, distances, &mut rng)?;
    Ok(ProbeSet {
        focal,
        probes: distances.iter().copied().zip(nodes).collect(),
    })
}

/// Simulates realization `run_index` of `config`.
pub fn run(config: &SimConfig, run_index: usize) -> Result<RunRecord> {
    config.validate()?;
    let run_seed = seed::run_seed(config.master_seed, run_index as u64);
    let net = config.topology.build(run_seed)?;
    let n = net.node_count();
    let mut state = init_population(n, &config.initial, &mut seed::run_stream(run_seed, Domain::Init))?;

    let probes = if config.probe_distances.is_empty() {
        None
    } else {
        Some(draw_probes(&net, &config.probe_distances, run_seed)?)
    };
    let mut tracked: Vec<NodeId> = config.record_nodes.clone();
    if let Some(p) = &probes {
        tracked.push(p.focal);
        tracked.extend(p.probes.iter().map(|&(_, j)| j));
    }
    tracked.sort_unstable();
    tracked.dedup();

    let mut counts = Vec::with_capacity(config.steps + 1);
    let mut wealth = Vec::with_capacity(config.steps + 1);
    let mut snapshots = Vec::new();
    let mut node_series: Vec<NodeSeries> = tracked
        .iter()
        .map(|&node| NodeSeries {
            node,
            codes: Vec::with_capacity(config.steps + 1),
        })
        .collect();

    let mut w = Wealth::zeros(n);
    let mut next = state.clone();
    for t in 0..=config.steps {
        all_payoffs_into(&net, &state, &config.params, w.as_mut_slice());
        counts.push(state.counts());
        wealth.push(w.total());
        for ns in &mut node_series {
            ns.codes.push(state.get(ns.node).code());
        }
        if config.snapshot_every.is_some_and(|every| t % every == 0) {
            snapshots.push(Snapshot {
                step: t,
                state: state.as_slice().to_vec(),
            });
        }
        if t == config.steps {
            break;
        }
        step_into(&net, &state, &w, &config.params, &config.rule, run_seed, t, &mut next);
        std::mem::swap(&mut state, &mut next);
    }

    Ok(RunRecord {
        run_index,
        seed: run_seed,
        node_count: n,
        counts,
        wealth,
        snapshots,
        node_series,
        probes,
        final_state: state.into_vec(),
    })
}

/// All `config.runs` realizations, in run order. Runs execute on the current
/// rayon pool; the output does not depend on its size.
pub fn run_ensemble(config: &SimConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    (0..config.runs)
        .into_par_iter()
        .map(|r| run(config, r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{all_payoffs, global_net_wealth};
    use crate::rules::RuleKind;
    use Strategy::*;

    fn lattice_config(side: usize, rule: RuleKind, r_ut: f64) -> SimConfig {
        SimConfig::new(
            TopologySpec::Lattice { side },
            GameParams::new(6.0, r_ut).unwrap(),
            UpdateRule::of(rule),
        )
    }

    #[test]
    fn apportion_uses_largest_remainder() {
        let f = Fractions::new(0.30, 0.25, 0.45).unwrap();
        assert_eq!(f.apportion(1024), [307, 256, 461]);
        assert_eq!(Fractions::new(1.0, 0.0, 0.0).unwrap().apportion(10), [10, 0, 0]);
        let third = 1.0 / 3.0;
        assert_eq!(Fractions::new(third, third, third).unwrap().apportion(10).iter().sum::<usize>(), 10);
    }

    #[test]
    fn fractions_are_validated() {
        assert!(Fractions::new(-0.1, 0.6, 0.5).is_err());
        assert!(Fractions::new(0.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn init_population_is_exact_and_reproducible() {
        let f = Fractions::new(0.30, 0.25, 0.45).unwrap();
        let a = init_population(1024, &f, &mut seed::run_stream(3, Domain::Init)).unwrap();
        let b = init_population(1024, &f, &mut seed::run_stream(3, Domain::Init)).unwrap();
        assert_eq!(a.counts(), [307, 256, 461]);
        assert_eq!(a, b);
        let all_i = init_population(50, &Fractions([1.0, 0.0, 0.0]), &mut seed::run_stream(3, Domain::Init)).unwrap();
        assert_eq!(all_i, Population::uniform(50, I));
    }

    #[test]
    fn monomorphic_states_are_absorbing() {
        let net = build_lattice(8).unwrap();
        let p = GameParams::new(6.0, 0.33).unwrap();
        for kind in RuleKind::ALL {
            for s in Strategy::ALL {
                let state = Population::uniform(64, s);
                let next = step(&net, &state, &p, &UpdateRule::of(kind), 1, 0);
                assert_eq!(next, state, "{kind} {s}");
            }
        }
    }

    #[test]
    fn step_is_deterministic() {
        let net = build_lattice(10).unwrap();
        let p = GameParams::new(6.0, 0.33).unwrap();
        let state = init_population(100, &Fractions([0.3, 0.25, 0.45]), &mut seed::run_stream(1, Domain::Init)).unwrap();
        for kind in RuleKind::ALL {
            let rule = UpdateRule::of(kind);
            assert_eq!(step(&net, &state, &p, &rule, 42, 7), step(&net, &state, &p, &rule, 42, 7));
        }
    }

    #[test]
    fn step_reads_only_the_frozen_previous_state() {
        // Every node's successor must equal the rule applied to the untouched
        // previous state, even though earlier nodes have already changed.
        let net = build_lattice(10).unwrap();
        let p = GameParams::new(6.0, 0.66).unwrap();
        let state = init_population(100, &Fractions([0.3, 0.25, 0.45]), &mut seed::run_stream(2, Domain::Init)).unwrap();
        let w = all_payoffs(&net, &state, &p);
        for kind in RuleKind::ALL {
            let rule = UpdateRule::of(kind);
            let next = step(&net, &state, &p, &rule, 5, 3);
            if kind != RuleKind::Prop {
                assert_ne!(next, state, "{kind} should change something");
            }
            for i in 0..100 {
                let mut rng = seed::agent_stream(5, 3, i as u64);
                assert_eq!(next.get(i), rule.apply(i, &state, &w, &net, &p, &mut rng), "{kind} node {i}");
            }
        }
    }

    #[test]
    fn ui_admits_a_period_two_cycle() {
        // Search random small lattices for a UI limit cycle of period exactly 2.
        let p = GameParams::new(6.0, 0.33).unwrap();
        let rule = UpdateRule::of(RuleKind::Ui);
        let net = build_lattice(6).unwrap();
        let mut found = None;
        'search: for trial in 0..500u64 {
            let mut s = init_population(36, &Fractions([0.5, 0.5, 0.0]), &mut seed::run_stream(trial, Domain::Init)).unwrap();
            for t in 0..60 {
                let a = step(&net, &s, &p, &rule, trial, t);
                let b = step(&net, &a, &p, &rule, trial, t + 1);
                if b == s && a != s {
                    found = Some((s, trial, t));
                    break 'search;
                }
                s = a;
            }
        }
        let (s, trial, t) = found.expect("a period-2 configuration exists");
        let a = step(&net, &s, &p, &rule, trial, t);
        let b = step(&net, &a, &p, &rule, trial, t + 1);
        let c = step(&net, &b, &p, &rule, trial, t + 2);
        assert_ne!(a, s);
        assert_eq!(b, s);
        assert_eq!(c, a);
    }

    #[test]
    fn zero_steps_records_initial_state_only() {
        let mut c = lattice_config(8, RuleKind::Ui, 0.33);
        c.steps = 0;
        c.snapshot_every = Some(1);
        let r = run(&c, 0).unwrap();
        assert_eq!(r.counts.len(), 1);
        assert_eq!(r.wealth.len(), 1);
        assert_eq!(r.snapshots.len(), 1);
        assert_eq!(r.counts[0], [19, 16, 29]);
    }

    #[test]
    fn all_untrustworthy_never_earns() {
        let mut c = lattice_config(8, RuleKind::Moran, 0.33);
        c.initial = Fractions([0.0, 0.0, 1.0]);
        c.steps = 50;
        let r = run(&c, 0).unwrap();
        assert!(r.wealth.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn run_records_consistent_series() {
        let mut c = lattice_config(32, RuleKind::Prop, 0.33);
        c.steps = 200;
        c.snapshot_every = Some(50);
        c.record_nodes = vec![0, 500];
        c.probe_distances = vec![2, 4, 6, 10];
        let r = run(&c, 3).unwrap();
        assert_eq!(r.counts.len(), 201);
        assert!(r.counts.iter().all(|k| k.iter().sum::<usize>() == 1024));
        assert_eq!(r.snapshots.iter().map(|s| s.step).collect::<Vec<_>>(), vec![0, 50, 100, 150, 200]);
        let last = &r.snapshots.last().unwrap().state;
        assert_eq!(last, &r.final_state);
        // Recorded wealth matches a fresh payoff evaluation of the final state.
        let net = build_lattice(32).unwrap();
        let w = all_payoffs(&net, &Population::new(r.final_state.clone()), &c.params);
        assert_eq!(*r.wealth.last().unwrap(), global_net_wealth(w.as_slice()));
        let probes = r.probes.as_ref().unwrap();
        for &(d, j) in &probes.probes {
            assert_eq!(crate::topology::lattice_distance(&net, probes.focal, j).unwrap(), d);
            assert_eq!(r.series_of(j).unwrap().len(), 201);
        }
        assert_eq!(r.series_of(500).unwrap()[200], r.final_state[500].code());
    }

    #[test]
    fn ensemble_is_reproducible_and_runs_differ() {
        let mut c = lattice_config(16, RuleKind::Moran, 0.33);
        c.steps = 30;
        c.runs = 3;
        c.master_seed = 99;
        let a = run_ensemble(&c).unwrap();
        let b = run_ensemble(&c).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].counts, a[1].counts);
        assert_eq!(a[2], run(&c, 2).unwrap());
    }

    #[test]
    fn ensemble_is_independent_of_thread_count() {
        let mut c = lattice_config(16, RuleKind::UiVm, 0.66);
        c.steps = 40;
        c.runs = 4;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_ensemble(&c)).unwrap();
        let b = four.install(|| run_ensemble(&c)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scale_free_rebuilt_per_run() {
        let mut c = SimConfig::new(
            TopologySpec::ScaleFree { nodes: 200, m: 2 },
            GameParams::new(6.0, 0.11).unwrap(),
            UpdateRule::of(RuleKind::Prop),
        );
        c.steps = 5;
        let s0 = seed::run_seed(c.master_seed, 0);
        let s1 = seed::run_seed(c.master_seed, 1);
        assert_ne!(c.topology.build(s0).unwrap(), c.topology.build(s1).unwrap());
        assert_eq!(run(&c, 1).unwrap().node_count, 200);
    }

    #[test]
    fn probes_require_a_lattice() {
        let mut c = SimConfig::new(
            TopologySpec::ScaleFree { nodes: 50, m: 2 },
            GameParams::new(6.0, 0.11).unwrap(),
            UpdateRule::of(RuleKind::Prop),
        );
        c.probe_distances = vec![2];
        assert!(matches!(run(&c, 0), Err(Error::UnsupportedTopology)));
    }
}
