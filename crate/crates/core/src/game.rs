//! Strategies, game constants and per-step payoffs of the N-player trust game.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{Network, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Investor.
    I,
    /// Trustworthy trustee.
    T,
    /// Untrustworthy trustee.
    U,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::I, Strategy::T, Strategy::U];

    /// Numeric label used by the correlation analyses: I→1, T→2, U→3.
    pub fn code(self) -> u8 {
        match self {
            Strategy::I => 1,
            Strategy::T => 2,
            Strategy::U => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Strategy::I),
            2 => Some(Strategy::T),
            3 => Some(Strategy::U),
            _ => None,
        }
    }

    #[inline]
    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Strategy::I => "I",
            Strategy::T => "T",
            Strategy::U => "U",
        };
        f.write_str(s)
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" => Ok(Strategy::I),
            "T" | "t" => Ok(Strategy::T),
            "U" | "u" => Ok(Strategy::U),
            other => Err(Error::invalid(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Trust-game constants. The untrustworthy multiplier is derived as
/// `R_U = R_T · (1 + r_UT)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    r_t: f64,
    r_ut: f64,
}

impl GameParams {
    pub const DEFAULT_R_T: f64 = 6.0;

    pub fn new(r_t: f64, r_ut: f64) -> Result<Self> {
        if !r_t.is_finite() || r_t <= 1.0 {
            return Err(Error::invalid(format!("R_T must be > 1, got {r_t}")));
        }
        if !(r_ut > 0.0 && r_ut < 1.0) {
            return Err(Error::invalid(format!(
                "r_UT must lie in the open interval (0,1), got {r_ut}"
            )));
        }
        Ok(GameParams { r_t, r_ut })
    }

    pub fn r_t(&self) -> f64 {
        self.r_t
    }

    pub fn r_ut(&self) -> f64 {
        self.r_ut
    }

    pub fn r_u(&self) -> f64 {
        self.r_t * (1.0 + self.r_ut)
    }

    /// Largest payoff a node of degree `k` can earn (an untrustworthy trustee
    /// surrounded by investors).
    pub fn max_payoff(&self, k: usize) -> f64 {
        (1.0 + self.r_ut) * self.r_t * k as f64
    }

    /// Smallest payoff any node can earn (an investor among untrustworthy trustees).
    pub const MIN_PAYOFF: f64 = -1.0;
}

/// Strategy counts over a closed neighbourhood (focal node included).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NeighborhoodCounts {
    pub investors: u32,
    pub trustworthy: u32,
    pub untrustworthy: u32,
}

impl NeighborhoodCounts {
    pub fn trustees(&self) -> u32 {
        self.trustworthy + self.untrustworthy
    }

    pub fn total(&self) -> u32 {
        self.investors + self.trustees()
    }

    #[inline]
    fn add(&mut self, s: Strategy) {
        match s {
            Strategy::I => self.investors += 1,
            Strategy::T => self.trustworthy += 1,
            Strategy::U => self.untrustworthy += 1,
        }
    }
}

/// The strategy held by every node.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Population {
    strategies: Vec<Strategy>,
}

impl Population {
    pub fn new(strategies: Vec<Strategy>) -> Self {
        Population { strategies }
    }

    pub fn uniform(n: usize, s: Strategy) -> Self {
        Population::new(vec![s; n])
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    #[inline]
    pub fn get(&self, i: NodeId) -> Strategy {
        self.strategies[i]
    }

    pub fn set(&mut self, i: NodeId, s: Strategy) {
        self.strategies[i] = s;
    }

    pub fn as_slice(&self) -> &[Strategy] {
        &self.strategies
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [Strategy] {
        &mut self.strategies
    }

    pub fn into_vec(self) -> Vec<Strategy> {
        self.strategies
    }

    /// Population totals `[k_I, k_T, k_U]`.
    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for s in &self.strategies {
            c[s.index()] += 1;
        }
        c
    }

    pub fn codes(&self) -> Vec<u8> {
        self.strategies.iter().map(|s| s.code()).collect()
    }
}

/// Per-node payoffs of one round.
#[derive(Clone, Debug, PartialEq)]
pub struct Wealth(Vec<f64>);

impl Wealth {
    pub fn new(values: Vec<f64>) -> Self {
        Wealth(values)
    }

    pub fn zeros(n: usize) -> Self {
        Wealth(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn total(&self) -> f64 {
        global_net_wealth(&self.0)
    }
}

pub fn local_counts(net: &Network, state: &Population, i: NodeId) -> NeighborhoodCounts {
    let mut c = NeighborhoodCounts::default();
    c.add(state.get(i));
    for &j in net.neighbors(i) {
        c.add(state.get(j));
    }
    c
}

/// Net wealth of a node playing `s` given its closed-neighbourhood counts.
/// Zero whenever the neighbourhood holds no trustee.
#[inline]
pub fn payoff(params: &GameParams, counts: NeighborhoodCounts, s: Strategy) -> f64 {
    let trustees = counts.trustees();
    if trustees == 0 {
        return 0.0;
    }
    let k_tu = trustees as f64;
    match s {
        Strategy::I => params.r_t * counts.trustworthy as f64 / k_tu - 1.0,
        Strategy::T => params.r_t * counts.investors as f64 / k_tu,
        Strategy::U => (1.0 + params.r_ut) * params.r_t * counts.investors as f64 / k_tu,
    }
}

/// Payoffs of every node against one frozen snapshot of the population.
pub fn all_payoffs(net: &Network, state: &Population, params: &GameParams) -> Wealth {
    let mut w = Wealth::zeros(net.node_count());
    all_payoffs_into(net, state, params, w.as_mut_slice());
    w
}

pub(crate) fn all_payoffs_into(
    net: &Network,
    state: &Population,
    params: &GameParams,
    out: &mut [f64],
) {
    debug_assert_eq!(state.len(), net.node_count());
    for (i, w) in out.iter_mut().enumerate() {
        *w = payoff(params, local_counts(net, state, i), state.get(i));
    }
}

pub fn global_net_wealth(w: &[f64]) -> f64 {
    w.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::build_lattice;
    use proptest::prelude::{prop_assert, prop_assume, proptest};
    use proptest::strategy::Strategy as ArbStrategy;

    fn counts(i: u32, t: u32, u: u32) -> NeighborhoodCounts {
        NeighborhoodCounts {
            investors: i,
            trustworthy: t,
            untrustworthy: u,
        }
    }

    fn star(center: Strategy, leaves: &[Strategy]) -> (Network, Population) {
        let edges: Vec<_> = (1..=leaves.len()).map(|j| (0, j)).collect();
        let net = Network::from_edges(leaves.len() + 1, &edges).unwrap();
        let mut s = vec![center];
        s.extend_from_slice(leaves);
        (net, Population::new(s))
    }

    #[test]
    fn codes_are_fixed() {
        assert_eq!(Strategy::ALL.map(Strategy::code), [1, 2, 3]);
        for s in Strategy::ALL {
            assert_eq!(Strategy::from_code(s.code()), Some(s));
        }
        assert_eq!(Strategy::from_code(0), None);
    }

    #[test]
    fn params_validation() {
        assert!(GameParams::new(6.0, 0.0).is_err());
        assert!(GameParams::new(6.0, 1.0).is_err());
        assert!(GameParams::new(1.0, 0.5).is_err());
        let p = GameParams::new(6.0, 0.33).unwrap();
        assert!(1.0 < p.r_t() && p.r_t() < p.r_u() && p.r_u() < 2.0 * p.r_t());
    }

    #[test]
    fn local_counts_examples() {
        use Strategy::*;
        let (net, pop) = star(I, &[T, T, U, U]);
        assert_eq!(local_counts(&net, &pop, 0), counts(1, 2, 2));
        let (net, pop) = star(U, &[U, U, U, U]);
        assert_eq!(local_counts(&net, &pop, 0), counts(0, 0, 5));
        assert_eq!(local_counts(&net, &pop, 3).total() as usize, net.degree(3) + 1);
    }

    #[test]
    fn payoff_examples() {
        let p6 = GameParams::new(6.0, 0.33).unwrap();
        assert_eq!(payoff(&p6, counts(1, 4, 0), Strategy::I), 5.0);
        for s in Strategy::ALL {
            assert_eq!(payoff(&p6, counts(5, 0, 0), s), 0.0);
        }
        let w = payoff(&p6, counts(4, 0, 1), Strategy::U);
        assert!((w - 31.92).abs() < 1e-12, "{w}");
    }

    #[test]
    fn monomorphic_populations_earn_nothing() {
        let net = build_lattice(8).unwrap();
        let p = GameParams::new(6.0, 0.66).unwrap();
        for s in [Strategy::I, Strategy::T, Strategy::U] {
            let w = all_payoffs(&net, &Population::uniform(64, s), &p);
            assert!(w.as_slice().iter().all(|&x| x == 0.0), "{s}");
        }
    }

    #[test]
    fn investors_among_trustworthy_earn_r_t_minus_one() {
        // Checkerboard of I and T: no U anywhere, every neighbourhood has an investor.
        let net = build_lattice(32).unwrap();
        let pop = Population::new(
            (0..1024)
                .map(|i| if (i / 32 + i % 32) % 2 == 0 { Strategy::I } else { Strategy::T })
                .collect(),
        );
        let p = GameParams::new(6.0, 0.11).unwrap();
        let w = all_payoffs(&net, &pop, &p);
        for i in 0..1024 {
            if pop.get(i) == Strategy::I {
                assert_eq!(w.as_slice()[i], 5.0);
            }
        }
    }

    #[test]
    fn global_wealth_of_zero_vector() {
        assert_eq!(global_net_wealth(&[0.0; 10]), 0.0);
    }

    fn arb_counts() -> impl ArbStrategy<Value = NeighborhoodCounts> {
        (0u32..9, 0u32..9, 0u32..9).prop_map(|(i, t, u)| counts(i, t, u))
    }

    proptest! {
        #[test]
        fn payoff_bounds(c in arb_counts(), r_ut in 0.01f64..0.99, s in 0usize..3) {
            prop_assume!(c.total() >= 1);
            let p = GameParams::new(6.0, r_ut).unwrap();
            let s = Strategy::ALL[s];
            let w = payoff(&p, c, s);
            let k = (c.total() - 1) as usize;
            prop_assert!(w >= GameParams::MIN_PAYOFF);
            prop_assert!(w <= p.max_payoff(k) + 1e-12);
        }

        #[test]
        fn untrustworthy_payoff_increases_with_investors(i in 0u32..8, t in 0u32..5, u in 1u32..5, r_ut in 0.01f64..0.99) {
            let p = GameParams::new(6.0, r_ut).unwrap();
            let lo = payoff(&p, counts(i, t, u), Strategy::U);
            let hi = payoff(&p, counts(i + 1, t, u), Strategy::U);
            prop_assert!(hi > lo);
        }

        #[test]
        fn untrustworthy_dominates_trustworthy(i in 1u32..8, t in 0u32..5, u in 0u32..5, r_ut in 0.01f64..0.99) {
            prop_assume!(t + u >= 1);
            let p = GameParams::new(6.0, r_ut).unwrap();
            let c = counts(i, t, u);
            let wt = payoff(&p, c, Strategy::T);
            let wu = payoff(&p, c, Strategy::U);
            prop_assert!(wu > wt);
            prop_assert!((wu - (1.0 + r_ut) * wt).abs() <= 1e-12 * wu.abs());
        }

        #[test]
        fn global_wealth_is_permutation_invariant(mut v in proptest::collection::vec(-1.0f64..40.0, 0..50)) {
            let a = global_net_wealth(&v);
            v.reverse();
            let b = global_net_wealth(&v);
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn lower_bound_attained_by_investor_among_untrustworthy() {
        let p = GameParams::new(6.0, 0.5).unwrap();
        assert_eq!(payoff(&p, counts(1, 0, 4), Strategy::I), -1.0);
        assert!(payoff(&p, counts(1, 1, 3), Strategy::I) > -1.0);
    }
}
