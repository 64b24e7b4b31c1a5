//! Imitation rules mapping last step's payoffs and strategies to a node's next
//! strategy.
//!
//! Every rule is a pure function of the frozen previous state. Randomness is
//! drawn from the caller-supplied stream, which the engine derives per node and
//! per step.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameParams, Population, Strategy, Wealth};
use crate::topology::{Network, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    /// Unconditional imitation of the best neighbour.
    Ui,
    /// Unconditional imitation mixed with the voter model.
    UiVm,
    /// Local Moran process.
    Moran,
    /// Proportional imitation.
    Prop,
}

impl RuleKind {
    pub const ALL: [RuleKind; 4] = [RuleKind::Ui, RuleKind::UiVm, RuleKind::Moran, RuleKind::Prop];

    pub fn token(self) -> &'static str {
        match self {
            RuleKind::Ui => "ui",
            RuleKind::UiVm => "ui_vm",
            RuleKind::Moran => "moran",
            RuleKind::Prop => "prop",
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ui" => Ok(RuleKind::Ui),
            "ui_vm" => Ok(RuleKind::UiVm),
            "moran" => Ok(RuleKind::Moran),
            "prop" => Ok(RuleKind::Prop),
            other => Err(Error::invalid(format!(
                "unknown update rule `{other}` (expected ui | ui_vm | moran | prop)"
            ))),
        }
    }
}

/// Rule selection plus the voter-model probability `q` (only read by `UiVm`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateRule {
    pub kind: RuleKind,
    pub q: f64,
}

impl UpdateRule {
    pub const DEFAULT_Q: f64 = 0.1;

    pub fn new(kind: RuleKind, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::invalid(format!("q must lie in [0,1], got {q}")));
        }
        Ok(UpdateRule { kind, q })
    }

    pub fn of(kind: RuleKind) -> Self {
        UpdateRule {
            kind,
            q: Self::DEFAULT_Q,
        }
    }

    /// Next strategy of node `i`.
    #[inline]
    pub fn apply<R: Rng + ?Sized>(
        &self,
        i: NodeId,
        state: &Population,
        w: &Wealth,
        net: &Network,
        params: &GameParams,
        rng: &mut R,
    ) -> Strategy {
        match self.kind {
            RuleKind::Ui => ui_update(i, state, w, net, rng),
            RuleKind::UiVm => ui_vm_update(i, state, w, net, rng, self.q),
            RuleKind::Moran => moran_update(i, state, w, net, rng),
            RuleKind::Prop => prop_update(i, state, w, net, params, rng),
        }
    }
}

/// Copy the best-paid neighbour if it strictly beats node `i`. Ties among
/// co-maximal neighbours are broken uniformly; the stream is only read then.
pub fn ui_update<R: Rng + ?Sized>(
    i: NodeId,
    state: &Population,
    w: &Wealth,
    net: &Network,
    rng: &mut R,
) -> Strategy {
    let w = w.as_slice();
    let adj = net.neighbors(i);
    let mut best = f64::NEG_INFINITY;
    let mut ties = 0usize;
    for &j in adj {
        if w[j] > best {
            best = w[j];
            ties = 1;
        } else if w[j] == best {
            ties += 1;
        }
    }
    if best <= w[i] {
        return state.get(i);
    }
    let pick = if ties == 1 { 0 } else { rng.random_range(0..ties) };
    let j = adj
        .iter()
        .copied()
        .filter(|&j| w[j] == best)
        .nth(pick)
        .expect("tie index within range");
    state.get(j)
}

/// With probability `q` copy a uniformly random neighbour, otherwise apply UI.
pub fn ui_vm_update<R: Rng + ?Sized>(
    i: NodeId,
    state: &Population,
    w: &Wealth,
    net: &Network,
    rng: &mut R,
    q: f64,
) -> Strategy {
    let voter = if q <= 0.0 {
        false
    } else if q >= 1.0 {
        true
    } else {
        rng.random::<f64>() < q
    };
    let adj = net.neighbors(i);
    if voter && !adj.is_empty() {
        state.get(adj[rng.random_range(0..adj.len())])
    } else {
        ui_update(i, state, w, net, rng)
    }
}

/// Sample one member of the closed neighbourhood with probability proportional
/// to `w + 1` and adopt its strategy. Falls back to a uniform draw when every
/// weight is zero.
pub fn moran_update<R: Rng + ?Sized>(
    i: NodeId,
    state: &Population,
    w: &Wealth,
    net: &Network,
    rng: &mut R,
) -> Strategy {
    let w = w.as_slice();
    let adj = net.neighbors(i);
    let weight = |j: NodeId| (w[j] - GameParams::MIN_PAYOFF).max(0.0);
    let total = weight(i) + adj.iter().map(|&j| weight(j)).sum::<f64>();
    if total <= 0.0 {
        let pick = rng.random_range(0..=adj.len());
        return if pick == 0 { state.get(i) } else { state.get(adj[pick - 1]) };
    }
    let target = rng.random::<f64>() * total;
    let mut acc = weight(i);
    if target < acc {
        return state.get(i);
    }
    let mut last_positive = i;
    for &j in adj {
        let wj = weight(j);
        if wj > 0.0 {
            last_positive = j;
        }
        acc += wj;
        if target < acc {
            return state.get(j);
        }
    }
    // Rounding left `target` at the very top of the cumulative sum.
    state.get(last_positive)
}

/// Probability vector used by [`moran_update`] over `[i, neighbours...]`.
pub fn moran_probabilities(i: NodeId, w: &Wealth, net: &Network) -> Vec<f64> {
    let w = w.as_slice();
    let weights: Vec<f64> = std::iter::once(i)
        .chain(net.neighbors(i).iter().copied())
        .map(|j| (w[j] - GameParams::MIN_PAYOFF).max(0.0))
        .collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / weights.len() as f64; weights.len()]
    }
}

/// Pick one neighbour uniformly and copy it with probability
/// `(w_j - w_i) / phi` when it earned strictly more.
pub fn prop_update<R: Rng + ?Sized>(
    i: NodeId,
    state: &Population,
    w: &Wealth,
    net: &Network,
    params: &GameParams,
    rng: &mut R,
) -> Strategy {
    let adj = net.neighbors(i);
    if adj.is_empty() {
        return state.get(i);
    }
    let j = adj[rng.random_range(0..adj.len())];
    let (wi, wj) = (w.as_slice()[i], w.as_slice()[j]);
    if wj <= wi {
        return state.get(i);
    }
    let p = (wj - wi) / phi(params, net.degree(i), net.degree(j));
    if rng.random::<f64>() < p {
        state.get(j)
    } else {
        state.get(i)
    }
}

/// Largest payoff gap between nodes of degrees `k_i` and `k_j`.
pub fn phi(params: &GameParams, k_i: usize, k_j: usize) -> f64 {
    params.max_payoff(k_i.max(k_j)) - GameParams::MIN_PAYOFF
}
