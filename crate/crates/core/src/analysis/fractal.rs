//! Mass scaling of strategy clusters on the lattice: how many nodes of one
//! strategy fall inside `L × L` boxes as `L` grows, and the power-law exponent
//! of that growth.

use serde::{Deserialize, Serialize};

use super::fit::loglog;
use crate::error::{Error, Result};
use crate::game::Strategy;

/// Where the `L × L` boxes are placed before averaging.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxAnchoring {
    /// One box per lattice site, anchored at its top-left corner. The average
    /// is translation invariant and equals `density · L²` exactly.
    AllSites,
    /// One box per site holding the target strategy, with that site at the
    /// box centre (mass–radius estimator).
    #[default]
    TargetCentered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassScalingCurve {
    /// `(L, M(L))` pairs in the order requested.
    pub points: Vec<(usize, f64)>,
}

impl MassScalingCurve {
    /// Point-wise mean of curves sharing the same box sides.
    pub fn mean(curves: &[MassScalingCurve]) -> Result<MassScalingCurve> {
        let first = curves
            .first()
            .ok_or_else(|| Error::InsufficientData("no curves to average".into()))?;
        let mut points: Vec<(usize, f64)> = first.points.iter().map(|&(l, _)| (l, 0.0)).collect();
        for c in curves {
            if c.points.len() != points.len() || c.points.iter().zip(&points).any(|(a, b)| a.0 != b.0) {
                return Err(Error::invalid("curves use different box sides"));
            }
            for (acc, &(_, m)) in points.iter_mut().zip(&c.points) {
                acc.1 += m;
            }
        }
        let n = curves.len() as f64;
        for p in &mut points {
            p.1 /= n;
        }
        Ok(MassScalingCurve { points })
    }

    /// Power-law exponent `a` of `M(L) ∝ L^a`.
    pub fn exponent(&self) -> Result<f64> {
        fit_power_exponent(self.points.iter().map(|&(l, m)| (l as f64, m)))
    }
}

/// Toroidal summed-area table over a `side × side` 0/1 grid, stored on a
/// doubled grid so wrapped boxes need no special casing.
struct TorusSums {
    side: usize,
    sums: Vec<u32>,
}

impl TorusSums {
    fn new(side: usize, mask: impl Fn(usize) -> bool) -> Self {
        let w = 2 * side + 1;
        let mut sums = vec![0u32; w * w];
        for r in 0..2 * side {
            let mut row = 0u32;
            for c in 0..2 * side {
                row += mask((r % side) * side + c % side) as u32;
                sums[(r + 1) * w + c + 1] = sums[r * w + c + 1] + row;
            }
        }
        TorusSums { side, sums }
    }

    /// Count inside the `l × l` box whose top-left corner is `(r, c)`, `r, c < side`.
    #[inline]
    fn box_count(&self, r: usize, c: usize, l: usize) -> u32 {
        let w = 2 * self.side + 1;
        let (r1, c1) = (r + l, c + l);
        self.sums[r1 * w + c1] + self.sums[r * w + c] - self.sums[r * w + c1] - self.sums[r1 * w + c]
    }
}

/// Mean number of `target` nodes inside `L × L` boxes for each `L` in `box_sides`.
pub fn mass_scaling(
    snapshot: &[Strategy],
    side: usize,
    target: Strategy,
    box_sides: &[usize],
    anchoring: BoxAnchoring,
) -> Result<MassScalingCurve> {
    if snapshot.len() != side * side {
        return Err(Error::invalid(format!(
            "snapshot has {} nodes, expected {side}×{side}",
            snapshot.len()
        )));
    }
    if let Some(&bad) = box_sides.iter().find(|&&l| l == 0 || l > side) {
        return Err(Error::invalid(format!("box side {bad} outside 1..={side}")));
    }
    let sums = TorusSums::new(side, |i| snapshot[i] == target);
    let centers: Vec<usize> = match anchoring {
        BoxAnchoring::AllSites => Vec::new(),
        BoxAnchoring::TargetCentered => (0..snapshot.len()).filter(|&i| snapshot[i] == target).collect(),
    };
    let points = box_sides
        .iter()
        .map(|&l| {
            let total: u64 = match anchoring {
                BoxAnchoring::AllSites => (0..side)
                    .flat_map(|r| (0..side).map(move |c| (r, c)))
                    .map(|(r, c)| sums.box_count(r, c, l) as u64)
                    .sum(),
                BoxAnchoring::TargetCentered => {
                    let back = (l - 1) / 2;
                    centers
                        .iter()
                        .map(|&i| {
                            let r = (i / side + side - back) % side;
                            let c = (i % side + side - back) % side;
                            sums.box_count(r, c, l) as u64
                        })
                        .sum()
                }
            };
            let anchors = match anchoring {
                BoxAnchoring::AllSites => snapshot.len(),
                BoxAnchoring::TargetCentered => centers.len(),
            };
            let mean = if anchors == 0 { 0.0 } else { total as f64 / anchors as f64 };
            (l, mean)
        })
        .collect();
    Ok(MassScalingCurve { points })
}

/// Exponent `a` of `y = c · x^a`: slope of least squares on `(ln x, ln y)`.
/// Points with non-positive coordinates are dropped.
pub fn fit_power_exponent(points: impl IntoIterator<Item = (f64, f64)>) -> Result<f64> {
    Ok(loglog(points)?.slope)
}
