use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{offsets_at_distance, Network, NodeId};

/// Pearson correlation per lag; `None` where either windowed series is constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagCorrelation {
    pub lags: Vec<usize>,
    pub rho: Vec<Option<f64>>,
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// `rho(τ) = corr(a_t, b_{t+τ})` over the overlapping window, `τ = 0..=max_lag`.
pub fn lagged_pearson<T: Copy + Into<f64>>(a: &[T], b: &[T], max_lag: usize) -> Result<LagCorrelation> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "series lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < max_lag + 2 {
        return Err(Error::InsufficientData(format!(
            "series of length {} too short for lag {max_lag}",
            a.len()
        )));
    }
    let a: Vec<f64> = a.iter().map(|&x| x.into()).collect();
    let b: Vec<f64> = b.iter().map(|&x| x.into()).collect();
    let n = a.len();
    let rho = (0..=max_lag)
        .map(|lag| pearson(&a[..n - lag], &b[lag..]))
        .collect();
    Ok(LagCorrelation {
        lags: (0..=max_lag).collect(),
        rho,
    })
}

/// One uniformly chosen node at each lattice distance from `focal`.
pub fn select_probe_nodes<R: Rng + ?Sized>(
    net: &Network,
    focal: NodeId,
    distances: &[usize],
    rng: &mut R,
) -> Result<Vec<NodeId>> {
    let side = net.lattice_side()?;
    if focal >= net.node_count() {
        return Err(Error::invalid(format!("focal node {focal} out of range")));
    }
    distances
        .iter()
        .map(|&d| {
            // Distinct displacements reach distinct nodes, so this is uniform over nodes.
            let offsets = if d == 0 { Vec::new() } else { offsets_at_distance(side, d) };
            if offsets.is_empty() {
                return Err(Error::invalid(format!(
                    "no node at distance {d} on a {side}×{side} lattice"
                )));
            }
            let (dr, dc) = offsets[rng.random_range(0..offsets.len())];
            let (r, c) = (focal / side, focal % side);
            Ok(((r + dr) % side) * side + (c + dc) % side)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{run_stream, Domain};
    use crate::topology::{build_lattice, lattice_distance};
    use proptest::prelude::{prop_assert, proptest};

    #[test]
    fn identical_series() {
        let a: Vec<u8> = vec![1, 2, 3, 1, 1, 2, 3, 3, 2, 1];
        let c = lagged_pearson(&a, &a, 3).unwrap();
        assert!((c.rho[0].unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(c.lags, vec![0, 1, 2, 3]);
    }

    #[test]
    fn shifted_series_peaks_at_its_lag() {
        let mut rng = run_stream(1, Domain::Init);
        let base: Vec<f64> = (0..200).map(|_| rng.random_range(1..=3) as f64).collect();
        let a = base[3..].to_vec();
        let b = base[..197].to_vec();
        // b_{t+3} = base_{t+3} = a_t
        let c = lagged_pearson(&a, &b, 5).unwrap();
        assert!((c.rho[3].unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_window_is_undefined() {
        let a = [1.0, 2.0, 1.0, 2.0, 3.0];
        let b = [2.0; 5];
        let c = lagged_pearson(&a, &b, 2).unwrap();
        assert!(c.rho.iter().all(Option::is_none));
        // `a` varies overall but its lag-1 window a[..3] is constant.
        let a = [1.0, 1.0, 1.0, 2.0];
        let b = [1.0, 2.0, 3.0, 1.0];
        let c = lagged_pearson(&a, &b, 1).unwrap();
        assert!(c.rho[0].is_some());
        assert!(c.rho[1].is_none());
        let c = lagged_pearson(&b, &a, 1).unwrap();
        assert!(c.rho[1].is_some());
    }

    #[test]
    fn independent_series_are_weakly_correlated() {
        let mut rng = run_stream(2, Domain::Init);
        let n = 2500;
        let a: Vec<u8> = (0..n).map(|_| rng.random_range(1..=3)).collect();
        let b: Vec<u8> = (0..n).map(|_| rng.random_range(1..=3)).collect();
        let c = lagged_pearson(&a, &b, 20).unwrap();
        let bound = 3.0 / (n as f64).sqrt();
        let inside = c.rho.iter().filter(|r| r.unwrap().abs() < bound).count();
        assert!(inside >= 19, "{inside} of 21 lags inside ±{bound}");
    }

    #[test]
    fn length_checks() {
        assert!(lagged_pearson(&[1.0, 2.0], &[1.0], 0).is_err());
        assert!(lagged_pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 2).is_err());
        assert!(lagged_pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 1).is_ok());
    }

    #[test]
    fn probes_at_requested_distances() {
        let net = build_lattice(32).unwrap();
        let mut rng = run_stream(3, Domain::Probe);
        for focal in [0, 517, 1023] {
            let nodes = select_probe_nodes(&net, focal, &[2, 4, 6, 10], &mut rng).unwrap();
            assert_eq!(nodes.len(), 4);
            for (&d, &j) in [2, 4, 6, 10].iter().zip(&nodes) {
                assert_eq!(lattice_distance(&net, focal, j).unwrap(), d);
            }
            let n1 = select_probe_nodes(&net, focal, &[1], &mut rng).unwrap()[0];
            assert!(net.neighbors(focal).contains(&n1));
        }
    }

    #[test]
    fn unrealizable_probe_distance() {
        let net = build_lattice(4).unwrap();
        let mut rng = run_stream(3, Domain::Probe);
        assert!(select_probe_nodes(&net, 0, &[10], &mut rng).is_err());
        assert!(select_probe_nodes(&net, 0, &[0], &mut rng).is_err());
        assert!(select_probe_nodes(&net, 0, &[4], &mut rng).is_ok());
    }

    proptest! {
        #[test]
        fn rho_is_bounded_and_self_correlation_is_one(a in proptest::collection::vec(1u8..=3, 10..80), b in proptest::collection::vec(1u8..=3, 80)) {
            let b = &b[..a.len()];
            let c = lagged_pearson(&a, b, 5).unwrap();
            for r in c.rho.iter().flatten() {
                prop_assert!(r.abs() <= 1.0 + 1e-12);
            }
            if a.iter().any(|&x| x != a[0]) {
                let s = lagged_pearson(&a, &a, 0).unwrap();
                prop_assert!((s.rho[0].unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }
}
