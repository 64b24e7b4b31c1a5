use crate::error::{Error, Result};
use crate::game::Strategy;
use crate::topology::{pairs_at_distance, Network};

/// Mean squared difference of strategy codes over all unordered pairs at
/// lattice distance `l`.
pub fn spatial_correlation(snapshot: &[Strategy], l: usize, net: &Network) -> Result<f64> {
    if snapshot.len() != net.node_count() {
        return Err(Error::invalid(format!(
            "snapshot has {} nodes, network has {}",
            snapshot.len(),
            net.node_count()
        )));
    }
    let pairs = pairs_at_distance(net, l)?;
    let n = pairs.pair_count();
    if n == 0 {
        return Err(Error::InsufficientData(format!("no node pairs at distance {l}")));
    }
    let sum: u64 = pairs
        .map(|(i, j)| {
            let d = snapshot[i].code() as i64 - snapshot[j].code() as i64;
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / n as f64)
}

/// `G(l)` for every `l` from 1 to the largest realizable distance.
pub fn spatial_correlation_profile(snapshot: &[Strategy], net: &Network) -> Result<Vec<(usize, f64)>> {
    let side = net.lattice_side()?;
    (1..=crate::topology::max_lattice_distance(side))
        .map(|l| Ok((l, spatial_correlation(snapshot, l, net)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{run_stream, Domain};
    use crate::topology::build_lattice;
    use rand::Rng;
    use Strategy::*;

    #[test]
    fn monomorphic_lattice_has_zero_g() {
        let net = build_lattice(8).unwrap();
        let snap = vec![T; 64];
        for (_, g) in spatial_correlation_profile(&snap, &net).unwrap() {
            assert_eq!(g, 0.0);
        }
    }

    #[test]
    fn checkerboard_at_distance_one() {
        let net = build_lattice(8).unwrap();
        let snap: Vec<_> = (0..64).map(|i| if (i / 8 + i % 8) % 2 == 0 { I } else { U }).collect();
        assert_eq!(spatial_correlation(&snap, 1, &net).unwrap(), 4.0);
        assert_eq!(spatial_correlation(&snap, 2, &net).unwrap(), 0.0);
    }

    #[test]
    fn four_by_four_fixture_matches_hand_enumeration() {
        // Row-major 4x4 fixture:
        //   I I T U
        //   I T T U
        //   U U I T
        //   T I U I
        let net = build_lattice(4).unwrap();
        let snap = vec![I, I, T, U, I, T, T, U, U, U, I, T, T, I, U, I];
        // Every pair listed explicitly with its squared code difference.
        let hand: Vec<(usize, f64)> = (1..=4)
            .map(|l| {
                let mut sum = 0.0;
                let mut n = 0;
                for a in 0..16usize {
                    for b in (a + 1)..16usize {
                        let dr = (a / 4).abs_diff(b / 4);
                        let dc = (a % 4).abs_diff(b % 4);
                        if dr.min(4 - dr) + dc.min(4 - dc) == l {
                            let d = snap[a].code() as f64 - snap[b].code() as f64;
                            sum += d * d;
                            n += 1;
                        }
                    }
                }
                (l, sum / n as f64)
            })
            .collect();
        let got = spatial_correlation_profile(&snap, &net).unwrap();
        assert_eq!(got, hand);
        // Pair counts on a 4x4 torus: 32, 48, 32, 8 at distances 1..=4.
        let counts: Vec<usize> = (1..=4).map(|l| pairs_at_distance(&net, l).unwrap().pair_count()).collect();
        assert_eq!(counts, vec![32, 48, 32, 8]);
        // Frozen sums of squared differences: 52/32, 72/48, 40/32, 11/8.
        let frozen = [52.0 / 32.0, 72.0 / 48.0, 40.0 / 32.0, 11.0 / 8.0];
        for ((_, g), want) in got.iter().zip(frozen) {
            assert_eq!(*g, want);
        }
    }

    #[test]
    fn independent_uniform_strategies_give_four_thirds() {
        let side = 64;
        let net = build_lattice(side).unwrap();
        let mut rng = run_stream(17, Domain::Init);
        let snap: Vec<_> = (0..side * side).map(|_| Strategy::ALL[rng.random_range(0..3)]).collect();
        // Over the 9 ordered code pairs, (1/9)·Σ(a−b)² = 12/9; per-pair variance is
        // E[d⁴] − (4/3)² = (36/9) − 16/9 = 20/9.
        let expected = 12.0 / 9.0;
        for l in [1, 5, 20] {
            let n = pairs_at_distance(&net, l).unwrap().pair_count() as f64;
            // Pairs overlap, so widen by the number of pairs sharing a node (≤ 4l).
            let sigma = (20.0 / 9.0 * 4.0 * l as f64 / n).sqrt();
            let g = spatial_correlation(&snap, l, &net).unwrap();
            assert!((g - expected).abs() < 3.0 * sigma, "l={l} G={g}");
        }
    }

    #[test]
    fn errors() {
        let net = build_lattice(4).unwrap();
        let snap = vec![I; 16];
        assert!(matches!(spatial_correlation(&snap, 5, &net), Err(Error::InsufficientData(_))));
        assert!(spatial_correlation(&snap, 0, &net).is_err());
        assert!(spatial_correlation(&snap[..3], 1, &net).is_err());
    }

    #[test]
    fn g_is_zero_iff_pairs_agree() {
        let net = build_lattice(6).unwrap();
        let mut rng = run_stream(2, Domain::Init);
        for _ in 0..50 {
            let snap: Vec<_> = (0..36).map(|_| if rng.random::<f64>() < 0.9 { I } else { T }).collect();
            for l in 1..=6 {
                let g = spatial_correlation(&snap, l, &net).unwrap();
                let agree = pairs_at_distance(&net, l).unwrap().all(|(a, b)| snap[a] == snap[b]);
                assert!(g >= 0.0);
                assert_eq!(g == 0.0, agree);
            }
        }
    }
}
