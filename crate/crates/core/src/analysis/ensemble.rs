//! Reductions over the runs of an ensemble.

use super::correlation::{lagged_pearson, LagCorrelation};
use super::fractal::{mass_scaling, BoxAnchoring, MassScalingCurve};
use super::spatial::spatial_correlation_profile;
use super::spectral::{periodogram, Spectrum};
use crate::error::{Error, Result};
use crate::game::Strategy;
use crate::topology::Network;

fn non_empty<T>(xs: &[T], what: &str) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::InsufficientData(format!("no {what} to average")));
    }
    Ok(())
}

/// Point-wise mean of the per-snapshot mass-scaling curves.
pub fn ensemble_mass_scaling(
    snapshots: &[&[Strategy]],
    side: usize,
    target: Strategy,
    box_sides: &[usize],
    anchoring: BoxAnchoring,
) -> Result<MassScalingCurve> {
    non_empty(snapshots, "snapshots")?;
    let curves = snapshots
        .iter()
        .map(|s| mass_scaling(s, side, target, box_sides, anchoring))
        .collect::<Result<Vec<_>>>()?;
    MassScalingCurve::mean(&curves)
}

/// Mean `G(l)` over snapshots, for every realizable `l`.
pub fn ensemble_spatial_profile(snapshots: &[&[Strategy]], net: &Network) -> Result<Vec<(usize, f64)>> {
    non_empty(snapshots, "snapshots")?;
    let mut acc: Vec<(usize, f64)> = Vec::new();
    for s in snapshots {
        let profile = spatial_correlation_profile(s, net)?;
        if acc.is_empty() {
            acc = profile.iter().map(|&(l, _)| (l, 0.0)).collect();
        }
        for (a, (_, g)) in acc.iter_mut().zip(profile) {
            a.1 += g;
        }
    }
    let n = snapshots.len() as f64;
    acc.iter_mut().for_each(|a| a.1 /= n);
    Ok(acc)
}

/// Bin-wise mean of the periodograms of equal-length series.
pub fn ensemble_spectrum(series: &[&[f64]]) -> Result<Spectrum> {
    non_empty(series, "series")?;
    let spectra = series.iter().map(|s| periodogram(s)).collect::<Result<Vec<_>>>()?;
    Spectrum::mean(&spectra)
}

/// Lagged correlation of the focal series against each `(distance, probe)` series.
pub fn probe_correlations(
    focal: &[u8],
    probes: &[(usize, &[u8])],
    max_lag: usize,
) -> Result<Vec<(usize, LagCorrelation)>> {
    probes
        .iter()
        .map(|&(d, s)| Ok((d, lagged_pearson(focal, s, max_lag)?)))
        .collect()
}

/// Per-lag mean of `f(ρ)` over the correlations where `ρ` is defined.
pub fn mean_rho_by(corrs: &[&LagCorrelation], f: impl Fn(f64) -> f64) -> Vec<Option<f64>> {
    let lags = corrs.iter().map(|c| c.rho.len()).max().unwrap_or(0);
    (0..lags)
        .map(|k| {
            let vals: Vec<f64> = corrs.iter().filter_map(|c| c.rho.get(k).copied().flatten()).map(&f).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect()
}

/// Mean `|ρ|` pooled over every defined (correlation, lag) entry.
pub fn pooled_mean_abs_rho(corrs: &[&LagCorrelation]) -> Option<f64> {
    let vals: Vec<f64> = corrs.iter().flat_map(|c| c.rho.iter().flatten()).map(|r| r.abs()).collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::build_lattice;
    use Strategy::*;

    #[test]
    fn all_investor_exponent_is_two() {
        let snap = vec![I; 64];
        let curve = ensemble_mass_scaling(&[&snap, &snap], 8, I, &[1, 2, 3, 4], BoxAnchoring::TargetCentered).unwrap();
        assert!((curve.exponent().unwrap() - 2.0).abs() < 1e-12);
        let empty = ensemble_mass_scaling(&[&snap], 8, T, &[1, 2, 3, 4], BoxAnchoring::TargetCentered).unwrap();
        assert!(empty.exponent().is_err());
        assert!(ensemble_mass_scaling(&[], 8, I, &[1], BoxAnchoring::AllSites).is_err());
    }

    #[test]
    fn spatial_profile_mean() {
        let net = build_lattice(4).unwrap();
        let a = vec![T; 16];
        let b: Vec<Strategy> = (0..16).map(|i| if (i / 4 + i % 4) % 2 == 0 { I } else { U }).collect();
        let p = ensemble_spatial_profile(&[&a, &b], &net).unwrap();
        assert_eq!(p.len(), 4);
        // Checkerboard of codes 1 and 3: odd distances differ by 2, even ones match.
        assert_eq!(p[0], (1, 2.0));
        assert_eq!(p[1], (2, 0.0));
        assert_eq!(p[2], (3, 2.0));
    }

    #[test]
    fn rho_means_skip_undefined_entries() {
        let a = LagCorrelation { lags: vec![0, 1], rho: vec![Some(0.5), None] };
        let b = LagCorrelation { lags: vec![0, 1], rho: vec![Some(-0.25), None] };
        assert_eq!(mean_rho_by(&[&a, &b], |r| r), vec![Some(0.125), None]);
        assert_eq!(mean_rho_by(&[&a, &b], f64::abs), vec![Some(0.375), None]);
        assert_eq!(pooled_mean_abs_rho(&[&a, &b]), Some(0.375));
        let c = LagCorrelation { lags: vec![0], rho: vec![None] };
        assert_eq!(pooled_mean_abs_rho(&[&c]), None);
    }

    #[test]
    fn probe_correlations_keep_distances() {
        let f = [1u8, 2, 3, 1, 2, 3, 1, 2];
        let g = [3u8, 1, 2, 3, 1, 2, 3, 1];
        let out = probe_correlations(&f, &[(2, &f), (10, &g)], 2).unwrap();
        assert_eq!(out[0].0, 2);
        assert!((out[0].1.rho[0].unwrap() - 1.0).abs() < 1e-12);
        assert!((out[1].1.rho[1].unwrap() - 1.0).abs() < 1e-12);
    }
}
