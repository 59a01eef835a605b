use serde::{Deserialize, Serialize};

use crate::data::bands::{Band, FlowBands};
use crate::error::{Error, Result};

fn check_pair(obs: &[f64], sim: &[f64]) -> Result<()> {
    if obs.len() != sim.len() {
        return Err(Error::Shape(format!(
            "observed has {} values, simulated {}",
            obs.len(),
            sim.len()
        )));
    }
    if obs.is_empty() {
        return Err(Error::Config("cannot score empty series".into()));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Root mean square error, in the units of the inputs.
pub fn rmse(obs: &[f64], sim: &[f64]) -> Result<f64> {
    check_pair(obs, sim)?;
    let mse = obs
        .iter()
        .zip(sim)
        .map(|(o, s)| (o - s) * (o - s))
        .sum::<f64>()
        / obs.len() as f64;
    Ok(mse.sqrt())
}

/// Pearson correlation coefficient; both series must vary.
pub fn pearson_r(obs: &[f64], sim: &[f64]) -> Result<f64> {
    check_pair(obs, sim)?;
    let (mo, ms) = (mean(obs), mean(sim));
    let mut cov = 0.0;
    let mut var_o = 0.0;
    let mut var_s = 0.0;
    for (o, s) in obs.iter().zip(sim) {
        cov += (o - mo) * (s - ms);
        var_o += (o - mo) * (o - mo);
        var_s += (s - ms) * (s - ms);
    }
    if var_o <= 0.0 || var_s <= 0.0 {
        return Err(Error::Numeric(
            "correlation of a constant series is undefined".into(),
        ));
    }
    Ok(cov / (var_o.sqrt() * var_s.sqrt()))
}

/// Nash-Sutcliffe efficiency: 1 - sum((obs-sim)^2) / sum((obs-mean(obs))^2).
/// 1 is a perfect model, 0 matches the mean benchmark.
pub fn nse(obs: &[f64], sim: &[f64]) -> Result<f64> {
    check_pair(obs, sim)?;
    if obs.len() < 2 {
        return Err(Error::Config("NSE needs at least two values".into()));
    }
    let mo = mean(obs);
    let sq_err: f64 = obs.iter().zip(sim).map(|(o, s)| (o - s) * (o - s)).sum();
    let sq_dev: f64 = obs.iter().map(|o| (o - mo) * (o - mo)).sum();
    if sq_dev <= 0.0 {
        return Err(Error::Numeric(
            "NSE denominator vanishes: observed series is constant".into(),
        ));
    }
    Ok(1.0 - sq_err / sq_dev)
}

/// RMSE restricted to the timesteps whose OBSERVED flow falls in each band.
/// A band with no observed members in the period is `None`, never zero. Peak
/// overlaps high: it is the subset at or above the 95th percentile.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BandRmse {
    pub low: Option<f64>,
    pub middle: Option<f64>,
    pub high: Option<f64>,
    pub peak: Option<f64>,
}

pub fn band_rmse(obs: &[f64], sim: &[f64], bands: &FlowBands) -> Result<BandRmse> {
    check_pair(obs, sim)?;
    let mut sums = [0.0f64; 4]; // low, middle, high, peak
    let mut counts = [0usize; 4];
    for (o, s) in obs.iter().zip(sim) {
        let d2 = (o - s) * (o - s);
        let slot = match bands.band_of(*o) {
            Band::Low => 0,
            Band::Middle => 1,
            Band::High => 2,
        };
        sums[slot] += d2;
        counts[slot] += 1;
        if bands.is_peak(*o) {
            sums[3] += d2;
            counts[3] += 1;
        }
    }
    let score = |i: usize| {
        if counts[i] == 0 {
            None
        } else {
            Some((sums[i] / counts[i] as f64).sqrt())
        }
    };
    Ok(BandRmse {
        low: score(0),
        middle: score(1),
        high: score(2),
        peak: score(3),
    })
}

/// Empirical median; even counts take the midpoint of the central pair.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite metric values"));
    let n = sorted.len();
    if n % 2 == 1 {
        Some(sorted[n / 2])
    } else {
        Some((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0)
    }
}

/// Pearson r between `flow(t)` and `driver(t - lag)` for lag = 0..=max_lag.
/// A lag whose overlapping segment is constant is reported as `None`.
pub fn lag_correlation(flow: &[f64], driver: &[f64], max_lag: usize) -> Result<Vec<Option<f64>>> {
    if flow.len() != driver.len() {
        return Err(Error::Shape(format!(
            "flow has {} values, driver {}",
            flow.len(),
            driver.len()
        )));
    }
    if flow.len() <= max_lag + 1 {
        return Err(Error::Config(format!(
            "series of {} values cannot support lags up to {max_lag}",
            flow.len()
        )));
    }
    let mut curve = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let n = flow.len() - lag;
        curve.push(pearson_r(&flow[lag..], &driver[..n]).ok());
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn gauged_bands() -> FlowBands {
        FlowBands::new(257.8, 598.3, 1293.4).unwrap()
    }

    #[test]
    fn perfect_model_scores_nse_one_rmse_zero() {
        let obs = [1.0, 5.0, 2.0, 8.0];
        assert_eq!(nse(&obs, &obs).unwrap(), 1.0);
        assert_eq!(rmse(&obs, &obs).unwrap(), 0.0);
    }

    #[test]
    fn mean_benchmark_scores_nse_zero() {
        let obs = [1.0, 2.0, 3.0, 6.0];
        let m = obs.iter().sum::<f64>() / 4.0;
        let sim = [m; 4];
        assert!(nse(&obs, &sim).unwrap().abs() < 1e-15);
    }

    #[test]
    fn worked_nse_example() {
        // sq_err = 1, sq_dev = 2 -> 1 - 1/2.
        assert!((nse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn worked_rmse_example() {
        let v = rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((v - 12.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn affine_simulation_has_unit_correlation() {
        let obs = [1.0, 4.0, 2.0, 9.0, 5.0];
        let sim: Vec<f64> = obs.iter().map(|o| 2.0 * o + 1.0).collect();
        assert!((pearson_r(&obs, &sim).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_is_invariant_under_positive_affine_maps() {
        let mut rng = Rng::new(4);
        let obs: Vec<f64> = (0..200).map(|_| rng.normal()).collect();
        let sim: Vec<f64> = (0..200).map(|_| rng.normal()).collect();
        let base = pearson_r(&obs, &sim).unwrap();
        let obs2: Vec<f64> = obs.iter().map(|v| 3.7 * v - 11.0).collect();
        let sim2: Vec<f64> = sim.iter().map(|v| 0.02 * v + 4.0).collect();
        assert!((pearson_r(&obs2, &sim2).unwrap() - base).abs() < 1e-10);
    }

    #[test]
    fn constant_series_are_rejected() {
        assert!(pearson_r(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(pearson_r(&[1.0, 2.0], &[5.0, 5.0]).is_err());
        assert!(nse(&[3.0, 3.0], &[1.0, 2.0]).is_err());
        assert!(nse(&[3.0], &[1.0]).is_err());
    }

    #[test]
    fn nse_rmse_identity_on_random_vectors() {
        let mut rng = Rng::new(8);
        for _ in 0..50 {
            let n = 2 + rng.index(100);
            let obs: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 100.0)).collect();
            let sim: Vec<f64> = (0..n).map(|_| rng.uniform(0.0, 100.0)).collect();
            let m = obs.iter().sum::<f64>() / n as f64;
            let sq_dev: f64 = obs.iter().map(|o| (o - m) * (o - m)).sum();
            if sq_dev == 0.0 {
                continue;
            }
            let lhs = nse(&obs, &sim).unwrap();
            let r = rmse(&obs, &sim).unwrap();
            let rhs = 1.0 - r * r * n as f64 / sq_dev;
            assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn low_flows_only_leave_other_bands_absent() {
        let obs = [10.0, 50.0, 200.0];
        let out = band_rmse(&obs, &obs, &gauged_bands()).unwrap();
        assert_eq!(out.low, Some(0.0));
        assert_eq!(out.middle, None);
        assert_eq!(out.high, None);
        assert_eq!(out.peak, None);
    }

    #[test]
    fn worked_band_restriction_example() {
        let out = band_rmse(&[100.0, 2000.0], &[100.0, 1000.0], &gauged_bands()).unwrap();
        assert_eq!(out.low, Some(0.0));
        assert_eq!(out.middle, None);
        assert_eq!(out.high, Some(1000.0));
        assert_eq!(out.peak, Some(1000.0));
    }

    #[test]
    fn band_membership_follows_observations_not_simulations() {
        // The simulated value sits far in the peak range, but the observation
        // is low flow, so the error lands in the low band alone.
        let out = band_rmse(&[100.0], &[5000.0], &gauged_bands()).unwrap();
        assert_eq!(out.low, Some(4900.0));
        assert_eq!(out.high, None);
        assert_eq!(out.peak, None);
    }

    #[test]
    fn bands_recombine_to_the_total_rmse() {
        let mut rng = Rng::new(12);
        let obs: Vec<f64> = (0..4000).map(|_| rng.uniform(0.0, 2500.0)).collect();
        let sim: Vec<f64> = obs.iter().map(|o| o + rng.normal() * 50.0).collect();
        let bands = FlowBands::fit(&obs).unwrap();
        let by_band = band_rmse(&obs, &sim, &bands).unwrap();
        let total = rmse(&obs, &sim).unwrap();
        let count = |pred: &dyn Fn(f64) -> bool| obs.iter().filter(|&&o| pred(o)).count() as f64;
        let n_low = count(&|o| bands.band_of(o) == Band::Low);
        let n_mid = count(&|o| bands.band_of(o) == Band::Middle);
        let n_high = count(&|o| bands.band_of(o) == Band::High);
        let recombined = (n_low * by_band.low.unwrap().powi(2)
            + n_mid * by_band.middle.unwrap().powi(2)
            + n_high * by_band.high.unwrap().powi(2))
            / obs.len() as f64;
        let rel = (recombined - total * total).abs() / (total * total);
        assert!(rel < 1e-8, "relative gap {rel}");
    }

    #[test]
    fn median_conventions() {
        assert_eq!(median(&[0.7]), Some(0.7));
        assert_eq!(median(&[0.1, 0.5, 0.9]), Some(0.5));
        assert_eq!(median(&[0.4, 0.2]), Some(0.30000000000000004));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn shifted_driver_peaks_at_its_lag() {
        let mut rng = Rng::new(21);
        let driver: Vec<f64> = (0..500).map(|_| rng.normal()).collect();
        // flow(t) = driver(t-3)
        let flow: Vec<f64> = (0..500)
            .map(|t| if t >= 3 { driver[t - 3] } else { 0.0 })
            .collect();
        let curve = lag_correlation(&flow, &driver, 6).unwrap();
        let argmax = curve
            .iter()
            .enumerate()
            .max_by(|a, b| {
                a.1.unwrap_or(f64::MIN)
                    .partial_cmp(&b.1.unwrap_or(f64::MIN))
                    .unwrap()
            })
            .unwrap()
            .0;
        assert_eq!(argmax, 3);
        assert!((curve[3].unwrap() - 1.0).abs() < 5e-2);
    }

    #[test]
    fn white_noise_has_no_lagged_correlation() {
        let mut rng = Rng::new(33);
        let flow: Vec<f64> = (0..10_000).map(|_| rng.normal()).collect();
        let driver: Vec<f64> = (0..10_000).map(|_| rng.normal()).collect();
        let curve = lag_correlation(&flow, &driver, 20).unwrap();
        for (lag, r) in curve.iter().enumerate() {
            assert!(r.unwrap().abs() < 0.1, "lag {lag}: {r:?}");
        }
    }

    #[test]
    fn zero_lag_equals_plain_pearson() {
        let mut rng = Rng::new(44);
        let a: Vec<f64> = (0..100).map(|_| rng.normal()).collect();
        let b: Vec<f64> = a.iter().map(|v| v + 0.3 * rng.normal()).collect();
        let curve = lag_correlation(&a, &b, 5).unwrap();
        assert_eq!(curve[0].unwrap(), pearson_r(&a, &b).unwrap());
    }

    #[test]
    fn lag_longer_than_series_is_rejected() {
        assert!(lag_correlation(&[1.0, 2.0], &[1.0, 2.0], 5).is_err());
    }
}
