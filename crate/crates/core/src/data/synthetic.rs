use std::f64::consts::TAU;

use chrono::{Datelike, NaiveDate};
use ndarray::Array2;

use crate::data::series::SeriesTable;
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// Configuration of the synthetic snow-dominated watershed.
///
/// The generator produces hourly meteorology (intermittent precipitation over
/// several sub-regions, seasonal air temperature, evapotranspiration, long-
/// and short-wave radiation) and routes the basin-average precipitation
/// through a degree-day snowpack and a fast/slow pair of linear reservoirs.
/// Cold-season precipitation accumulates as snow and reappears as melt months
/// later, which is what gives the flow its long-duration dependence on past
/// forcing.
#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    /// Whole calendar years starting January 1 of `start_year`.
    pub years: u32,
    pub start_year: i32,
    pub seed: u64,
    /// Precipitation sub-regions; each becomes one input variable.
    pub n_precip_regions: usize,

    /// P(wet hour | previous hour wet).
    pub p_wet_to_wet: f64,
    /// P(wet hour | previous hour dry).
    pub p_dry_to_wet: f64,
    /// Basin-average rainfall intensity during a wet hour, mm/h.
    pub mean_wet_intensity: f64,
    /// Seasonal modulation of storm intensity (0 = none).
    pub intensity_seasonality: f64,

    /// Annual-mean air temperature, degrees C.
    pub temp_mean: f64,
    /// Amplitude of the annual temperature cycle.
    pub temp_annual_amp: f64,
    /// Amplitude of the diurnal temperature cycle.
    pub temp_daily_amp: f64,
    /// AR(1) coefficient of the temperature noise, in [0, 1).
    pub temp_noise_rho: f64,
    /// Standard deviation of the hourly temperature innovation.
    pub temp_noise_std: f64,

    /// Degree-day melt factor, mm per degree C per hour.
    pub melt_factor: f64,
    /// Peak potential evapotranspiration, mm/h.
    pub et_scale: f64,

    /// Fraction of each reservoir drained per hour.
    pub fast_k: f64,
    pub slow_k: f64,
    /// Share of effective water routed to the fast reservoir.
    pub fast_fraction: f64,
    /// Initial reservoir storages, mm of water over the basin.
    pub initial_fast_storage: f64,
    pub initial_slow_storage: f64,
    /// Basin area for converting mm/h of drainage into m3/s.
    pub area_km2: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            years: 13,
            start_year: 2007,
            seed: 2007,
            n_precip_regions: 2,
            p_wet_to_wet: 0.82,
            p_dry_to_wet: 0.055,
            mean_wet_intensity: 1.1,
            intensity_seasonality: 0.35,
            temp_mean: 7.0,
            temp_annual_amp: 14.0,
            temp_daily_amp: 4.0,
            temp_noise_rho: 0.95,
            temp_noise_std: 0.45,
            melt_factor: 0.13,
            et_scale: 0.07,
            fast_k: 0.035,
            slow_k: 0.0028,
            fast_fraction: 0.55,
            initial_fast_storage: 2.0,
            initial_slow_storage: 80.0,
            area_km2: 14_330.0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("synthetic config: {msg}")))
            }
        };
        check(self.years >= 1, "years must be at least 1")?;
        check(
            self.n_precip_regions >= 1,
            "need at least one precipitation region",
        )?;
        check(
            (0.0..=1.0).contains(&self.p_wet_to_wet) && (0.0..=1.0).contains(&self.p_dry_to_wet),
            "wet/dry transition probabilities must lie in [0, 1]",
        )?;
        check(
            self.mean_wet_intensity > 0.0,
            "mean wet intensity must be positive",
        )?;
        check(
            (0.0..1.0).contains(&self.intensity_seasonality),
            "intensity seasonality must lie in [0, 1)",
        )?;
        check(
            (0.0..1.0).contains(&self.temp_noise_rho),
            "temperature AR(1) coefficient must lie in [0, 1)",
        )?;
        check(
            self.temp_noise_std >= 0.0,
            "temperature noise std must be nonnegative",
        )?;
        check(
            self.temp_annual_amp >= 0.0,
            "annual temperature amplitude must be nonnegative",
        )?;
        check(
            self.temp_daily_amp >= 0.0,
            "daily temperature amplitude must be nonnegative",
        )?;
        check(self.melt_factor >= 0.0, "melt factor must be nonnegative")?;
        check(
            self.et_scale >= 0.0,
            "evapotranspiration scale must be nonnegative",
        )?;
        check(
            self.fast_k > 0.0 && self.fast_k <= 1.0 && self.slow_k > 0.0 && self.slow_k <= 1.0,
            "reservoir drain rates must lie in (0, 1]",
        )?;
        check(
            (0.0..=1.0).contains(&self.fast_fraction),
            "fast-reservoir fraction must lie in [0, 1]",
        )?;
        check(
            self.initial_fast_storage >= 0.0 && self.initial_slow_storage >= 0.0,
            "initial storages must be nonnegative",
        )?;
        check(self.area_km2 > 0.0, "basin area must be positive")?;
        Ok(())
    }

    pub fn n_hours(&self) -> usize {
        let start = NaiveDate::from_ymd_opt(self.start_year, 1, 1).expect("valid start year");
        let end = NaiveDate::from_ymd_opt(self.start_year + self.years as i32, 1, 1)
            .expect("valid end year");
        (end - start).num_hours() as usize
    }

    /// Input variable names in row order.
    pub fn variable_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.n_precip_regions)
            .map(|r| format!("precip_r{r}"))
            .collect();
        names.extend(["temp", "evapo", "sw_rad", "lw_rad"].map(String::from));
        names
    }
}

/// Water accounting over the whole generated record, all in mm over the basin.
/// Everything that entered either left as flow or evapotranspiration or is
/// still sitting in a store, so
/// `precip + initial storage = flow + et + final storage` up to rounding.
#[derive(Clone, Copy, Debug)]
pub struct MassBalance {
    pub precip_mm: f64,
    pub et_mm: f64,
    pub flow_mm: f64,
    pub initial_storage_mm: f64,
    pub final_storage_mm: f64,
}

impl MassBalance {
    /// Relative closure error of the balance equation.
    pub fn closure_error(&self) -> f64 {
        let in_side = self.precip_mm + self.initial_storage_mm;
        let out_side = self.flow_mm + self.et_mm + self.final_storage_mm;
        (in_side - out_side).abs() / in_side.abs().max(1.0)
    }
}

pub fn generate_synthetic(config: &SyntheticConfig) -> Result<SeriesTable> {
    generate_with_balance(config).map(|(table, _)| table)
}

pub fn generate_with_balance(config: &SyntheticConfig) -> Result<(SeriesTable, MassBalance)> {
    config.validate()?;
    let n_hours = config.n_hours();
    let n_regions = config.n_precip_regions;
    let names = config.variable_names();
    let n_rows = names.len() + 1;
    let mut values = Array2::zeros((n_rows, n_hours));
    let temp_row = n_regions;
    let evapo_row = n_regions + 1;
    let sw_row = n_regions + 2;
    let lw_row = n_regions + 3;
    let flow_row = n_regions + 4;

    let mut rng = Rng::new(config.seed);
    let start = NaiveDate::from_ymd_opt(config.start_year, 1, 1).expect("valid start year");

    let mut wet = false;
    let mut temp_noise = 0.0;
    let mut snowpack = 0.0_f64;
    let mut fast = config.initial_fast_storage;
    let mut slow = config.initial_slow_storage;

    let mut precip_sum = 0.0;
    let mut et_sum = 0.0;
    let mut flow_mm_sum = 0.0;

    // mm/h over area_km2 -> m3/s: 1 mm/h * 1 km2 = 1e-3 m * 1e6 m2 / 3600 s.
    let mm_per_h_to_m3s = config.area_km2 / 3.6;

    for t in 0..n_hours {
        let date = start + chrono::Duration::days(t as i64 / 24);
        let hour = (t % 24) as f64;
        let days_in_year = if date.leap_year() { 366.0 } else { 365.0 };
        // Phase 0 at new year; coldest weather arrives mid-January.
        let season = (date.ordinal0() as f64 + hour / 24.0) / days_in_year;

        // Air temperature: annual + diurnal cycles plus persistent AR(1) noise.
        temp_noise = config.temp_noise_rho * temp_noise + config.temp_noise_std * rng.normal();
        let temp = config.temp_mean
            - config.temp_annual_amp * (TAU * (season - 0.04)).cos()
            - config.temp_daily_amp * (TAU * (hour - 14.0) / 24.0).cos()
            + temp_noise;

        // Precipitation: shared wet/dry storm state, per-region intensities.
        let p_wet = if wet {
            config.p_wet_to_wet
        } else {
            config.p_dry_to_wet
        };
        wet = rng.next_f64() < p_wet;
        let mut basin_precip = 0.0;
        if wet {
            // Exponential intensity, seasonally modulated (wetter late summer).
            let seasonal = 1.0 + config.intensity_seasonality * (TAU * (season - 0.65)).cos();
            let base = -config.mean_wet_intensity * seasonal * (1.0 - rng.next_f64()).ln();
            for r in 0..n_regions {
                let regional = base * rng.uniform(0.6, 1.4);
                values[[r, t]] = regional;
                basin_precip += regional;
            }
            basin_precip /= n_regions as f64;
        }
        precip_sum += basin_precip;

        // Radiation: shortwave needs daylight, longwave tracks temperature.
        let daylight = (TAU * (hour - 12.0) / 24.0).cos().max(0.0);
        let sw = (150.0 - 130.0 * (TAU * season).cos()) * daylight * rng.uniform(0.7, 1.0);
        let lw = 240.0 + 4.0 * temp + 6.0 * rng.normal();

        // Degree-day snowpack: accumulate below freezing, melt above.
        let (rain, melt);
        if temp < 0.0 {
            snowpack += basin_precip;
            rain = 0.0;
            melt = 0.0;
        } else {
            rain = basin_precip;
            melt = snowpack.min(config.melt_factor * temp);
            snowpack -= melt;
        }
        let effective = rain + melt;

        // Potential ET: seasonal envelope, warm hours only.
        let pot_et = config.et_scale * (temp / 25.0).clamp(0.0, 1.0) * daylight;

        // Linear reservoirs: inflow, ET extraction from the slow store, drain.
        fast += config.fast_fraction * effective;
        slow += (1.0 - config.fast_fraction) * effective;
        let et = pot_et.min(slow);
        slow -= et;
        et_sum += et;
        let out_fast = config.fast_k * fast;
        fast -= out_fast;
        let out_slow = config.slow_k * slow;
        slow -= out_slow;
        let q_mm = out_fast + out_slow;
        flow_mm_sum += q_mm;

        values[[temp_row, t]] = temp;
        values[[evapo_row, t]] = pot_et;
        values[[sw_row, t]] = sw;
        values[[lw_row, t]] = lw;
        values[[flow_row, t]] = q_mm * mm_per_h_to_m3s;
    }

    let balance = MassBalance {
        precip_mm: precip_sum,
        et_mm: et_sum,
        flow_mm: flow_mm_sum,
        initial_storage_mm: config.initial_fast_storage + config.initial_slow_storage,
        final_storage_mm: snowpack + fast + slow,
    };
    let table = SeriesTable::new(start.and_hms_opt(0, 0, 0).unwrap(), names, values)?;
    Ok((table, balance))
}
