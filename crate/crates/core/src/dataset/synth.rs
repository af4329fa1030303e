//! Synthetic stand-in for metered building load data.
//!
//! Buildings belong to one of four archetypes with imbalanced frequencies and
//! very different load levels. Each building gets an image histogram whose
//! shape reveals its archetype and size, each region a smooth weather history,
//! and each (building, time) pair a 24 h load profile that depends on all three
//! feature groups. `shift_strength` scales every building- and season-specific
//! effect, so at zero all buildings share one profile.

use std::f64::consts::PI;

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{
    Building, Dataset, LabeledPoint, Schema, TimePoint, HISTOGRAM_BINS, IMAGE_CHANNELS, WEATHER_CHANNELS,
    WEATHER_HOURS,
};
use crate::seed::{self, Rng};
use crate::{Error, Result};

/// Pixels per histogram channel.
pub const HISTOGRAM_PIXELS: u32 = 10_000;

pub const ARCHETYPES: usize = 4;
const SLOTS_PER_YEAR: u32 = 365 * 96;

// residential, commercial, industrial, mixed
const ARCHETYPE_WEIGHTS: [f64; ARCHETYPES] = [0.45, 0.25, 0.18, 0.12];
const ARCHETYPE_LEVEL: [f64; ARCHETYPES] = [1.0, 1.8, 4.0, 2.5];
const SEASON_SENSITIVITY: [f64; ARCHETYPES] = [0.3, 0.15, 0.05, 0.2];
const HEATING_SENSITIVITY: [f64; ARCHETYPES] = [0.4, 0.2, 0.05, 0.3];
const COOLING_SENSITIVITY: [f64; ARCHETYPES] = [0.1, 0.4, 0.1, 0.2];
const ROOF_BIN: [[f64; IMAGE_CHANNELS]; ARCHETYPES] = [
    [30.0, 35.0, 40.0],
    [55.0, 55.0, 60.0],
    [70.0, 72.0, 75.0],
    [45.0, 50.0, 38.0],
];
const GROUND_BIN: [f64; IMAGE_CHANNELS] = [25.0, 45.0, 20.0];
const TEMPERATURE_CHANNEL: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_buildings: usize,
    pub n_timestamps: usize,
    pub noise_scale: f64,
    pub shift_strength: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_buildings: 40,
            n_timestamps: 200,
            noise_scale: 0.05,
            shift_strength: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_buildings < 2 {
            return Err(Error::invalid("n_buildings must be >= 2"));
        }
        if self.n_timestamps < 2 {
            return Err(Error::invalid("n_timestamps must be >= 2"));
        }
        if self.n_timestamps > SLOTS_PER_YEAR as usize {
            return Err(Error::invalid(format!("n_timestamps must be <= {SLOTS_PER_YEAR}")));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::invalid("noise_scale must be finite and >= 0"));
        }
        if !(self.shift_strength >= 0.0 && self.shift_strength.is_finite()) {
            return Err(Error::invalid("shift_strength must be finite and >= 0"));
        }
        Ok(())
    }
}

fn standard_normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

struct BuildingTraits {
    archetype: usize,
    size: f64,
}

struct Region {
    temp_offset: f64,
    phases: [f64; 6],
}

impl Region {
    fn sample(rng: &mut Rng) -> Self {
        let mut phases = [0.0; 6];
        for p in &mut phases {
            *p = rng.gen_range(0.0..2.0 * PI);
        }
        Region {
            temp_offset: rng.gen_range(-3.0..3.0),
            phases,
        }
    }

    /// Nine meteorological values at `h` hours since the start of the year.
    fn weather(&self, h: f64) -> [f64; WEATHER_CHANNELS] {
        let doy = (h / 24.0).rem_euclid(365.0);
        let hod = h.rem_euclid(24.0);
        let wave = |period_days: f64, phase: f64| (2.0 * PI * h / (24.0 * period_days) + phase).sin();

        let temperature = 9.0 - 9.0 * (2.0 * PI * (doy - 20.0) / 365.0).cos()
            + 4.0 * (2.0 * PI * (hod - 9.0) / 24.0).sin()
            + self.temp_offset
            + 3.0 * wave(4.3, self.phases[0])
            + 1.5 * wave(1.7, self.phases[1]);
        let day_length = 12.0 - 3.5 * (2.0 * PI * (doy + 10.0) / 365.0).cos();
        let sunrise = 12.5 - day_length / 2.0;
        let toa = if hod > sunrise && hod < sunrise + day_length {
            1000.0 * (PI * (hod - sunrise) / day_length).sin()
        } else {
            0.0
        };
        let cloud = (0.5 + 0.3 * wave(3.1, self.phases[2]) + 0.1 * wave(0.9, self.phases[3])).clamp(0.0, 1.0);
        let ground = toa * (1.0 - 0.75 * cloud);
        let precipitation = (2.0 * (cloud - 0.6)).max(0.0) * (1.0 + 0.5 * wave(0.6, self.phases[4]));
        let snowfall = if temperature < 1.0 { precipitation } else { 0.0 };
        let snow_mass = 30.0 * (1.0 - (temperature + 2.0) / 6.0).max(0.0);
        let air_density = 1.225 * 288.15 / (273.15 + temperature);
        let wind = (3.0 + 2.0 * wave(2.3, self.phases[5]) + (2.0 * PI * hod / 24.0).cos()).max(0.0);
        [
            air_density,
            cloud,
            precipitation,
            ground,
            toa,
            temperature,
            snowfall,
            snow_mass,
            wind,
        ]
    }
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn gaussian_bump(h: f64, centre: f64, width: f64) -> f64 {
    (-(h - centre).powi(2) / (2.0 * width * width)).exp()
}

fn common_profile(hod: f64) -> f64 {
    1.0 + 0.3 * (2.0 * PI * (hod - 10.0) / 24.0).sin()
}

fn archetype_profile(archetype: usize, hod: f64) -> f64 {
    let residential = 0.6 + 0.5 * gaussian_bump(hod, 7.5, 1.0) + 0.9 * gaussian_bump(hod, 19.0, 1.5);
    let commercial = 0.4 + 1.2 * sigmoid(2.0 * (hod - 8.0)) * sigmoid(2.0 * (18.0 - hod));
    match archetype {
        0 => residential,
        1 => commercial,
        2 => 1.0 + 0.3 * sigmoid(3.0 * (hod - 6.0)) * sigmoid(3.0 * (22.0 - hod)),
        _ => 0.5 * (residential + commercial),
    }
}

/// Integer bin counts of a two-component mixture, summing exactly to
/// [`HISTOGRAM_PIXELS`] (largest-remainder rounding).
fn histogram(roof_mean: f64, roof_weight: f64, ground_mean: f64) -> Vec<f64> {
    let density: Vec<f64> = (0..HISTOGRAM_BINS)
        .map(|b| {
            let x = b as f64 + 0.5;
            roof_weight * gaussian_bump(x, roof_mean, 6.0) / 6.0
                + (1.0 - roof_weight) * gaussian_bump(x, ground_mean, 10.0) / 10.0
        })
        .collect();
    let total: f64 = density.iter().sum();
    let exact: Vec<f64> = density
        .iter()
        .map(|d| d / total * f64::from(HISTOGRAM_PIXELS))
        .collect();
    let mut counts: Vec<f64> = exact.iter().map(|v| v.floor()).collect();
    let assigned: f64 = counts.iter().sum();
    let missing = (f64::from(HISTOGRAM_PIXELS) - assigned).round() as usize;
    let mut order: Vec<usize> = (0..HISTOGRAM_BINS).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - counts[a];
        let rb = exact[b] - counts[b];
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(missing) {
        counts[i] += 1.0;
    }
    counts
}

/// Generates `n_buildings * n_timestamps` labelled points over the
/// standard schema, building-major.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Dataset> {
    cfg.validate()?;
    let schema = Schema::STANDARD;
    let shift = cfg.shift_strength;
    let mut rng = seed::derived_rng(cfg.seed, "synth/buildings", 0);

    let n_regions = cfg.n_buildings.div_ceil(4).max(1);
    let centres: Vec<(f64, f64)> = (0..n_regions)
        .map(|_| (rng.gen_range(45.9..47.7), rng.gen_range(6.0..10.4)))
        .collect();
    let regions: Vec<Region> = (0..n_regions).map(|_| Region::sample(&mut rng)).collect();

    let mut buildings = Vec::with_capacity(cfg.n_buildings);
    let mut traits = Vec::with_capacity(cfg.n_buildings);
    let mut histograms = Vec::with_capacity(cfg.n_buildings);
    for b in 0..cfg.n_buildings {
        let archetype = if b < ARCHETYPES {
            b
        } else {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            ARCHETYPE_WEIGHTS
                .iter()
                .position(|w| {
                    acc += w;
                    u < acc
                })
                .unwrap_or(ARCHETYPES - 1)
        };
        let region = rng.gen_range(0..n_regions);
        let (lat, lon) = centres[region];
        let size = standard_normal(&mut rng);
        let roof_weight = 0.25 + 0.5 * sigmoid(size);
        let mut hist = Vec::with_capacity(schema.d_s);
        for c in 0..IMAGE_CHANNELS {
            let roof = ROOF_BIN[archetype][c] + 2.0 * standard_normal(&mut rng);
            let ground = GROUND_BIN[c] + 3.0 * standard_normal(&mut rng);
            hist.extend(histogram(roof, roof_weight, ground));
        }
        buildings.push(Building {
            id: b as u32,
            latitude: (lat + 0.002 * standard_normal(&mut rng)).clamp(-90.0, 90.0),
            longitude: (lon + 0.002 * standard_normal(&mut rng)).clamp(-180.0, 180.0),
            region: region as u32,
            archetype: archetype as u32,
        });
        traits.push(BuildingTraits { archetype, size });
        histograms.push(hist);
    }

    let mut time_rng = seed::derived_rng(cfg.seed, "synth/times", 0);
    let mut slots: Vec<u32> = index::sample(&mut time_rng, SLOTS_PER_YEAR as usize, cfg.n_timestamps)
        .into_iter()
        .map(|s| s as u32)
        .collect();
    slots.sort_unstable();
    let times: Vec<TimePoint> = slots.iter().map(|&s| TimePoint::from_slot(s)).collect();

    // Trailing 24 hourly weather values ending at each time stamp, per region.
    let weather: Vec<Vec<Vec<f64>>> = regions
        .iter()
        .map(|r| {
            times
                .iter()
                .map(|t| {
                    let end = f64::from(t.day_of_year() * 24 + u32::from(t.hour));
                    let mut block = Vec::with_capacity(schema.d_st);
                    for step in 0..WEATHER_HOURS {
                        let h = end - (WEATHER_HOURS - 1 - step) as f64;
                        block.extend(r.weather(h));
                    }
                    block
                })
                .collect()
        })
        .collect();

    let mut noise_rng = seed::derived_rng(cfg.seed, "synth/noise", 0);
    let mut points = Vec::with_capacity(cfg.n_buildings * cfg.n_timestamps);
    for (b, building) in buildings.iter().enumerate() {
        let tr = &traits[b];
        let a = tr.archetype;
        let level = ARCHETYPE_LEVEL[a].powf(shift) * (shift * 0.35 * tr.size).exp();
        for (ti, t) in times.iter().enumerate() {
            let x_st = &weather[building.region as usize][ti];
            let mean_temp = (0..WEATHER_HOURS)
                .map(|s| x_st[s * WEATHER_CHANNELS + TEMPERATURE_CHANNEL])
                .sum::<f64>()
                / WEATHER_HOURS as f64;
            let weather_factor = 1.0
                + shift * HEATING_SENSITIVITY[a] * (12.0 - mean_temp).max(0.0) / 10.0
                + shift * COOLING_SENSITIVITY[a] * (mean_temp - 20.0).max(0.0) / 10.0;
            let start = t.hours();
            let label: Vec<f64> = (0..schema.d_y)
                .map(|k| {
                    let h = start + 0.25 * k as f64;
                    let hod = h.rem_euclid(24.0);
                    let doy = (h / 24.0).rem_euclid(365.0);
                    let common = common_profile(hod);
                    let profile = common + shift * (archetype_profile(a, hod) - common);
                    let season = 1.0 + shift * SEASON_SENSITIVITY[a] * (2.0 * PI * (doy - 15.0) / 365.0).cos();
                    let clean = level * profile * season * weather_factor;
                    (clean + cfg.noise_scale * level * standard_normal(&mut noise_rng)).max(0.0)
                })
                .collect();

            let mut features = Vec::with_capacity(schema.d_x());
            features.extend(t.encode());
            features.extend_from_slice(&histograms[b]);
            features.extend_from_slice(x_st);
            points.push(LabeledPoint {
                building_id: building.id,
                time: *t,
                features,
                label,
            });
        }
    }

    Ok(Dataset {
        schema,
        buildings,
        points,
    })
}
