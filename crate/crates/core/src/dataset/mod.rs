//! Feature/label schema, synthetic data generation, train/validation/candidate
//! splits and normalization.

mod io;
mod normalize;
mod split;
mod synth;

use serde::{Deserialize, Serialize};

pub use io::{export_csv, load_dataset, load_splits, save_dataset, save_splits};
pub use normalize::Normalizer;
pub use split::{classify_prediction_type, split, DatasetSplits, PredictionType};
pub use synth::{generate_synthetic, SyntheticConfig, ARCHETYPES, HISTOGRAM_PIXELS};

use crate::{Error, Result};

/// Partition sizes of a feature vector plus the label width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub d_t: usize,
    pub d_s: usize,
    pub d_st: usize,
    pub d_y: usize,
}

/// Meteorological channels in the space-time block.
pub const WEATHER_CHANNELS: usize = 9;
/// Hourly history window of the space-time block.
pub const WEATHER_HOURS: usize = 24;
/// Bins per colour channel of the building-image histogram.
pub const HISTOGRAM_BINS: usize = 100;
pub const IMAGE_CHANNELS: usize = 3;

impl Schema {
    /// Time stamp (4 ordinals), 3x100 histogram bins, 9x24 weather values and a
    /// 24 h label at 15 min resolution.
    pub const STANDARD: Schema = Schema {
        d_t: 4,
        d_s: IMAGE_CHANNELS * HISTOGRAM_BINS,
        d_st: WEATHER_CHANNELS * WEATHER_HOURS,
        d_y: 4 * 24,
    };

    pub fn d_x(&self) -> usize {
        self.d_t + self.d_s + self.d_st
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_t == 0 || self.d_s == 0 || self.d_st == 0 || self.d_y == 0 {
            return Err(Error::invalid("all schema dimensions must be >= 1"));
        }
        Ok(())
    }
}

impl Default for Schema {
    fn default() -> Self {
        Schema::STANDARD
    }
}

/// Ordinal time stamp of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimePoint {
    pub month: u8,
    pub day: u8,
    pub hour: u8,
    pub quarter: u8,
}

const MONTH_DAYS: [u32; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

impl TimePoint {
    pub fn new(month: u8, day: u8, hour: u8, quarter: u8) -> Result<Self> {
        let t = TimePoint {
            month,
            day,
            hour,
            quarter,
        };
        if !(1..=12).contains(&month) || !(1..=31).contains(&day) || hour > 23 || quarter > 3 {
            return Err(Error::invalid(format!("time stamp out of range: {t:?}")));
        }
        Ok(t)
    }

    /// Quarter-hour slot within a non-leap year.
    pub fn from_slot(slot: u32) -> Self {
        let quarter = (slot % 4) as u8;
        let hour = ((slot / 4) % 24) as u8;
        let mut doy = slot / 96;
        let mut month = 0;
        while doy >= MONTH_DAYS[month] {
            doy -= MONTH_DAYS[month];
            month += 1;
        }
        TimePoint {
            month: month as u8 + 1,
            day: doy as u8 + 1,
            hour,
            quarter,
        }
    }

    pub fn day_of_year(&self) -> u32 {
        MONTH_DAYS[..usize::from(self.month - 1)].iter().sum::<u32>() + u32::from(self.day) - 1
    }

    /// Hours since the start of the year, including the quarter fraction.
    pub fn hours(&self) -> f64 {
        f64::from(self.day_of_year() * 24 + u32::from(self.hour)) + f64::from(self.quarter) * 0.25
    }

    /// Ordinals min-max scaled to [0, 1].
    pub fn encode(&self) -> [f64; 4] {
        [
            f64::from(self.month - 1) / 11.0,
            f64::from(self.day - 1) / 30.0,
            f64::from(self.hour) / 23.0,
            f64::from(self.quarter) / 3.0,
        ]
    }

    pub fn ordinals(&self) -> [f64; 4] {
        [
            f64::from(self.month),
            f64::from(self.day),
            f64::from(self.hour),
            f64::from(self.quarter),
        ]
    }
}

/// Static description of a building.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub id: u32,
    pub latitude: f64,
    pub longitude: f64,
    /// Buildings in the same region share meteorology.
    pub region: u32,
    pub archetype: u32,
}

/// One (time, space) sample with its full feature vector `(x_t, x_s, x_st)`
/// and label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub building_id: u32,
    pub time: TimePoint,
    pub features: Vec<f64>,
    pub label: Vec<f64>,
}

impl LabeledPoint {
    pub fn x_t(&self, schema: &Schema) -> &[f64] {
        &self.features[..schema.d_t]
    }

    pub fn x_s(&self, schema: &Schema) -> &[f64] {
        &self.features[schema.d_t..schema.d_t + schema.d_s]
    }

    pub fn x_st(&self, schema: &Schema) -> &[f64] {
        &self.features[schema.d_t + schema.d_s..]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: Schema,
    pub buildings: Vec<Building>,
    pub points: Vec<LabeledPoint>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        let d_x = self.schema.d_x();
        for (i, p) in self.points.iter().enumerate() {
            if p.features.len() != d_x || p.label.len() != self.schema.d_y {
                return Err(Error::invalid(format!("point {i} does not match the schema")));
            }
        }
        Ok(())
    }

    pub fn samples<'a>(&'a self, ids: &[usize]) -> Vec<crate::nn::Sample<'a>> {
        ids.iter()
            .map(|&i| crate::nn::Sample::new(&self.points[i].features, &self.points[i].label))
            .collect()
    }

    pub fn archetype_of(&self, building_id: u32) -> Option<u32> {
        self.buildings
            .iter()
            .find(|b| b.id == building_id)
            .map(|b| b.archetype)
    }
}
