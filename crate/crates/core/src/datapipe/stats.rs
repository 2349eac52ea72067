use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PreferencePairRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthSide {
    Chosen,
    Rejected,
}

/// Characters count the space-separated decimal rendering of the token ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthUnit {
    Tokens,
    Characters,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub mean: f64,
    /// Lower middle value for even counts.
    pub median: f64,
    /// Smallest most frequent value.
    pub mode: f64,
    pub count: usize,
    pub unit: LengthUnit,
}

fn lengths(records: &[PreferencePairRecord], side: LengthSide, unit: LengthUnit) -> Vec<usize> {
    records
        .iter()
        .map(|r| {
            let seq = match side {
                LengthSide::Chosen => &r.chosen,
                LengthSide::Rejected => &r.rejected,
            };
            match unit {
                LengthUnit::Tokens => seq.len(),
                LengthUnit::Characters => seq.char_len(),
            }
        })
        .collect()
}

pub fn length_statistics(records: &[PreferencePairRecord], side: LengthSide, unit: LengthUnit) -> Result<LengthStats> {
    if records.is_empty() {
        return Err(Error::invalid("length statistics need at least one record"));
    }
    let mut ls = lengths(records, side, unit);
    ls.sort_unstable();
    let count = ls.len();
    let mean = ls.iter().map(|&l| l as f64).sum::<f64>() / count as f64;
    let median = ls[(count - 1) / 2] as f64;
    let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in &ls {
        *freq.entry(l).or_default() += 1;
    }
    let top = *freq.values().max().expect("nonempty");
    let mode = *freq.iter().find(|(_, &n)| n == top).expect("nonempty").0 as f64;
    Ok(LengthStats { mean, median, mode, count, unit })
}

/// Counts per half-open bucket `[k*w, (k+1)*w)`; empty buckets are omitted.
pub fn length_histogram(
    records: &[PreferencePairRecord],
    side: LengthSide,
    unit: LengthUnit,
    bucket_width: usize,
) -> Result<Vec<(usize, usize)>> {
    if bucket_width == 0 {
        return Err(Error::invalid("bucket width must be >= 1"));
    }
    let mut buckets: BTreeMap<usize, usize> = BTreeMap::new();
    for l in lengths(records, side, unit) {
        *buckets.entry(l / bucket_width * bucket_width).or_default() += 1;
    }
    Ok(buckets.into_iter().collect())
}
