//! Five-minute time axis over a (possibly segmented) simulated year.
//!
//! Timestamps count minutes since 00:00 on January 1st of the reference
//! year. The reference year starts on a Monday and has 365 days.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

pub const STEP_MINUTES: u32 = 5;
pub const STEPS_PER_HOUR: usize = 12;
pub const STEPS_PER_DAY: usize = 288;
pub const MINUTES_PER_DAY: u32 = 1440;
pub const DAYS_PER_YEAR: u32 = 365;

/// Calendar year the time axis is anchored to (January 1st is a Monday).
pub const REFERENCE_YEAR: i32 = 2018;

/// Minutes since January 1st 00:00 of the reference year.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timestamp(pub u32);

impl Timestamp {
    pub fn from_day_step(day: u32, step: usize) -> Self {
        Timestamp(day * MINUTES_PER_DAY + step as u32 * STEP_MINUTES)
    }

    pub fn minutes(self) -> u32 {
        self.0
    }

    pub fn day_of_year(self) -> u32 {
        self.0 / MINUTES_PER_DAY
    }

    pub fn minute_of_day(self) -> u32 {
        self.0 % MINUTES_PER_DAY
    }

    /// Fractional hour of day in `[0, 24)`.
    pub fn hour_of_day(self) -> f64 {
        self.minute_of_day() as f64 / 60.0
    }

    /// Index of the hourly block, `0..24`.
    pub fn hour(self) -> usize {
        (self.minute_of_day() / 60) as usize
    }

    /// 0 = Monday, 6 = Sunday.
    pub fn weekday(self) -> u32 {
        self.day_of_year() % 7
    }

    pub fn is_weekend(self) -> bool {
        self.weekday() >= 5
    }

    /// Zero-based calendar month.
    pub fn month(self) -> u32 {
        const CUMULATIVE: [u32; 12] = [31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334, 365];
        let day = self.day_of_year() % DAYS_PER_YEAR;
        CUMULATIVE.iter().position(|&end| day < end).unwrap_or(11) as u32
    }

    pub fn minus_minutes(self, minutes: u32) -> Option<Self> {
        self.0.checked_sub(minutes).map(Timestamp)
    }
}

/// A run of consecutive simulated days.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    /// Day of year of the first day (0 = January 1st).
    pub start_day: u32,
    pub days: u32,
}

impl Segment {
    pub fn steps(&self) -> usize {
        self.days as usize * STEPS_PER_DAY
    }

    pub fn day_range(&self) -> core::ops::Range<u32> {
        self.start_day..self.start_day + self.days
    }
}

/// Simulated horizon: ordered, non-overlapping day segments.
///
/// The desk-scale default samples the whole seasonal cycle with a few
/// two-week blocks instead of simulating every day of the year.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Horizon {
    segments: Vec<Segment>,
}

impl Horizon {
    /// Builds a horizon from explicit segments. Returns `None` if segments
    /// are empty, zero-length, unordered, overlapping or exceed the year.
    pub fn new(segments: Vec<Segment>) -> Option<Self> {
        if segments.is_empty() {
            return None;
        }
        let mut end = 0;
        for (i, s) in segments.iter().enumerate() {
            if s.days == 0 || (i > 0 && s.start_day < end) || s.start_day + s.days > DAYS_PER_YEAR {
                return None;
            }
            end = s.start_day + s.days;
        }
        Some(Horizon { segments })
    }

    pub fn contiguous(start_day: u32, days: u32) -> Option<Self> {
        Self::new(alloc::vec![Segment { start_day, days }])
    }

    pub fn full_year() -> Self {
        Horizon { segments: alloc::vec![Segment { start_day: 0, days: DAYS_PER_YEAR }] }
    }

    /// `weeks` of simulated time split into `blocks` equal segments spread
    /// evenly over the year, the first one starting on January 1st.
    pub fn spread(weeks: u32, blocks: u32) -> Option<Self> {
        if blocks == 0 || weeks == 0 || !(weeks * 7).is_multiple_of(blocks) {
            return None;
        }
        let days = weeks * 7 / blocks;
        let segments = (0..blocks)
            .map(|b| Segment { start_day: (b * DAYS_PER_YEAR) / blocks, days })
            .collect();
        Self::new(segments)
    }

    /// 16 weeks as eight two-week blocks across the year.
    pub fn desk_default() -> Self {
        Self::spread(16, 8).expect("static horizon is valid")
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(Segment::steps).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn days(&self) -> impl Iterator<Item = u32> + '_ {
        self.segments.iter().flat_map(Segment::day_range)
    }

    pub fn timestamps(&self) -> Vec<Timestamp> {
        self.days()
            .flat_map(|d| (0..STEPS_PER_DAY).map(move |s| Timestamp::from_day_step(d, s)))
            .collect()
    }

    /// Position of a timestamp inside the horizon, if covered.
    pub fn index_of(&self, t: Timestamp) -> Option<usize> {
        if !t.0.is_multiple_of(STEP_MINUTES) {
            return None;
        }
        let day = t.day_of_year();
        let mut offset = 0;
        for s in &self.segments {
            if s.day_range().contains(&day) {
                let within = (day - s.start_day) as usize * STEPS_PER_DAY
                    + (t.minute_of_day() / STEP_MINUTES) as usize;
                return Some(offset + within);
            }
            offset += s.steps();
        }
        None
    }
}

impl Default for Horizon {
    fn default() -> Self {
        Self::desk_default()
    }
}
