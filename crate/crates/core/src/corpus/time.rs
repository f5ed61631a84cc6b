//! Time discretization: equi-sized bins over the day, duplicated into weekday
//! and weekend variants.

use chrono::{DateTime, Datelike, Timelike, Weekday};

use crate::{Error, Result};

/// Discretization of the day into `24 / bin_hours` bins, with separate bin
/// ranges for weekdays and weekends. Bins `[0, bins_per_day)` are weekday
/// bins, `[bins_per_day, total_bins)` weekend bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeBinScheme {
    bin_hours: u32,
}

impl TimeBinScheme {
    pub fn new(bin_hours: u32) -> Result<Self> {
        if bin_hours == 0 || 24 % bin_hours != 0 {
            return Err(Error::Config(format!(
                "bin size must divide 24 hours, got {bin_hours}"
            )));
        }
        Ok(TimeBinScheme { bin_hours })
    }

    /// Scheme with `total_bins` bins, when a divisor-of-24 bin size yields
    /// exactly that count.
    pub fn with_total_bins(total_bins: u32) -> Result<Self> {
        if total_bins == 0 || 48 % total_bins != 0 {
            return Err(Error::Config(format!(
                "no bin size yields {total_bins} total bins"
            )));
        }
        TimeBinScheme::new(48 / total_bins)
    }

    pub fn bin_hours(&self) -> u32 {
        self.bin_hours
    }

    pub fn bins_per_day(&self) -> u32 {
        24 / self.bin_hours
    }

    pub fn total_bins(&self) -> u32 {
        2 * self.bins_per_day()
    }

    /// Bin index for an epoch timestamp, shifted into local time by
    /// `tz_offset_secs`.
    pub fn bin(&self, timestamp: i64, tz_offset_secs: i64) -> u32 {
        // Interpreting the shifted instant as UTC yields local civil time.
        let local = DateTime::from_timestamp(timestamp + tz_offset_secs, 0)
            .expect("timestamp out of representable range");
        let weekend = matches!(local.weekday(), Weekday::Sat | Weekday::Sun);
        let bin = local.hour() / self.bin_hours;
        if weekend {
            bin + self.bins_per_day()
        } else {
            bin
        }
    }

    /// Human-readable label of a bin, e.g. `8:00-10:00@weekday`.
    pub fn label(&self, bin: u32) -> String {
        let per_day = self.bins_per_day();
        let day = if bin < per_day { "weekday" } else { "weekend" };
        let start = (bin % per_day) * self.bin_hours;
        format!("{}:00-{}:00@{}", start, start + self.bin_hours, day)
    }
}

impl Default for TimeBinScheme {
    fn default() -> Self {
        TimeBinScheme { bin_hours: 2 }
    }
}
