//! Raw record parsing and gap-based trajectory segmentation.

use std::collections::BTreeMap;
use std::io::BufRead;

use chrono::NaiveDateTime;

use crate::{Error, Result};

/// One raw observation: an object passing a location at a point in time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassageRecord {
    pub object: String,
    pub location: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
}

/// A time-ordered run of (location, timestamp) points for one object, with no
/// gap between neighbors exceeding the segmentation threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub object: String,
    pub points: Vec<(String, i64)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Parse `object,location,timestamp` lines. Timestamps are integer epoch
/// seconds or ISO-8601 local time (`2019-04-30T08:15:00`, `T` or space
/// separator); local timestamps are shifted to UTC by `tz_offset_secs`.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_records(reader: impl BufRead, tz_offset_secs: i64) -> Result<Vec<PassageRecord>> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        records.push(parse_record(trimmed, idx + 1, tz_offset_secs)?);
    }
    Ok(records)
}

fn parse_record(line: &str, line_no: usize, tz_offset_secs: i64) -> Result<PassageRecord> {
    let mut fields = line.splitn(3, ',');
    let object = fields.next().unwrap_or("").trim();
    let location = fields.next().unwrap_or("").trim();
    let raw_ts = fields
        .next()
        .ok_or_else(|| Error::Record {
            line: line_no,
            reason: format!("expected object,location,timestamp, got {line:?}"),
        })?
        .trim();
    if object.is_empty() {
        return Err(Error::Record {
            line: line_no,
            reason: "empty object id".into(),
        });
    }
    if location.is_empty() {
        return Err(Error::Record {
            line: line_no,
            reason: "empty location id".into(),
        });
    }
    let timestamp = parse_timestamp(raw_ts, tz_offset_secs).ok_or_else(|| Error::Record {
        line: line_no,
        reason: format!("unparseable timestamp {raw_ts:?}"),
    })?;
    if timestamp <= 0 {
        return Err(Error::Record {
            line: line_no,
            reason: format!("timestamp must be positive, got {timestamp}"),
        });
    }
    Ok(PassageRecord {
        object: object.to_owned(),
        location: location.to_owned(),
        timestamp,
    })
}

fn parse_timestamp(raw: &str, tz_offset_secs: i64) -> Option<i64> {
    if let Ok(epoch) = raw.parse::<i64>() {
        return Some(epoch);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(local) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(local.and_utc().timestamp() - tz_offset_secs);
        }
    }
    None
}

/// Split records into trajectories: per object, records are sorted by time
/// and cut wherever the gap between neighbors exceeds `gap_seconds`. Segments
/// shorter than `min_len` are dropped. Output is ordered by object id, then
/// start time, and is invariant under permutation of the input.
pub fn segment(records: &[PassageRecord], gap_seconds: i64, min_len: usize) -> Vec<Trajectory> {
    let mut by_object: BTreeMap<&str, Vec<(&str, i64)>> = BTreeMap::new();
    for rec in records {
        by_object
            .entry(&rec.object)
            .or_default()
            .push((&rec.location, rec.timestamp));
    }

    let mut out = Vec::new();
    for (object, mut points) in by_object {
        // The location tie-break makes equal-timestamp runs order-independent.
        points.sort_unstable_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut start = 0;
        for i in 1..=points.len() {
            let cut = i == points.len() || points[i].1 - points[i - 1].1 > gap_seconds;
            if cut {
                if i - start >= min_len {
                    out.push(Trajectory {
                        object: object.to_owned(),
                        points: points[start..i]
                            .iter()
                            .map(|&(l, t)| (l.to_owned(), t))
                            .collect(),
                    });
                }
                start = i;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(object: &str, location: &str, timestamp: i64) -> PassageRecord {
        PassageRecord {
            object: object.into(),
            location: location.into(),
            timestamp,
        }
    }

    #[test]
    fn gap_splits_and_min_len_drops() {
        // Segments of lengths 2 and 1; both below min_len = 3.
        let records = vec![rec("v", "A", 1000), rec("v", "B", 2800), rec("v", "C", 8200)];
        assert!(segment(&records, 3600, 3).is_empty());
        // With min_len = 1 both survive.
        let segs = segment(&records, 3600, 1);
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].len(), 2);
        assert_eq!(segs[1].len(), 1);
    }

    #[test]
    fn no_gap_keeps_one_trajectory() {
        let records = vec![
            rec("v", "A", 1000),
            rec("v", "B", 1600),
            rec("v", "C", 2200),
            rec("v", "D", 2800),
        ];
        let segs = segment(&records, 3600, 3);
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].len(), 4);
        assert_eq!(segs[0].points[3], ("D".to_owned(), 2800));
    }

    #[test]
    fn gap_equal_to_threshold_does_not_split() {
        let records = vec![rec("v", "A", 1000), rec("v", "B", 4600), rec("v", "C", 8200)];
        assert_eq!(segment(&records, 3600, 3).len(), 1);
    }

    #[test]
    fn empty_input_is_empty_output() {
        assert!(segment(&[], 3600, 3).is_empty());
    }

    #[test]
    fn permutation_invariance_against_sort_then_scan_oracle() {
        // Brute-force oracle: fully sort (object, time, location) triples and
        // scan each object's run.
        fn oracle(records: &[PassageRecord], gap: i64, min_len: usize) -> Vec<Trajectory> {
            let mut sorted: Vec<_> = records.to_vec();
            sorted.sort_by(|a, b| {
                (&a.object, a.timestamp, &a.location).cmp(&(&b.object, b.timestamp, &b.location))
            });
            let mut out = Vec::new();
            let mut run: Vec<PassageRecord> = Vec::new();
            for r in sorted {
                let boundary = run.last().is_some_and(|p: &PassageRecord| {
                    p.object != r.object || r.timestamp - p.timestamp > gap
                });
                if boundary {
                    if run.len() >= min_len {
                        out.push(Trajectory {
                            object: run[0].object.clone(),
                            points: run.iter().map(|p| (p.location.clone(), p.timestamp)).collect(),
                        });
                    }
                    run.clear();
                }
                run.push(r);
            }
            if run.len() >= min_len {
                out.push(Trajectory {
                    object: run[0].object.clone(),
                    points: run.iter().map(|p| (p.location.clone(), p.timestamp)).collect(),
                });
            }
            out
        }

        let base = vec![
            rec("v2", "C", 100),
            rec("v1", "A", 50),
            rec("v1", "B", 2000),
            rec("v2", "D", 700),
            rec("v1", "C", 9000),
            rec("v2", "A", 1400),
            rec("v1", "D", 9900),
            rec("v1", "E", 10400),
            rec("v2", "B", 700), // equal timestamp, distinct location
        ];
        let expected = oracle(&base, 3600, 2);
        assert!(!expected.is_empty());

        // A handful of deterministic permutations, including reversal.
        let mut shuffled = base.clone();
        for step in 0..6 {
            shuffled.rotate_left(step + 1);
            shuffled.reverse();
            assert_eq!(segment(&shuffled, 3600, 2), expected, "step {step}");
        }
    }

    #[test]
    fn record_parsing_reports_line_numbers() {
        let input = "v,A,1000\nv,B,not-a-time\n";
        let err = parse_records(input.as_bytes(), 0).unwrap_err();
        match err {
            Error::Record { line, .. } => assert_eq!(line, 2),
            other => panic!("expected record error, got {other}"),
        }
    }

    #[test]
    fn iso_timestamps_shift_by_offset() {
        let input = "v,A,2023-01-02T08:00:00\nv,B,2023-01-02 09:30:00\n";
        let recs = parse_records(input.as_bytes(), 8 * 3600).unwrap();
        // 2023-01-02T08:00:00 UTC is epoch 1672646400; local time is 8h ahead.
        assert_eq!(recs[0].timestamp, 1672646400 - 8 * 3600);
        assert_eq!(recs[1].timestamp - recs[0].timestamp, 5400);
    }

    #[test]
    fn blank_and_comment_lines_skipped() {
        let input = "# header\n\nv,A,1000\n";
        let recs = parse_records(input.as_bytes(), 0).unwrap();
        assert_eq!(recs.len(), 1);
    }

    #[test]
    fn empty_fields_rejected() {
        assert!(parse_records(",A,1000\n".as_bytes(), 0).is_err());
        assert!(parse_records("v,,1000\n".as_bytes(), 0).is_err());
        assert!(parse_records("v,A,-5\n".as_bytes(), 0).is_err());
        assert!(parse_records("v,A\n".as_bytes(), 0).is_err());
    }
}
