//! Line-oriented corpus file format with a versioned header.
//!
//! ```text
//! routemix-corpus 1
//! order 2
//! bin-hours 2
//! tz-offset-secs 28800
//! locations <L>
//! objects <O>
//! sequences <S>
//! trajectories <M>
//! L <raw location id>          one line per location, dense-id order
//! O <raw object id>            one line per object, dense-id order
//! S <loc> <loc> ...            one line per sequence: order + 1 location ids
//! T <obj> <n> <seq>:<bin> ...  one line per trajectory
//! ```
//!
//! `T` lines carry the trajectory-level object followed by its units. A unit
//! whose object differs from the trajectory's (simulated corpora) is written
//! as `<seq>:<bin>@<obj>`.

use std::io::{BufRead, Write};

use super::{Corpus, TimeBinScheme, TrajectoryUnits, Unit, Vocabularies};
use crate::{Error, Result};

const MAGIC: &str = "routemix-corpus";
const VERSION: u32 = 1;

pub fn write_corpus(mut w: impl Write, corpus: &Corpus) -> Result<()> {
    writeln!(w, "{MAGIC} {VERSION}")?;
    writeln!(w, "order {}", corpus.vocab.order)?;
    writeln!(w, "bin-hours {}", corpus.scheme.bin_hours())?;
    writeln!(w, "tz-offset-secs {}", corpus.tz_offset_secs)?;
    writeln!(w, "locations {}", corpus.vocab.num_locations())?;
    writeln!(w, "objects {}", corpus.vocab.num_objects())?;
    writeln!(w, "sequences {}", corpus.vocab.num_sequences())?;
    writeln!(w, "trajectories {}", corpus.num_trajectories())?;
    for name in corpus.vocab.locations.names() {
        writeln!(w, "L {name}")?;
    }
    for name in corpus.vocab.objects.names() {
        writeln!(w, "O {name}")?;
    }
    for key in corpus.vocab.sequences.keys() {
        write!(w, "S")?;
        for loc in key {
            write!(w, " {loc}")?;
        }
        writeln!(w)?;
    }
    for traj in &corpus.trajectories {
        write!(w, "T {} {}", traj.object, traj.len())?;
        for u in &traj.units {
            if u.obj == traj.object {
                write!(w, " {}:{}", u.seq, u.bin)?;
            } else {
                write!(w, " {}:{}@{}", u.seq, u.bin, u.obj)?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

struct Lines<R> {
    reader: R,
    path: String,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String> {
        let mut buf = String::new();
        let n = self.reader.read_line(&mut buf)?;
        if n == 0 {
            return Err(Error::format(&self.path, "unexpected end of file"));
        }
        self.line_no += 1;
        if buf.ends_with('\n') {
            buf.pop();
        }
        Ok(buf)
    }

    fn bad(&self, reason: impl std::fmt::Display) -> Error {
        Error::format(&self.path, format!("line {}: {}", self.line_no, reason))
    }
}

fn header_value(lines: &mut Lines<impl BufRead>, key: &str) -> Result<String> {
    let line = lines.next()?;
    match line.strip_prefix(key).and_then(|r| r.strip_prefix(' ')) {
        Some(v) if !v.is_empty() => Ok(v.to_owned()),
        _ => Err(lines.bad(format_args!("expected `{key} <value>`, got {line:?}"))),
    }
}

fn header_num<T: std::str::FromStr>(lines: &mut Lines<impl BufRead>, key: &str) -> Result<T> {
    let v = header_value(lines, key)?;
    v.parse()
        .map_err(|_| lines.bad(format_args!("invalid number {v:?} for `{key}`")))
}

pub fn read_corpus(reader: impl BufRead, path: &str) -> Result<Corpus> {
    let mut lines = Lines {
        reader,
        path: path.to_owned(),
        line_no: 0,
    };

    let head = lines.next()?;
    if head != format!("{MAGIC} {VERSION}") {
        return Err(lines.bad(format_args!(
            "expected `{MAGIC} {VERSION}` header, got {head:?}"
        )));
    }
    let order: usize = header_num(&mut lines, "order")?;
    let bin_hours: u32 = header_num(&mut lines, "bin-hours")?;
    let tz_offset_secs: i64 = header_num(&mut lines, "tz-offset-secs")?;
    let num_locations: usize = header_num(&mut lines, "locations")?;
    let num_objects: usize = header_num(&mut lines, "objects")?;
    let num_sequences: usize = header_num(&mut lines, "sequences")?;
    let num_trajectories: usize = header_num(&mut lines, "trajectories")?;

    let scheme = TimeBinScheme::new(bin_hours)?;
    let mut vocab = Vocabularies::new(order)?;

    for _ in 0..num_locations {
        let line = lines.next()?;
        let name = line
            .strip_prefix("L ")
            .ok_or_else(|| lines.bad(format_args!("expected `L <location>`, got {line:?}")))?;
        vocab.locations.encode(name);
    }
    for _ in 0..num_objects {
        let line = lines.next()?;
        let name = line
            .strip_prefix("O ")
            .ok_or_else(|| lines.bad(format_args!("expected `O <object>`, got {line:?}")))?;
        vocab.objects.encode(name);
    }
    for _ in 0..num_sequences {
        let line = lines.next()?;
        let body = line
            .strip_prefix("S ")
            .ok_or_else(|| lines.bad(format_args!("expected `S <loc>...`, got {line:?}")))?;
        let mut key = Vec::with_capacity(order + 1);
        for tok in body.split(' ') {
            let loc: u32 = tok
                .parse()
                .map_err(|_| lines.bad(format_args!("invalid location id {tok:?}")))?;
            if loc as usize >= num_locations {
                return Err(lines.bad(format_args!("location id {loc} out of range")));
            }
            key.push(loc);
        }
        if key.len() != order + 1 {
            return Err(lines.bad(format_args!(
                "sequence has {} locations, expected {}",
                key.len(),
                order + 1
            )));
        }
        vocab.sequences.encode(&key);
    }

    let num_bins = scheme.total_bins();
    let mut trajectories = Vec::with_capacity(num_trajectories);
    for index in 0..num_trajectories {
        let line = lines.next()?;
        let body = line
            .strip_prefix("T ")
            .ok_or_else(|| lines.bad(format_args!("expected `T ...`, got {line:?}")))?;
        let mut toks = body.split(' ');
        let object: u32 = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| lines.bad("missing trajectory object id"))?;
        if object as usize >= num_objects {
            return Err(lines.bad(format_args!("object id {object} out of range")));
        }
        let count: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| lines.bad("missing unit count"))?;
        let mut units = Vec::with_capacity(count);
        for tok in toks {
            let (seq_bin, obj) = match tok.split_once('@') {
                Some((sb, o)) => {
                    let obj: u32 = o
                        .parse()
                        .map_err(|_| lines.bad(format_args!("invalid unit object {o:?}")))?;
                    (sb, obj)
                }
                None => (tok, object),
            };
            let (s, b) = seq_bin
                .split_once(':')
                .ok_or_else(|| lines.bad(format_args!("expected `<seq>:<bin>`, got {tok:?}")))?;
            let seq: u32 = s
                .parse()
                .map_err(|_| lines.bad(format_args!("invalid sequence id {s:?}")))?;
            let bin: u32 = b
                .parse()
                .map_err(|_| lines.bad(format_args!("invalid bin {b:?}")))?;
            if seq as usize >= num_sequences {
                return Err(lines.bad(format_args!("sequence id {seq} out of range")));
            }
            if bin >= num_bins {
                return Err(lines.bad(format_args!("bin {bin} out of range")));
            }
            if obj as usize >= num_objects {
                return Err(lines.bad(format_args!("object id {obj} out of range")));
            }
            units.push(Unit { seq, obj, bin });
        }
        if units.len() != count {
            return Err(lines.bad(format_args!(
                "trajectory lists {} units, header says {count}",
                units.len()
            )));
        }
        trajectories.push(TrajectoryUnits {
            index: index as u32,
            object,
            units,
        });
    }

    Ok(Corpus {
        vocab,
        scheme,
        tz_offset_secs,
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{segment, Trajectory};
    use super::*;

    fn sample_corpus() -> Corpus {
        let trajs: Vec<Trajectory> = vec![
            Trajectory {
                object: "v1".into(),
                points: vec![
                    ("A".into(), 1000),
                    ("B".into(), 1600),
                    ("C".into(), 2200),
                    ("D".into(), 2800),
                ],
            },
            Trajectory {
                object: "v2".into(),
                points: vec![("B".into(), 5000), ("C".into(), 5600), ("A".into(), 6200)],
            },
        ];
        Corpus::build(&trajs, 2, TimeBinScheme::default(), 3600).unwrap()
    }

    #[test]
    fn round_trip() {
        let corpus = sample_corpus();
        let mut buf = Vec::new();
        write_corpus(&mut buf, &corpus).unwrap();
        let back = read_corpus(buf.as_slice(), "test").unwrap();

        assert_eq!(back.vocab.order, corpus.vocab.order);
        assert_eq!(back.tz_offset_secs, corpus.tz_offset_secs);
        assert_eq!(back.scheme, corpus.scheme);
        assert_eq!(back.trajectories, corpus.trajectories);
        assert_eq!(
            back.vocab.locations.names(),
            corpus.vocab.locations.names()
        );
        assert_eq!(back.vocab.objects.names(), corpus.vocab.objects.names());
        let keys_a: Vec<_> = back.vocab.sequences.keys().collect();
        let keys_b: Vec<_> = corpus.vocab.sequences.keys().collect();
        assert_eq!(keys_a, keys_b);
    }

    #[test]
    fn writing_is_deterministic() {
        let corpus = sample_corpus();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_corpus(&mut a, &corpus).unwrap();
        write_corpus(&mut b, &corpus).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_file_rejected() {
        let corpus = sample_corpus();
        let mut buf = Vec::new();
        write_corpus(&mut buf, &corpus).unwrap();
        buf.truncate(buf.len() / 2);
        // Cut at a line boundary too, to exercise the missing-line path.
        let cut = buf.iter().rposition(|&b| b == b'\n').unwrap();
        assert!(read_corpus(&buf[..cut + 1], "test").is_err());
    }

    #[test]
    fn bad_magic_rejected() {
        let err = read_corpus("not-a-corpus 1\n".as_bytes(), "test").unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
    }

    #[test]
    fn out_of_range_ids_rejected() {
        let corpus = sample_corpus();
        let mut buf = Vec::new();
        write_corpus(&mut buf, &corpus).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let broken = text.replace("T 1 1 2:", "T 1 1 99:");
        assert_ne!(text, broken);
        assert!(read_corpus(broken.as_bytes(), "test").is_err());
    }

    #[test]
    fn segmented_input_round_trips_through_build() {
        let records = crate::corpus::parse_records(
            "v,A,1000\nv,B,1600\nv,C,2200\n".as_bytes(),
            0,
        )
        .unwrap();
        let trajs = segment(&records, 3600, 3);
        let corpus = Corpus::build(&trajs, 2, TimeBinScheme::default(), 0).unwrap();
        assert_eq!(corpus.total_units(), 1);
    }
}
