//! Model persistence: a self-describing file with a versioned textual header
//! followed by the four estimated matrices in row-major order.
//!
//! ```text
//! routemix-model 1 <text|binary>
//! k <K>
//! order <r>
//! bin-hours <h>
//! tz-offset-secs <off>
//! components seq[,obj][,time]
//! alpha <a_1> ... <a_K>
//! beta <b>
//! eta <e>
//! gamma <g>
//! locations <L>
//! objects <O>
//! sequences <S>
//! trajectories <M>
//! L <final-location frequency> <raw location id>
//! O <raw object id>
//! S <loc> <loc> ...
//! matrix theta <M> <K>
//! ...
//! matrix phi <K> <S>
//! ...
//! matrix psi <K> <O>
//! ...
//! matrix phi-time <K> <B>
//! ...
//! end
//! ```
//!
//! In text mode each matrix body is one tab-separated decimal row per line.
//! In binary mode it is `rows * cols` 64-bit little-endian floats followed by
//! a newline; this mode round-trips bit-exactly.

use std::io::{BufRead, Write};

use crate::corpus::{TimeBinScheme, Vocabularies};
use crate::{Error, Result};

use super::{Components, Mat, ModelConfig, ModelParams};

const MAGIC: &str = "routemix-model";
const VERSION: u32 = 1;

/// How matrix bodies are encoded on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PersistMode {
    Text,
    Binary,
}

impl PersistMode {
    fn tag(self) -> &'static str {
        match self {
            PersistMode::Text => "text",
            PersistMode::Binary => "binary",
        }
    }
}

/// Everything needed to run prediction from a fitted model: configuration,
/// vocabularies, the time-bin scheme, the estimated parameters, and the
/// training frequency of each location as a final unit location (the
/// popularity fallback for unseen contexts).
#[derive(Debug, Clone)]
pub struct SavedModel {
    pub cfg: ModelConfig,
    pub vocab: Vocabularies,
    pub scheme: TimeBinScheme,
    pub tz_offset_secs: i64,
    pub params: ModelParams,
    pub loc_freq: Vec<u64>,
}

pub fn write_params(mut w: impl Write, model: &SavedModel, mode: PersistMode) -> Result<()> {
    let cfg = &model.cfg;
    writeln!(w, "{MAGIC} {VERSION} {}", mode.tag())?;
    writeln!(w, "k {}", cfg.k)?;
    writeln!(w, "order {}", cfg.order)?;
    writeln!(w, "bin-hours {}", model.scheme.bin_hours())?;
    writeln!(w, "tz-offset-secs {}", model.tz_offset_secs)?;
    writeln!(w, "components {}", cfg.components)?;
    write!(w, "alpha")?;
    for a in &cfg.alpha {
        write!(w, " {a}")?;
    }
    writeln!(w)?;
    writeln!(w, "beta {}", cfg.beta)?;
    writeln!(w, "eta {}", cfg.eta)?;
    writeln!(w, "gamma {}", cfg.gamma)?;
    writeln!(w, "locations {}", model.vocab.num_locations())?;
    writeln!(w, "objects {}", model.vocab.num_objects())?;
    writeln!(w, "sequences {}", model.vocab.num_sequences())?;
    writeln!(w, "trajectories {}", model.params.theta.rows())?;
    for (i, name) in model.vocab.locations.names().iter().enumerate() {
        writeln!(w, "L {} {}", model.loc_freq.get(i).copied().unwrap_or(0), name)?;
    }
    for name in model.vocab.objects.names() {
        writeln!(w, "O {name}")?;
    }
    for key in model.vocab.sequences.keys() {
        write!(w, "S")?;
        for loc in key {
            write!(w, " {loc}")?;
        }
        writeln!(w)?;
    }
    let matrices = [
        ("theta", &model.params.theta),
        ("phi", &model.params.phi),
        ("psi", &model.params.psi),
        ("phi-time", &model.params.phi_time),
    ];
    for (name, mat) in matrices {
        writeln!(w, "matrix {name} {} {}", mat.rows(), mat.cols())?;
        match mode {
            PersistMode::Text => {
                for r in 0..mat.rows() {
                    let row = mat.row(r);
                    for (c, v) in row.iter().enumerate() {
                        if c > 0 {
                            write!(w, "\t")?;
                        }
                        write!(w, "{v}")?;
                    }
                    writeln!(w)?;
                }
            }
            PersistMode::Binary => {
                for v in mat.data() {
                    w.write_all(&v.to_le_bytes())?;
                }
                writeln!(w)?;
            }
        }
    }
    writeln!(w, "end")?;
    Ok(())
}

struct ModelReader<R> {
    reader: R,
    path: String,
    line_no: usize,
}

impl<R: BufRead> ModelReader<R> {
    fn next_line(&mut self) -> Result<String> {
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

    fn value(&mut self, key: &str) -> Result<String> {
        let line = self.next_line()?;
        match line.strip_prefix(key).and_then(|r| r.strip_prefix(' ')) {
            Some(v) if !v.is_empty() => Ok(v.to_owned()),
            _ => Err(self.bad(format_args!("expected `{key} <value>`, got {line:?}"))),
        }
    }

    fn num<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.value(key)?;
        v.parse()
            .map_err(|_| self.bad(format_args!("invalid value {v:?} for `{key}`")))
    }

    fn matrix(&mut self, name: &str, rows: usize, cols: usize, mode: PersistMode) -> Result<Mat> {
        let line = self.next_line()?;
        let expected = format!("matrix {name} {rows} {cols}");
        if line != expected {
            return Err(self.bad(format_args!("expected {expected:?}, got {line:?}")));
        }
        let mut mat = Mat::zeros(rows, cols);
        match mode {
            PersistMode::Text => {
                for r in 0..rows {
                    let line = self.next_line()?;
                    let mut n = 0;
                    for (c, tok) in line.split('\t').enumerate() {
                        if c >= cols {
                            return Err(self.bad("too many columns"));
                        }
                        mat.row_mut(r)[c] = tok
                            .parse()
                            .map_err(|_| self.bad(format_args!("invalid float {tok:?}")))?;
                        n += 1;
                    }
                    if n != cols {
                        return Err(self.bad(format_args!("expected {cols} columns, got {n}")));
                    }
                }
            }
            PersistMode::Binary => {
                let mut bytes = vec![0u8; rows * cols * 8];
                self.reader.read_exact(&mut bytes).map_err(|_| {
                    Error::format(&self.path, format!("truncated matrix {name}"))
                })?;
                for (i, chunk) in bytes.chunks_exact(8).enumerate() {
                    mat.data_mut()[i] = f64::from_le_bytes(chunk.try_into().unwrap());
                }
                let mut nl = [0u8; 1];
                self.reader
                    .read_exact(&mut nl)
                    .map_err(|_| Error::format(&self.path, "missing matrix terminator"))?;
                if nl[0] != b'\n' {
                    return Err(Error::format(&self.path, "missing matrix terminator"));
                }
            }
        }
        Ok(mat)
    }
}

pub fn read_params(reader: impl BufRead, path: &str) -> Result<SavedModel> {
    let mut r = ModelReader {
        reader,
        path: path.to_owned(),
        line_no: 0,
    };

    let head = r.next_line()?;
    let mode = match head.strip_prefix(&format!("{MAGIC} {VERSION} ")) {
        Some("text") => PersistMode::Text,
        Some("binary") => PersistMode::Binary,
        _ => {
            return Err(r.bad(format_args!(
                "expected `{MAGIC} {VERSION} <text|binary>`, got {head:?}"
            )))
        }
    };

    let k: usize = r.num("k")?;
    let order: usize = r.num("order")?;
    let bin_hours: u32 = r.num("bin-hours")?;
    let tz_offset_secs: i64 = r.num("tz-offset-secs")?;
    let components = Components::parse(&r.value("components")?)?;
    let alpha_line = r.value("alpha")?;
    let mut alpha = Vec::with_capacity(k);
    for tok in alpha_line.split(' ') {
        alpha.push(
            tok.parse::<f64>()
                .map_err(|_| r.bad(format_args!("invalid alpha entry {tok:?}")))?,
        );
    }
    let beta: f64 = r.num("beta")?;
    let eta: f64 = r.num("eta")?;
    let gamma: f64 = r.num("gamma")?;
    let num_locations: usize = r.num("locations")?;
    let num_objects: usize = r.num("objects")?;
    let num_sequences: usize = r.num("sequences")?;
    let num_trajectories: usize = r.num("trajectories")?;

    let scheme = TimeBinScheme::new(bin_hours)?;
    let cfg = ModelConfig {
        k,
        order,
        alpha,
        beta,
        eta,
        gamma,
        components,
    };
    cfg.validate()?;

    let mut vocab = Vocabularies::new(order)?;
    let mut loc_freq = Vec::with_capacity(num_locations);
    for _ in 0..num_locations {
        let line = r.next_line()?;
        let body = line
            .strip_prefix("L ")
            .ok_or_else(|| r.bad(format_args!("expected `L <freq> <location>`, got {line:?}")))?;
        let (freq, name) = body
            .split_once(' ')
            .ok_or_else(|| r.bad("expected `L <freq> <location>`"))?;
        loc_freq.push(
            freq.parse::<u64>()
                .map_err(|_| r.bad(format_args!("invalid frequency {freq:?}")))?,
        );
        vocab.locations.encode(name);
    }
    for _ in 0..num_objects {
        let line = r.next_line()?;
        let name = line
            .strip_prefix("O ")
            .ok_or_else(|| r.bad(format_args!("expected `O <object>`, got {line:?}")))?;
        vocab.objects.encode(name);
    }
    for _ in 0..num_sequences {
        let line = r.next_line()?;
        let body = line
            .strip_prefix("S ")
            .ok_or_else(|| r.bad(format_args!("expected `S <loc>...`, got {line:?}")))?;
        let mut key = Vec::with_capacity(order + 1);
        for tok in body.split(' ') {
            let loc: u32 = tok
                .parse()
                .map_err(|_| r.bad(format_args!("invalid location id {tok:?}")))?;
            if loc as usize >= num_locations {
                return Err(r.bad(format_args!("location id {loc} out of range")));
            }
            key.push(loc);
        }
        if key.len() != order + 1 {
            return Err(r.bad(format_args!(
                "sequence has {} locations, expected {}",
                key.len(),
                order + 1
            )));
        }
        vocab.sequences.encode(&key);
    }

    let bins = scheme.total_bins() as usize;
    let theta = r.matrix("theta", num_trajectories, k, mode)?;
    let phi = r.matrix("phi", k, num_sequences, mode)?;
    let psi = r.matrix("psi", k, num_objects, mode)?;
    let phi_time = r.matrix("phi-time", k, bins, mode)?;
    let tail = r.next_line()?;
    if tail != "end" {
        return Err(r.bad(format_args!("expected `end`, got {tail:?}")));
    }

    Ok(SavedModel {
        cfg,
        vocab,
        scheme,
        tz_offset_secs,
        params: ModelParams {
            theta,
            phi,
            psi,
            phi_time,
        },
        loc_freq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{counts_from_assignments, estimate_params, simulate};

    fn sample_model() -> SavedModel {
        let mut cfg = ModelConfig::new(3);
        cfg.order = 2;
        let sim = simulate(&cfg, 12, 4, 4, 6, 5, 3, 21).unwrap();
        let counts = counts_from_assignments(&sim.corpus, cfg.k, &sim.assignments);
        let params = estimate_params(&counts, &cfg);
        let loc_freq = (0..sim.corpus.vocab.num_locations())
            .map(|i| i as u64 * 3)
            .collect();
        SavedModel {
            cfg,
            vocab: sim.corpus.vocab.clone(),
            scheme: sim.corpus.scheme,
            tz_offset_secs: 4 * 3600,
            params,
            loc_freq,
        }
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let model = sample_model();
        let mut buf = Vec::new();
        write_params(&mut buf, &model, PersistMode::Binary).unwrap();
        let back = read_params(buf.as_slice(), "test").unwrap();
        assert_eq!(back.params, model.params);
        assert_eq!(back.cfg, model.cfg);
        assert_eq!(back.loc_freq, model.loc_freq);
        assert_eq!(back.scheme, model.scheme);
        assert_eq!(back.tz_offset_secs, model.tz_offset_secs);

        // And writing again yields identical bytes.
        let mut again = Vec::new();
        write_params(&mut again, &back, PersistMode::Binary).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn text_round_trip_preserves_values() {
        let model = sample_model();
        let mut buf = Vec::new();
        write_params(&mut buf, &model, PersistMode::Text).unwrap();
        let back = read_params(buf.as_slice(), "test").unwrap();
        // Shortest round-trip float formatting parses back to the same bits.
        assert_eq!(back.params, model.params);
    }

    #[test]
    fn truncation_and_bad_headers_rejected() {
        let model = sample_model();
        let mut buf = Vec::new();
        write_params(&mut buf, &model, PersistMode::Binary).unwrap();
        assert!(read_params(&buf[..buf.len() - 40], "test").is_err());
        assert!(read_params("routemix-model 1 gzip\n".as_bytes(), "test").is_err());
    }
}
