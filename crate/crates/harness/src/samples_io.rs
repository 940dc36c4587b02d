//! Tab-separated sample files.
//!
//! ```text
//! # flagbeta-samples 1
//! # n=3 field=r lambda=1.5,1.5 seed=7 count=2
//! index  stream  z_1_2_r  z_1_3_r  z_2_3_r  log_density
//! 0  0  0.41  -1.2  0.03  -1.37
//! ```
//!
//! Columns are separated by single tabs (shown as spaces above). Entries
//! follow row-major order of the strict upper triangle; each entry takes
//! `kappa` columns with suffixes `r`, `i`, `j`, `k`. Numbers are written
//! in their shortest round-trip decimal form.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::path::Path;

use flagbeta::closed_form::pairs;
use flagbeta::sampler::sample_flags;
use flagbeta::{FieldTag, MeasureSpec, Scalar, UnitriangularMatrix};

pub const MAGIC: &str = "# flagbeta-samples 1";
const SUFFIXES: [&str; 4] = ["r", "i", "j", "k"];

pub fn header(n: usize, tag: FieldTag) -> String {
    let mut cols = vec!["index".to_string(), "stream".to_string()];
    for (p, q) in pairs(n) {
        for s in &SUFFIXES[..tag.kappa()] {
            cols.push(format!("z_{p}_{q}_{s}"));
        }
    }
    cols.push("log_density".into());
    cols.join("\t")
}

/// Renders `count` samples of `spec` drawn from `seed`.
pub fn render_samples(spec: &MeasureSpec, count: usize, seed: u64) -> flagbeta::Result<String> {
    let samples = sample_flags(spec, count, seed, 0)?;
    let lambda: Vec<String> = spec.lambda().iter().map(f64::to_string).collect();
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "# n={} field={} lambda={} seed={seed} count={count}", spec.n(), spec.tag().code(), lambda.join(","))
        .unwrap();
    writeln!(out, "{}", header(spec.n(), spec.tag())).unwrap();
    for s in &samples {
        write!(out, "{}\t{}", s.seed_info.index, s.seed_info.stream).unwrap();
        for e in s.z.entries() {
            for x in e.components() {
                write!(out, "\t{x}").unwrap();
            }
        }
        writeln!(out, "\t{}", s.log_density).unwrap();
    }
    Ok(out)
}

#[derive(Debug)]
pub enum EmitError {
    Sampling(flagbeta::Error),
    Io(io::Error),
}

impl std::fmt::Display for EmitError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EmitError::Sampling(e) => write!(f, "sampling failed: {e}"),
            EmitError::Io(e) => write!(f, "cannot write samples: {e}"),
        }
    }
}

impl std::error::Error for EmitError {}

pub fn emit_samples(spec: &MeasureSpec, count: usize, seed: u64, path: &Path) -> Result<(), EmitError> {
    let text = render_samples(spec, count, seed).map_err(EmitError::Sampling)?;
    let mut f = io::BufWriter::new(std::fs::File::create(path).map_err(EmitError::Io)?);
    f.write_all(text.as_bytes()).map_err(EmitError::Io)?;
    f.flush().map_err(EmitError::Io)
}

/// One parsed record.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub index: u64,
    pub stream: u64,
    pub z: UnitriangularMatrix,
    pub log_density: f64,
}

/// Reads a file written by [`emit_samples`] for matrices of order `n` over `tag`.
pub fn read_samples(reader: impl BufRead, n: usize, tag: FieldTag) -> io::Result<Vec<SampleRecord>> {
    let invalid = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let expected_header = header(n, tag);
    let mut saw_header = false;
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != expected_header {
                return Err(invalid(format!("line {}: unexpected header {line:?}", lineno + 1)));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let kappa = tag.kappa();
        let width = 3 + kappa * n * (n - 1) / 2;
        if fields.len() != width {
            return Err(invalid(format!("line {}: {} fields, expected {width}", lineno + 1, fields.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| invalid(format!("line {}: {e}", lineno + 1)));
        let int = |s: &str| s.parse::<u64>().map_err(|e| invalid(format!("line {}: {e}", lineno + 1)));
        let comps: Vec<f64> = fields[2..width - 1].iter().map(|s| num(s)).collect::<io::Result<_>>()?;
        let entries: Vec<Scalar> = comps.chunks(kappa).map(|c| Scalar::from_components(c, tag)).collect();
        let z = UnitriangularMatrix::from_entries(n, tag, &entries).map_err(|e| invalid(e.to_string()))?;
        out.push(SampleRecord {
            index: int(fields[0])?,
            stream: int(fields[1])?,
            z,
            log_density: num(fields[width - 1])?,
        });
    }
    if !saw_header {
        return Err(invalid("missing header line".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_of_a_small_file() {
        let spec = MeasureSpec::default_for(3, FieldTag::Real);
        let text = render_samples(&spec, 10, 7).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 13);
        assert_eq!(lines[2], "index\tstream\tz_1_2_r\tz_1_3_r\tz_2_3_r\tlog_density");
        assert!(lines[3..].iter().all(|l| l.split('\t').count() == 6));
    }

    #[test]
    fn round_trip_and_density() {
        for tag in FieldTag::ALL {
            let spec = MeasureSpec::default_for(4, tag);
            let text = render_samples(&spec, 300, 3).unwrap();
            let recs = read_samples(text.as_bytes(), 4, tag).unwrap();
            assert_eq!(recs.len(), 300);
            let direct = sample_flags(&spec, 300, 3, 0).unwrap();
            for (r, d) in recs.iter().zip(&direct) {
                assert_eq!(r.z, d.z);
                assert_eq!(r.log_density, d.log_density);
                let again = spec.log_density(&r.z).unwrap();
                assert!((again - r.log_density).abs() <= 1e-10 * r.log_density.abs().max(1.0));
            }
        }
    }

    #[test]
    fn rejects_wrong_header() {
        let spec = MeasureSpec::default_for(2, FieldTag::Complex);
        let text = render_samples(&spec, 3, 1).unwrap();
        assert!(read_samples(text.as_bytes(), 2, FieldTag::Real).is_err());
    }
}
