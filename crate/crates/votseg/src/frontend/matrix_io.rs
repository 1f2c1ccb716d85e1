//! Plain-text feature matrices.
//!
//! ```text
//! 3 2
//! 0.5 -1.25
//! 0.0 2.0
//! 1e-3 4.0
//! ```
//!
//! The header holds `T` and `D`; each following line one frame of `D`
//! whitespace-separated reals. Values are written in shortest round-trip
//! form, so write-then-load is bit exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::seg::FeatureSequence;

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<Array2<f64>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, header) = lines
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(parse_err(path, hline, "header must be \"T D\""));
    }
    let parse_dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(path, hline, format!("bad header value {s:?}")))
    };
    let (t, d) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    if d == 0 {
        return Err(parse_err(path, hline, "D must be positive"));
    }

    let mut data = Vec::with_capacity(t * d);
    let mut rows = 0;
    let mut last_line = hline;
    for (no, line) in lines {
        last_line = no;
        if line.trim().is_empty() {
            continue;
        }
        if rows == t {
            return Err(parse_err(path, no, format!("more than the declared {t} rows")));
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(path, no, format!("not a number: {tok:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(path, no, format!("non-finite value {tok:?}")));
            }
            data.push(v);
        }
        let got = data.len() - before;
        if got != d {
            return Err(parse_err(path, no, format!("expected {d} values, found {got}")));
        }
        rows += 1;
    }
    if rows != t {
        return Err(parse_err(
            path,
            last_line,
            format!("header declares {t} rows but the file has {rows}"),
        ));
    }
    Ok(Array2::from_shape_vec((t, d), data).expect("row lengths were checked"))
}

/// Reads a precomputed feature file verbatim.
pub fn load_precomputed(path: &Path, frame_period_ms: f64) -> Result<FeatureSequence> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m = parse_matrix(&text, path)?;
    FeatureSequence::new(m, frame_period_ms).map_err(|e| match e {
        Error::Contract(msg) => parse_err(path, 1, msg),
        other => other,
    })
}

/// Reads only the header of a feature file and returns `(T, D)`.
pub fn read_header(path: &Path) -> Result<(usize, usize)> {
    use std::io::{BufRead, BufReader};
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<usize> = line
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| parse_err(path, i + 1, "bad header")))
            .collect::<Result<_>>()?;
        if v.len() != 2 {
            return Err(parse_err(path, i + 1, "header must be \"T D\""));
        }
        return Ok((v[0], v[1]));
    }
    Err(parse_err(path, 1, "empty file"))
}

pub fn format_matrix(m: &Array2<f64>) -> String {
    let mut out = String::with_capacity(m.len() * 12);
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for row in m.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v:?}");
        }
        out.push('\n');
    }
    out
}

pub fn write_precomputed(path: &Path, x: &FeatureSequence) -> Result<()> {
    fs::write(path, format_matrix(x.frames())).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_rows() {
        let m = parse_matrix("3 2\n1 2\n3 4\n5 6\n", Path::new("x")).unwrap();
        assert_eq!(m.dim(), (3, 2));
        assert_eq!(m[[2, 1]], 6.0);
    }

    #[test]
    fn short_row_reports_line() {
        match parse_matrix("3 2\n1 2\n3\n5 6\n", Path::new("x")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn row_count_mismatch() {
        assert!(parse_matrix("3 2\n1 2\n", Path::new("x")).is_err());
        assert!(parse_matrix("1 2\n1 2\n3 4\n", Path::new("x")).is_err());
        assert!(parse_matrix("", Path::new("x")).is_err());
        assert!(parse_matrix("2 x\n", Path::new("x")).is_err());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = Array2::from_shape_vec(
            (2, 3),
            vec![0.1, -1e-300, 1.0 / 3.0, 12345.678, f64::MIN_POSITIVE, -0.0],
        )
        .unwrap();
        let back = parse_matrix(&format_matrix(&m), Path::new("x")).unwrap();
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
