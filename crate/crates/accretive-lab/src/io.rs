//! Matrix file interchange: Matrix Market complex matrices (array and
//! coordinate forms) plus a JSON form for hand-authored fixtures.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::numerics::CMatrix;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Deserialize)]
struct JsonMatrix {
    dim: usize,
    /// row-major [re, im] pairs
    entries: Vec<[f64; 2]>,
}

/// Reads Matrix Market (`%%MatrixMarket matrix array|coordinate complex
/// general`) or the JSON form `{"dim": n, "entries": [[re, im], ...]}`.
pub fn read_matrix(path: &Path) -> Result<CMatrix> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        read_json_matrix(&text)
    } else {
        read_matrix_market(&text)
    }
}

fn read_json_matrix(text: &str) -> Result<CMatrix> {
    let parsed: JsonMatrix =
        serde_json::from_str(text).map_err(|e| parse_err(e.line(), e.to_string()))?;
    let n = parsed.dim;
    if n == 0 {
        return Err(parse_err(1, "dim must be positive"));
    }
    if parsed.entries.len() != n * n {
        return Err(parse_err(
            1,
            format!("expected {} entries for dim {n}, got {}", n * n, parsed.entries.len()),
        ));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| {
        let [re, im] = parsed.entries[i * n + j];
        Complex64::new(re, im)
    }))
}

fn read_matrix_market(text: &str) -> Result<CMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 5
        || !tokens[0].eq_ignore_ascii_case("%%MatrixMarket")
        || !tokens[1].eq_ignore_ascii_case("matrix")
    {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix <format> complex general'"));
    }
    let format = tokens[2].to_ascii_lowercase();
    if format != "array" && format != "coordinate" {
        return Err(parse_err(1, format!("unsupported format '{}'", tokens[2])));
    }
    if !tokens[3].eq_ignore_ascii_case("complex") || !tokens[4].eq_ignore_ascii_case("general") {
        return Err(parse_err(1, "only 'complex general' matrices are supported"));
    }

    let mut data_lines = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });

    let (size_lineno, size_line) = data_lines
        .next()
        .ok_or_else(|| parse_err(1, "missing size line"))?;
    let size_lineno = size_lineno + 1;
    let size: Vec<&str> = size_line.split_whitespace().collect();

    if format == "array" {
        if size.len() != 2 {
            return Err(parse_err(size_lineno, "array size line must be 'rows cols'"));
        }
        let rows: usize = size[0]
            .parse()
            .map_err(|_| parse_err(size_lineno, "bad row count"))?;
        let cols: usize = size[1]
            .parse()
            .map_err(|_| parse_err(size_lineno, "bad column count"))?;
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let mut entries = Vec::with_capacity(rows * cols);
        for (lineno, line) in data_lines {
            let lineno = lineno + 1;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(parse_err(lineno, "array entry must be 're im'"));
            }
            let re: f64 = parts[0]
                .parse()
                .map_err(|_| parse_err(lineno, "bad real part"))?;
            let im: f64 = parts[1]
                .parse()
                .map_err(|_| parse_err(lineno, "bad imaginary part"))?;
            entries.push(Complex64::new(re, im));
        }
        if entries.len() != rows * cols {
            return Err(parse_err(
                size_lineno,
                format!("expected {} entries, got {}", rows * cols, entries.len()),
            ));
        }
        // array form is column-major
        Ok(CMatrix::from_fn(rows, cols, |i, j| entries[j * rows + i]))
    } else {
        if size.len() != 3 {
            return Err(parse_err(size_lineno, "coordinate size line must be 'rows cols nnz'"));
        }
        let rows: usize = size[0]
            .parse()
            .map_err(|_| parse_err(size_lineno, "bad row count"))?;
        let cols: usize = size[1]
            .parse()
            .map_err(|_| parse_err(size_lineno, "bad column count"))?;
        let nnz: usize = size[2]
            .parse()
            .map_err(|_| parse_err(size_lineno, "bad entry count"))?;
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let mut m = CMatrix::zeros(rows, cols);
        let mut seen = 0usize;
        for (lineno, line) in data_lines {
            let lineno = lineno + 1;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(parse_err(lineno, "coordinate entry must be 'i j re im'"));
            }
            let i: usize = parts[0]
                .parse()
                .map_err(|_| parse_err(lineno, "bad row index"))?;
            let j: usize = parts[1]
                .parse()
                .map_err(|_| parse_err(lineno, "bad column index"))?;
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(parse_err(lineno, "index out of range (1-based)"));
            }
            let re: f64 = parts[2]
                .parse()
                .map_err(|_| parse_err(lineno, "bad real part"))?;
            let im: f64 = parts[3]
                .parse()
                .map_err(|_| parse_err(lineno, "bad imaginary part"))?;
            m[(i - 1, j - 1)] = Complex64::new(re, im);
            seen += 1;
        }
        if seen != nnz {
            return Err(parse_err(
                size_lineno,
                format!("expected {nnz} entries, got {seen}"),
            ));
        }
        Ok(m)
    }
}

/// Writes the Matrix Market array form with shortest round-trip floats.
pub fn write_matrix(m: &CMatrix, path: &Path) -> Result<()> {
    let mut out = String::from("%%MatrixMarket matrix array complex general\n");
    out.push_str(&format!("{} {}\n", m.nrows(), m.ncols()));
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            out.push_str(&format!("{:?} {:?}\n", z.re, z.im));
        }
    }
    fs::write(path, out)?;
    Ok(())
}
