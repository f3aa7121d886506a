//! Matrix and image-sequence file formats.
//!
//! Two matrix encodings are supported. `csv` is comma-separated text, one
//! row per line, with an optional single header line that is auto-detected
//! (a first line that does not parse as numbers is skipped). Values are
//! written with 17 significant digits, which round-trips every finite `f64`
//! exactly. `f64le` is a binary format: the magic bytes `GDMX`, the row and
//! column counts as 64-bit little-endian unsigned integers, then the entries
//! as 64-bit little-endian floats in row-major order; it round-trips
//! bit-exactly. Non-finite entries are rejected on load in both formats.
//!
//! Image sequences are directories of binary PGM (`P5`) files with maxval
//! at most 255. Frames are taken in lexicographic file-name order; frame `t`
//! becomes row `t` of the matrix, pixel (row `i`, column `j`) of a `w`-wide
//! frame lands in matrix column `j + i*w`, and bytes are scaled to `[0, 1]`
//! by dividing by 255.

use std::fs;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::Deserialize;
use unmix::DenseMatrix;

use crate::error::CliError;

/// On-disk matrix encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixFormat {
    Csv,
    F64le,
}

impl MatrixFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MatrixFormat::Csv => "csv",
            MatrixFormat::F64le => "f64le",
        }
    }

    /// Infers the format from a file extension (`.csv` or `.f64le`).
    pub fn infer(path: &Path) -> Result<Self, CliError> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(MatrixFormat::Csv),
            Some("f64le") => Ok(MatrixFormat::F64le),
            _ => Err(CliError::Config(format!(
                "cannot infer matrix format of {}; use an explicit format flag",
                path.display()
            ))),
        }
    }
}

const F64LE_MAGIC: &[u8; 4] = b"GDMX";
const F64LE_HEADER: usize = 4 + 8 + 8;

/// Writes `bytes` to `path` atomically: the data lands in a temporary file
/// in the same directory and is renamed over the target, so readers never
/// observe a half-written artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(|e| CliError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.flush().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<DenseMatrix, CliError> {
    match format {
        MatrixFormat::Csv => load_csv(path),
        MatrixFormat::F64le => load_f64le(path),
    }
}

pub fn save_matrix(path: &Path, m: &DenseMatrix, format: MatrixFormat) -> Result<(), CliError> {
    match format {
        MatrixFormat::Csv => write_atomic(path, csv_bytes(m).as_bytes()),
        MatrixFormat::F64le => write_atomic(path, &f64le_bytes(m)),
    }
}

fn csv_bytes(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.16e}", m.get(i, j)));
        }
        out.push('\n');
    }
    out
}

enum RowError {
    /// The line is not numeric at all — as a first line this means a header.
    NotNumeric(String),
    /// The line is numeric but holds a NaN or infinity, which no input may.
    NonFinite(String),
}

fn parse_csv_row(line: &str) -> Result<Vec<f64>, RowError> {
    let mut row = Vec::new();
    for (col, token) in line.split(',').enumerate() {
        let value: f64 = token.trim().parse().map_err(|_| {
            RowError::NotNumeric(format!("column {}: not a number: {:?}", col + 1, token.trim()))
        })?;
        if !value.is_finite() {
            return Err(RowError::NonFinite(format!(
                "column {}: non-finite value {value}",
                col + 1
            )));
        }
        row.push(value);
    }
    Ok(row)
}

fn load_csv(path: &Path) -> Result<DenseMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut cols = 0usize;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            return Err(CliError::input(path, format!("line {}: empty line", idx + 1)));
        }
        match parse_csv_row(line) {
            Ok(row) => {
                if rows.is_empty() {
                    cols = row.len();
                } else if row.len() != cols {
                    return Err(CliError::input(
                        path,
                        format!("line {}: expected {} columns, found {}", idx + 1, cols, row.len()),
                    ));
                }
                rows.push(row);
            }
            // A non-numeric first line is a header; anywhere else it is an
            // error at that line. Non-finite values are never a header.
            Err(RowError::NotNumeric(_)) if idx == 0 => {}
            Err(RowError::NotNumeric(detail)) | Err(RowError::NonFinite(detail)) => {
                return Err(CliError::input(path, format!("line {}: {detail}", idx + 1)));
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::input(path, "no data rows"));
    }
    let data: Vec<f64> = rows.concat();
    DenseMatrix::from_vec(rows.len(), cols, data)
        .map_err(|e| CliError::input(path, e.to_string()))
}

fn f64le_bytes(m: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(F64LE_HEADER + 8 * m.data().len());
    out.extend_from_slice(F64LE_MAGIC);
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for &v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn load_f64le(path: &Path) -> Result<DenseMatrix, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if bytes.len() < F64LE_HEADER {
        return Err(CliError::input(
            path,
            format!("truncated header: {} bytes, need {F64LE_HEADER}", bytes.len()),
        ));
    }
    if &bytes[..4] != F64LE_MAGIC {
        return Err(CliError::input(path, "bad magic at byte 0: expected \"GDMX\""));
    }
    let rows = u64::from_le_bytes(bytes[4..12].try_into().expect("slice length is 8"));
    let cols = u64::from_le_bytes(bytes[12..20].try_into().expect("slice length is 8"));
    let (rows, cols) = (
        usize::try_from(rows)
            .map_err(|_| CliError::input(path, format!("row count {rows} overflows")))?,
        usize::try_from(cols)
            .map_err(|_| CliError::input(path, format!("column count {cols} overflows")))?,
    );
    let count = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| CliError::input(path, format!("{rows} x {cols} overflows")))?;
    if bytes.len() != F64LE_HEADER + count {
        return Err(CliError::input(
            path,
            format!(
                "payload of {rows} x {cols} needs {} bytes, file has {}",
                F64LE_HEADER + count,
                bytes.len()
            ),
        ));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (idx, chunk) in bytes[F64LE_HEADER..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("chunk length is 8"));
        if !v.is_finite() {
            return Err(CliError::input(
                path,
                format!("non-finite value at byte {}", F64LE_HEADER + 8 * idx),
            ));
        }
        data.push(v);
    }
    DenseMatrix::from_vec(rows, cols, data).map_err(|e| CliError::input(path, e.to_string()))
}

/// One decoded grayscale frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

fn pgm_token(bytes: &[u8], pos: &mut usize) -> Option<u64> {
    // Whitespace and '#'-to-end-of-line comments may separate header tokens.
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if *pos == start {
        return None;
    }
    std::str::from_utf8(&bytes[start..*pos]).ok()?.parse().ok()
}

/// Decodes a binary (`P5`) PGM file with maxval at most 255.
pub fn load_pgm(path: &Path) -> Result<Frame, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(CliError::input(path, "not a binary PGM (magic \"P5\" missing)"));
    }
    let mut pos = 2;
    let width = pgm_token(&bytes, &mut pos)
        .ok_or_else(|| CliError::input(path, "missing or malformed width"))?;
    let height = pgm_token(&bytes, &mut pos)
        .ok_or_else(|| CliError::input(path, "missing or malformed height"))?;
    let maxval = pgm_token(&bytes, &mut pos)
        .ok_or_else(|| CliError::input(path, "missing or malformed maxval"))?;
    if width == 0 || height == 0 {
        return Err(CliError::input(path, format!("degenerate size {width} x {height}")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(CliError::input(
            path,
            format!("maxval {maxval} unsupported (must be 1..=255)"),
        ));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(CliError::input(path, "expected single whitespace after maxval"));
    }
    pos += 1;
    let (width, height) = (width as usize, height as usize);
    let need = width * height;
    let have = bytes.len() - pos;
    if have < need {
        return Err(CliError::input(
            path,
            format!("truncated pixel data: need {need} bytes, found {have}"),
        ));
    }
    if have > need {
        return Err(CliError::input(
            path,
            format!("{} unexpected trailing bytes", have - need),
        ));
    }
    Ok(Frame {
        width,
        height,
        pixels: bytes[pos..].to_vec(),
    })
}

/// Writes a binary (`P5`) PGM file with maxval 255, atomically.
pub fn save_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<(), CliError> {
    if pixels.len() != width * height {
        return Err(CliError::Config(format!(
            "frame buffer holds {} bytes, {width} x {height} needs {}",
            pixels.len(),
            width * height
        )));
    }
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    bytes.extend_from_slice(pixels);
    write_atomic(path, &bytes)
}

/// Loads every `.pgm` file in `dir` (lexicographic name order) into a
/// frames-as-rows matrix scaled to `[0, 1]`. Also returns the frame width
/// and height, which every file must share.
pub fn load_frames(dir: &Path) -> Result<(DenseMatrix, usize, usize), CliError> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
        })
        .collect();
    paths.sort_by_key(|p| p.file_name().map(|n| n.to_os_string()));
    if paths.is_empty() {
        return Err(CliError::input(dir, "no .pgm frames found"));
    }
    let mut frames = Vec::with_capacity(paths.len());
    let first = load_pgm(&paths[0])?;
    let (width, height) = (first.width, first.height);
    frames.push(first);
    for path in &paths[1..] {
        let frame = load_pgm(path)?;
        if frame.width != width || frame.height != height {
            return Err(CliError::input(
                path,
                format!(
                    "frame is {} x {}, earlier frames are {width} x {height}",
                    frame.width, frame.height
                ),
            ));
        }
        frames.push(frame);
    }
    let matrix = DenseMatrix::from_fn(frames.len(), width * height, |t, p| {
        frames[t].pixels[p] as f64 / 255.0
    })
    .map_err(|e| CliError::input(dir, e.to_string()))?;
    Ok((matrix, width, height))
}
