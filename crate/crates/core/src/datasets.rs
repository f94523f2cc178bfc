//! Synthetic signal generators and CSV input/output.
//!
//! CSV layout: one row per signal, `N` numeric sample columns, then an
//! integer class-id column. The header row is optional.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::SeedStream;
use crate::types::{Matrix, MulticlassDataset};

pub const WAVEFORM_LENGTH: usize = 32;
pub const SHAPE_LENGTH: usize = 128;

/// Triangular bump `max(6 - |i - 7|, 0)`, 1-based `i`.
pub fn h1(i: i64) -> f64 {
    (6 - (i - 7).abs()).max(0) as f64
}

pub fn h2(i: i64) -> f64 {
    h1(i - 8)
}

pub fn h3(i: i64) -> f64 {
    h1(i - 4)
}

type Bump = fn(i64) -> f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaveformSpec {
    pub per_class_count: usize,
    pub seed: u64,
}

/// One Waveform signal of class 1, 2 or 3 for mixing weight `u` and noise `eps`.
pub fn waveform_signal(class: u32, u: f64, eps: &[f64]) -> Vec<f64> {
    let (a, b): (Bump, Bump) = match class {
        1 => (h1, h2),
        2 => (h1, h3),
        3 => (h2, h3),
        _ => panic!("waveform class {class} is not 1, 2 or 3"),
    };
    (1..=eps.len() as i64)
        .zip(eps)
        .map(|(i, e)| u * a(i) + (1.0 - u) * b(i) + e)
        .collect()
}

/// Three-class Waveform signals of length 32, `per_class_count` of each class
/// in class order. Per signal, `u` is drawn first, then the 32 noise samples.
pub fn generate_waveform(spec: &WaveformSpec) -> Result<MulticlassDataset> {
    if spec.per_class_count == 0 {
        return Err(Error::config("per-class count must be at least 1"));
    }
    let mut rng = SeedStream::new(spec.seed).child(0);
    let total = 3 * spec.per_class_count;
    let mut data = Vec::with_capacity(total * WAVEFORM_LENGTH);
    let mut ids = Vec::with_capacity(total);
    let mut eps = vec![0.0; WAVEFORM_LENGTH];
    for class in 1..=3u32 {
        for _ in 0..spec.per_class_count {
            let u: f64 = rng.random();
            for e in eps.iter_mut() {
                *e = rng.sample(StandardNormal);
            }
            data.extend(waveform_signal(class, u, &eps));
            ids.push(class);
        }
    }
    MulticlassDataset::new(Matrix::from_row_slice(total, WAVEFORM_LENGTH, &data), ids)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapeSpec {
    pub per_class_count: usize,
    pub seed: u64,
}

/// Cylinder (1), bell (2) or funnel (3) of amplitude `6 + eta` on `[a, b]`,
/// sampled at `t = 1..=eps.len()`.
pub fn cbf_signal(class: u32, a: usize, b: usize, eta: f64, eps: &[f64]) -> Vec<f64> {
    assert!(b > a, "shape interval must be non-empty");
    let amp = 6.0 + eta;
    let span = (b - a) as f64;
    (1..=eps.len())
        .zip(eps)
        .map(|(t, e)| {
            let body = if (a..=b).contains(&t) {
                match class {
                    1 => amp,
                    2 => amp * (t - a) as f64 / span,
                    3 => amp * (b - t) as f64 / span,
                    _ => panic!("shape class {class} is not 1, 2 or 3"),
                }
            } else {
                0.0
            };
            body + e
        })
        .collect()
}

/// Cylinder-bell-funnel signals of length 128. Per signal: `eta`, then the
/// onset `a` in `16..=32`, the duration `b - a` in `32..=96`, then noise.
pub fn generate_shape(spec: &ShapeSpec) -> Result<MulticlassDataset> {
    if spec.per_class_count == 0 {
        return Err(Error::config("per-class count must be at least 1"));
    }
    let mut rng = SeedStream::new(spec.seed).child(1);
    let total = 3 * spec.per_class_count;
    let mut data = Vec::with_capacity(total * SHAPE_LENGTH);
    let mut ids = Vec::with_capacity(total);
    let mut eps = vec![0.0; SHAPE_LENGTH];
    for class in 1..=3u32 {
        for _ in 0..spec.per_class_count {
            let eta: f64 = rng.sample(StandardNormal);
            let a = rng.random_range(16..=32usize);
            let b = a + rng.random_range(32..=96usize);
            for e in eps.iter_mut() {
                *e = rng.sample(StandardNormal);
            }
            data.extend(cbf_signal(class, a, b, eta, &eps));
            ids.push(class);
        }
    }
    MulticlassDataset::new(Matrix::from_row_slice(total, SHAPE_LENGTH, &data), ids)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvSchema {
    /// First row is a header and is skipped.
    pub header: bool,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema { header: true }
    }
}

fn load_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Load {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Reads raw numeric rows, checking they are rectangular.
fn read_rows(path: &Path, schema: CsvSchema) -> Result<(Vec<Vec<String>>, usize)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| load_err(path, e.to_string()))?;
    let first_line = if schema.header { 2 } else { 1 };
    let mut rows = Vec::new();
    let mut width = None;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| load_err(path, e.to_string()))?;
        let fields: Vec<String> = record.iter().map(str::to_owned).collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(load_err(
                    path,
                    format!("row {}: {} columns, expected {w}", r + first_line, fields.len()),
                ))
            }
            _ => {}
        }
        rows.push(fields);
    }
    if rows.is_empty() {
        return Err(load_err(path, "no data rows"));
    }
    Ok((rows, first_line))
}

fn parse_cell(path: &Path, line: usize, col: usize, cell: &str) -> Result<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
        load_err(
            path,
            format!("row {line}, column {}: '{cell}' is not a finite number", col + 1),
        )
    })
}

/// Loads a labelled dataset: `N` sample columns followed by an integer class id.
pub fn load_csv(path: impl AsRef<Path>, schema: CsvSchema) -> Result<MulticlassDataset> {
    let path = path.as_ref();
    let (rows, first_line) = read_rows(path, schema)?;
    let width = rows[0].len();
    if width.is_power_of_two() {
        return Err(load_err(
            path,
            format!(
                "{width} columns cannot be N samples plus a class id with N a power of two \
                 (is the class-id column missing?)"
            ),
        ));
    }
    let n = width - 1;
    if n < 2 || !n.is_power_of_two() {
        return Err(load_err(path, format!("signal width {n} is not a power of two")));
    }
    let mut data = Vec::with_capacity(rows.len() * n);
    let mut ids = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let line = r + first_line;
        for (c, cell) in row[..n].iter().enumerate() {
            data.push(parse_cell(path, line, c, cell)?);
        }
        let label = &row[n];
        let id = label
            .parse::<u32>()
            .ok()
            .or_else(|| {
                label
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.fract() == 0.0 && *v >= 0.0 && *v <= u32::MAX as f64)
                    .map(|v| v as u32)
            })
            .ok_or_else(|| {
                load_err(
                    path,
                    format!("row {line}: class id '{label}' is not a non-negative integer"),
                )
            })?;
        ids.push(id);
    }
    MulticlassDataset::new(Matrix::from_row_slice(rows.len(), n, &data), ids)
}

/// Loads unlabelled signals (every column is a sample).
pub fn load_signals_csv(path: impl AsRef<Path>, schema: CsvSchema) -> Result<Matrix> {
    let path = path.as_ref();
    let (rows, first_line) = read_rows(path, schema)?;
    let n = rows[0].len();
    if n < 2 || !n.is_power_of_two() {
        return Err(load_err(path, format!("signal width {n} is not a power of two")));
    }
    let mut data = Vec::with_capacity(rows.len() * n);
    for (r, row) in rows.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            data.push(parse_cell(path, r + first_line, c, cell)?);
        }
    }
    Ok(Matrix::from_row_slice(rows.len(), n, &data))
}

/// Writes a numeric table with an optional trailing integer column.
pub fn write_table(
    path: impl AsRef<Path>,
    header: Option<&[String]>,
    values: &Matrix,
    trailing: Option<(&str, &[u32])>,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    if let Some(names) = header {
        let mut cols: Vec<&str> = names.iter().map(String::as_str).collect();
        if let Some((name, _)) = trailing {
            cols.push(name);
        }
        writeln!(out, "{}", cols.join(","))?;
    }
    for (i, row) in values.row_iter().enumerate() {
        let mut line = row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        if let Some((_, ids)) = trailing {
            line.push(',');
            line.push_str(&ids[i].to_string());
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a dataset in the layout [`load_csv`] reads.
pub fn save_csv(dataset: &MulticlassDataset, path: impl AsRef<Path>, schema: CsvSchema) -> Result<()> {
    let header: Vec<String> = (1..=dataset.signal_length()).map(|i| format!("s{i}")).collect();
    write_table(
        path,
        schema.header.then_some(header.as_slice()),
        dataset.signals(),
        Some(("class", dataset.class_ids())),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_values() {
        assert_eq!(h1(7), 6.0);
        assert_eq!(h1(1), 0.0);
        assert_eq!(h1(13), 0.0);
        assert_eq!(h1(5), 4.0);
        assert_eq!(h2(15), 6.0);
        assert_eq!(h3(11), 6.0);
    }

    #[test]
    fn noiseless_mixture_endpoints() {
        let zeros = vec![0.0; 32];
        let x = waveform_signal(1, 1.0, &zeros);
        for i in 1..=32 {
            assert_eq!(x[i - 1], h1(i as i64));
        }
        let x = waveform_signal(3, 0.25, &zeros);
        for i in 1..=32i64 {
            assert_eq!(x[i as usize - 1], 0.25 * h2(i) + 0.75 * h3(i));
        }
    }

    #[test]
    fn waveform_shape_and_determinism() {
        let spec = WaveformSpec {
            per_class_count: 10,
            seed: 7,
        };
        let a = generate_waveform(&spec).unwrap();
        assert_eq!(a.signals().shape(), (30, 32));
        assert_eq!(a.class_count(1), 10);
        assert_eq!(a.class_count(3), 10);
        assert_eq!(a, generate_waveform(&spec).unwrap());
        assert_ne!(a, generate_waveform(&WaveformSpec { seed: 8, ..spec }).unwrap());
        assert!(generate_waveform(&WaveformSpec {
            per_class_count: 0,
            seed: 1
        })
        .is_err());
    }

    #[test]
    fn waveform_class_mean_difference() {
        // E[x1 - x2] = (1 - E[u]) (h2 - h3) = (h2 - h3) / 2
        let n = 100_000;
        let ds = generate_waveform(&WaveformSpec {
            per_class_count: n,
            seed: 3,
        })
        .unwrap();
        for i in 0..32 {
            let mean = |class: usize| (0..n).map(|r| ds.signals()[(class * n + r, i)]).sum::<f64>() / n as f64;
            let expected = 0.5 * (h2(i as i64 + 1) - h3(i as i64 + 1));
            assert!((mean(0) - mean(1) - expected).abs() < 0.05, "sample {}", i + 1);
        }
    }

    #[test]
    fn noiseless_cbf() {
        let zeros = vec![0.0; 128];
        let (a, b) = (20, 70);
        let cyl = cbf_signal(1, a, b, 0.0, &zeros);
        for t in 1..=128 {
            let expect = if (a..=b).contains(&t) { 6.0 } else { 0.0 };
            assert_eq!(cyl[t - 1], expect);
        }
        let bell = cbf_signal(2, a, b, 0.5, &zeros);
        assert_eq!(bell[a - 1], 0.0);
        assert_eq!(bell[b - 1], 6.5);
        let funnel = cbf_signal(3, a, b, 0.5, &zeros);
        assert_eq!(funnel[a - 1], 6.5);
        assert_eq!(funnel[b - 1], 0.0);
    }

    #[test]
    fn cbf_slope_separates_noiseless_classes() {
        let zeros = vec![0.0; 128];
        for (a, len) in [(16, 32), (25, 60), (32, 96)] {
            let b = a + len;
            let slopes: Vec<f64> = (1..=3)
                .map(|class| {
                    let x = cbf_signal(class, a, b, 0.0, &zeros);
                    // least-squares slope over the active region
                    let ts: Vec<f64> = (a..=b).map(|t| t as f64).collect();
                    let ys: Vec<f64> = (a..=b).map(|t| x[t - 1]).collect();
                    let tm = ts.iter().sum::<f64>() / ts.len() as f64;
                    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
                    let cov: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
                    let var: f64 = ts.iter().map(|t| (t - tm).powi(2)).sum();
                    cov / var
                })
                .collect();
            assert!(slopes[0].abs() < 1e-12);
            assert!(slopes[1] > 0.01);
            assert!(slopes[2] < -0.01);
        }
    }

    #[test]
    fn shape_dimensions() {
        let ds = generate_shape(&ShapeSpec {
            per_class_count: 5,
            seed: 1,
        })
        .unwrap();
        assert_eq!(ds.signals().shape(), (15, 128));
        assert_eq!(ds.classes(), vec![1, 2, 3]);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate_waveform(&WaveformSpec {
            per_class_count: 4,
            seed: 2,
        })
        .unwrap();
        for header in [true, false] {
            let path = dir.path().join(format!("w{header}.csv"));
            save_csv(&ds, &path, CsvSchema { header }).unwrap();
            assert_eq!(load_csv(&path, CsvSchema { header }).unwrap(), ds);
        }
    }

    #[test]
    fn csv_rejections() {
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, body: &str| {
            let p = dir.path().join(name);
            std::fs::write(&p, body).unwrap();
            p
        };
        let schema = CsvSchema { header: false };
        // 31 samples plus label
        let row31 = format!("{},1\n", vec!["0.5"; 31].join(","));
        let err = load_csv(write("w31.csv", &row31), schema).unwrap_err();
        assert!(err.to_string().contains("power of two"), "{err}");
        // four samples, no label
        let err = load_csv(write("nolabel.csv", "1,2,3,4\n"), schema).unwrap_err();
        assert!(err.to_string().contains("missing"), "{err}");
        let err = load_csv(write("ragged.csv", "1,2,0\n1,2,3,0\n"), schema).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
        let err = load_csv(write("nan.csv", "1,x,0\n"), schema).unwrap_err();
        assert!(err.to_string().contains("column 2"), "{err}");
        let err = load_csv(write("lab.csv", "1,2,-1\n"), schema).unwrap_err();
        assert!(err.to_string().contains("class id"), "{err}");
        assert!(err.is_data());
    }

    #[test]
    fn unlabelled_signals() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        std::fs::write(&p, "a,b\n1,2\n3,4\n").unwrap();
        let m = load_signals_csv(&p, CsvSchema { header: true }).unwrap();
        assert_eq!(m, Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    }
}
