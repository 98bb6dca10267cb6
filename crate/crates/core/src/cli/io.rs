//! On-disk formats: JSON for parameters, paths, configs and reports,
//! headerless CSV for data matrices.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{Architecture, Dataset, NetworkParams};
use crate::objective::{ConstraintSpec, LossKind};
use crate::paths::{CompositePath, PathSegment, SegmentKind};
use crate::verify::Tolerances;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// A matrix with explicit shape and row-major nested data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<f64>>,
}

impl From<&Array2<f64>> for MatrixJson {
    fn from(m: &Array2<f64>) -> Self {
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }
}

impl MatrixJson {
    pub fn to_array(&self) -> Result<Array2<f64>> {
        if self.data.len() != self.rows || self.data.iter().any(|r| r.len() != self.cols) {
            return Err(Error::structural(format!(
                "matrix data does not match its declared shape {}x{}",
                self.rows, self.cols
            )));
        }
        let flat: Vec<f64> = self.data.iter().flatten().copied().collect();
        Array2::from_shape_vec((self.rows, self.cols), flat)
            .map_err(|e| Error::structural(e.to_string()))
    }
}

fn to_params(mats: &[MatrixJson]) -> Result<NetworkParams> {
    NetworkParams::new(
        mats.iter()
            .map(MatrixJson::to_array)
            .collect::<Result<_>>()?,
    )
}

fn from_params(p: &NetworkParams) -> Vec<MatrixJson> {
    p.matrices().iter().map(MatrixJson::from).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub architecture: Architecture,
    pub matrices: Vec<MatrixJson>,
}

impl ParamsFile {
    pub fn new(arch: &Architecture, params: &NetworkParams) -> Self {
        Self {
            architecture: arch.clone(),
            matrices: from_params(params),
        }
    }

    pub fn into_parts(self) -> Result<(Architecture, NetworkParams)> {
        let params = to_params(&self.matrices)?;
        params.check_shapes(&self.architecture)?;
        Ok((self.architecture, params))
    }
}

pub fn save_params(path: &Path, arch: &Architecture, params: &NetworkParams) -> Result<()> {
    write_json(path, &ParamsFile::new(arch, params))
}

pub fn load_params(path: &Path) -> Result<(Architecture, NetworkParams)> {
    read_json::<ParamsFile>(path)?.into_parts()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentJson {
    label: String,
    kind: SegmentKind,
    scale: f64,
    start: Vec<MatrixJson>,
    end: Vec<MatrixJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathFile {
    architecture: Architecture,
    segments: Vec<SegmentJson>,
}

pub fn save_path(path: &Path, arch: &Architecture, composite: &CompositePath) -> Result<()> {
    let file = PathFile {
        architecture: arch.clone(),
        segments: composite
            .segments()
            .iter()
            .map(|s| SegmentJson {
                label: s.label.clone(),
                kind: s.kind,
                scale: s.scale,
                start: from_params(&s.start),
                end: from_params(&s.end),
            })
            .collect(),
    };
    write_json(path, &file)
}

/// Loads a path without enforcing continuity, so a broken file can be
/// reported on by the verifier.
pub fn load_path(path: &Path) -> Result<(Architecture, CompositePath)> {
    let file: PathFile = read_json(path)?;
    let mut segments = Vec::with_capacity(file.segments.len());
    for s in file.segments {
        let seg = PathSegment::new(
            to_params(&s.start)?,
            to_params(&s.end)?,
            s.kind,
            s.scale,
            s.label,
        )?;
        seg.start.check_shapes(&file.architecture)?;
        segments.push(seg);
    }
    Ok((
        file.architecture,
        CompositePath::from_segments_unchecked(segments),
    ))
}

/// Reads a headerless CSV file with one matrix row per line.
pub fn load_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|e| {
                    Error::Parse(format!(
                        "{}: cannot read '{field}' as a number: {e}",
                        path.display()
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(Error::Parse(format!("{}: no data", path.display())));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((flat.len() / cols, cols), flat)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_matrix_csv(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut text = String::new();
    for row in m.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    write_text(path, &text)
}

pub fn load_dataset(x: &Path, y: &Path) -> Result<Dataset> {
    Dataset::new(load_matrix_csv(x)?, load_matrix_csv(y)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub x: PathBuf,
    pub y: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BruteForceConfig {
    pub resolution: f64,
    pub bound: f64,
    /// Hidden width of the narrow network that is searched.
    #[serde(default = "one")]
    pub width: usize,
}

fn one() -> usize {
    1
}

impl Default for BruteForceConfig {
    fn default() -> Self {
        Self {
            resolution: 0.05,
            bound: 1.0,
            width: 1,
        }
    }
}

fn default_grid() -> usize {
    2001
}

/// Everything a run needs. Relative paths are resolved against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub architecture: Architecture,
    pub loss: LossKind,
    #[serde(default)]
    pub constraint: ConstraintSpec,
    pub data: DataPaths,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brute_force: Option<BruteForceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Parses the file, resolves relative paths and checks that every
    /// referenced input exists.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.data.x);
        resolve(&mut cfg.data.y);
        cfg.start.as_mut().map(resolve);
        cfg.target.as_mut().map(resolve);
        cfg.output.as_mut().map(resolve);
        for input in [
            Some(&cfg.data.x),
            Some(&cfg.data.y),
            cfg.start.as_ref(),
            cfg.target.as_ref(),
        ]
        .into_iter()
        .flatten()
        {
            if !input.is_file() {
                return Err(Error::Io {
                    path: input.display().to_string(),
                    source: std::io::Error::new(
                        std::io::ErrorKind::NotFound,
                        "referenced file does not exist",
                    ),
                });
            }
        }
        if cfg.grid < 3 {
            return Err(Error::Parse(format!(
                "grid must be at least 3, got {}",
                cfg.grid
            )));
        }
        Ok(cfg)
    }

    pub fn dataset(&self) -> Result<Dataset> {
        let data = load_dataset(&self.data.x, &self.data.y)?;
        data.check_against(&self.architecture)?;
        self.loss.check_labels(data.y())?;
        Ok(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ActivationKind;
    use ndarray::array;

    #[test]
    fn params_round_trip_bitwise() {
        use rand::{Rng, SeedableRng};
        let arch =
            Architecture::uniform(vec![2, 3, 1], ActivationKind::LeakyRelu { c: 0.1 }).unwrap();
        let hand = NetworkParams::new(vec![
            array![
                [0.1, -1.0 / 3.0],
                [1e-300, 2.5e17],
                [std::f64::consts::PI, -0.0]
            ],
            array![[1.0 / 7.0, f64::MIN_POSITIVE, -123456.789]],
        ])
        .unwrap();
        // Arbitrary bit patterns catch parsers that are off by one ulp.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let wide = Architecture::uniform(vec![20, 50, 1], ActivationKind::Relu).unwrap();
        let random = NetworkParams::new(
            (0..2)
                .map(|j| {
                    ndarray::Array2::from_shape_simple_fn(wide.matrix_shape(j), || {
                        let v = f64::from_bits(rng.random::<u64>());
                        if v.is_finite() {
                            v
                        } else {
                            rng.random::<f64>()
                        }
                    })
                })
                .collect(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("p.json");
        for (arch, p) in [(arch, hand), (wide, random)] {
            save_params(&file, &arch, &p).unwrap();
            let (arch2, p2) = load_params(&file).unwrap();
            assert_eq!(arch2, arch);
            for (a, b) in p.matrices().iter().zip(p2.matrices()) {
                for (x, y) in a.iter().zip(b.iter()) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn malformed_matrices_are_rejected() {
        let bad = MatrixJson {
            rows: 2,
            cols: 2,
            data: vec![vec![1.0, 2.0]],
        };
        assert!(bad.to_array().is_err());
        let text = r#"{"architecture": {"dims": [1, 1, 1], "activations": [{"kind": "relu"}]},
                       "matrices": [{"rows": 1, "cols": 1, "data": [[1.0]]}]}"#;
        let file: ParamsFile = serde_json::from_str(text).unwrap();
        assert!(file.into_parts().is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let m = array![[1.0, -2.5, 1e-7], [0.1, 0.2, 0.3]];
        let file = dir.path().join("m.csv");
        write_matrix_csv(&file, &m).unwrap();
        assert_eq!(load_matrix_csv(&file).unwrap(), m);
        write_text(&file, "1, 2\n3\n").unwrap();
        assert!(matches!(load_matrix_csv(&file), Err(Error::Parse(_))));
        write_text(&file, "1, x\n").unwrap();
        assert!(matches!(load_matrix_csv(&file), Err(Error::Parse(_))));
        assert!(matches!(
            load_matrix_csv(&dir.path().join("missing.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn config_resolution_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        write_matrix_csv(&dir.path().join("x.csv"), &array![[1.0, 2.0]]).unwrap();
        write_matrix_csv(&dir.path().join("y.csv"), &array![[0.0, 1.0]]).unwrap();
        let cfg_text = r#"{
            "architecture": {"dims": [1, 4, 1], "activations": [{"kind": "relu"}]},
            "loss": "squared",
            "constraint": {"a_r": 0.5, "b_r": 0.5, "q": "inf"},
            "data": {"x": "x.csv", "y": "y.csv"},
            "seed": 3
        }"#;
        let file = dir.path().join("config.json");
        write_text(&file, cfg_text).unwrap();
        let cfg = RunConfig::load(&file).unwrap();
        assert_eq!(cfg.grid, 2001);
        assert_eq!(cfg.data.x, dir.path().join("x.csv"));
        assert_eq!(cfg.dataset().unwrap().n(), 2);

        write_text(
            &file,
            &cfg_text.replace("\"seed\": 3", "\"seed\": 3, \"colour\": 1"),
        )
        .unwrap();
        assert!(matches!(RunConfig::load(&file), Err(Error::Parse(_))));
        write_text(&file, &cfg_text.replace("y.csv", "nope.csv")).unwrap();
        assert!(matches!(RunConfig::load(&file), Err(Error::Io { .. })));
    }
}
