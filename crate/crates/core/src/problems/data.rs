//! Tabular datasets: seeded splits, min-max scaling and CSV ingestion.

use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Feature rows with targets and an optional sensitive attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub targets: Array1<f64>,
    pub sensitive: Option<Array1<f64>>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, targets: Array1<f64>, sensitive: Option<Array1<f64>>) -> Result<Self> {
        let n = features.nrows();
        if targets.len() != n || sensitive.as_ref().is_some_and(|s| s.len() != n) {
            return Err(Error::Data("feature, target and sensitive lengths differ".into()));
        }
        Ok(Self {
            features,
            targets,
            sensitive,
        })
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), rows),
            targets: self.targets.select(Axis(0), rows),
            sensitive: self.sensitive.as_ref().map(|s| s.select(Axis(0), rows)),
        }
    }
}

/// Train/validation/test partition of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub fractions: [f64; 3],
}

pub const DEFAULT_FRACTIONS: [f64; 3] = [0.6, 0.2, 0.2];

/// Row counts for each part; the test part takes the remainder.
pub fn split_sizes(n: usize, fractions: [f64; 3]) -> Result<[usize; 3]> {
    if fractions.iter().any(|f| !(*f >= 0.0)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split fractions {fractions:?} must be nonnegative and sum to 1")));
    }
    let train = (((n as f64) * fractions[0]).round() as usize).min(n);
    let val = (((n as f64) * fractions[1]).round() as usize).min(n - train);
    Ok([train, val, n - train - val])
}

/// Shuffles rows with a seeded generator and cuts them by `fractions`.
pub fn split_dataset(data: &Dataset, fractions: [f64; 3], seed: u64) -> Result<DatasetSplit> {
    let sizes = split_sizes(data.len(), fractions)?;
    let mut rows: Vec<usize> = (0..data.len()).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, rest) = rows.split_at(sizes[0]);
    let (val, test) = rest.split_at(sizes[1]);
    Ok(DatasetSplit {
        train: data.select(train),
        validation: data.select(val),
        test: data.select(test),
        fractions,
    })
}

/// Maps each column affinely onto `[0, 1]`; constant columns become 0.
pub fn minmax_scale(features: &mut Array2<f64>) {
    for mut col in features.columns_mut() {
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        if span > 0.0 {
            col.mapv_inplace(|v| (v - lo) / span);
        } else {
            col.fill(0.0);
        }
    }
}

/// Reads a numeric CSV with a header row, scales features to `[0, 1]` and
/// splits 60/20/20 with the given seed. The target and sensitive columns are
/// excluded from the features.
pub fn load_csv(path: impl AsRef<Path>, target: &str, sensitive: Option<&str>, seed: u64) -> Result<DatasetSplit> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    let data = read_csv(file, target, sensitive)?;
    split_dataset(&data, DEFAULT_FRACTIONS, seed)
}

/// Parses CSV text into a scaled [`Dataset`]. Row numbers in errors are
/// file line numbers, the header being line 1.
pub fn read_csv<R: Read>(reader: R, target: &str, sensitive: Option<&str>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            column: 0,
            message: e.to_string(),
        })?
        .clone();
    let find = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Parse {
            row: 1,
            column: 0,
            message: format!("missing column `{name}`"),
        })
    };
    let target_idx = find(target)?;
    let sensitive_idx = sensitive.map(find).transpose()?;
    let width = headers.len();
    let feature_cols: Vec<usize> = (0..width).filter(|c| *c != target_idx && Some(*c) != sensitive_idx).collect();

    let mut feats = Vec::new();
    let mut targets = Vec::new();
    let mut sens = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map_or(line, |p| p.line() as usize),
            column: 0,
            message: e.to_string(),
        })?;
        if record.len() != width {
            return Err(Error::Parse {
                row: record.position().map_or(line, |p| p.line() as usize),
                column: record.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        let mut values = Vec::with_capacity(width);
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row: line,
                column: c + 1,
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: line,
                    column: c + 1,
                    message: format!("`{cell}` is not finite"),
                });
            }
            values.push(v);
        }
        feats.extend(feature_cols.iter().map(|&c| values[c]));
        targets.push(values[target_idx]);
        if let Some(s) = sensitive_idx {
            sens.push(values[s]);
        }
    }
    if targets.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }
    let mut features = Array2::from_shape_vec((targets.len(), feature_cols.len()), feats)
        .map_err(|e| Error::Data(e.to_string()))?;
    minmax_scale(&mut features);
    Dataset::new(features, Array1::from(targets), sensitive_idx.map(|_| Array1::from(sens)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_text(rows: usize) -> String {
        let mut s = String::from("a,b,y\n");
        for i in 0..rows {
            s.push_str(&format!("{},{},{}\n", i, 2 * i, i % 2));
        }
        s
    }

    #[test]
    fn ten_rows_split_six_two_two() {
        let data = read_csv(csv_text(10).as_bytes(), "y", None).unwrap();
        let split = split_dataset(&data, DEFAULT_FRACTIONS, 3).unwrap();
        assert_eq!((split.train.len(), split.validation.len(), split.test.len()), (6, 2, 2));
    }

    #[test]
    fn features_are_scaled_to_unit_interval() {
        let data = read_csv(csv_text(5).as_bytes(), "y", None).unwrap();
        assert_eq!(data.features.ncols(), 2);
        assert_eq!(data.features[[0, 0]], 0.0);
        assert_eq!(data.features[[4, 1]], 1.0);
    }

    #[test]
    fn header_only_is_empty() {
        let err = read_csv("a,b,y\n".as_bytes(), "y", None).unwrap_err();
        assert_eq!(err, Error::Data("empty dataset".into()));
    }

    #[test]
    fn ragged_row_reports_its_line() {
        let mut text = csv_text(5);
        text.push_str("1,2\n");
        match read_csv(text.as_bytes(), "y", None).unwrap_err() {
            Error::Parse { row, .. } => assert_eq!(row, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_reports_row_and_column() {
        let text = "a,b,y\n1,2,0\n1,x,1\n";
        match read_csv(text.as_bytes(), "y", None).unwrap_err() {
            Error::Parse { row, column, .. } => assert_eq!((row, column), (3, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_target_column_is_a_parse_error() {
        assert!(matches!(read_csv(csv_text(3).as_bytes(), "label", None), Err(Error::Parse { .. })));
    }

    #[test]
    fn sensitive_column_is_excluded_from_features() {
        let text = "a,s,y\n0,1,0\n1,0,1\n";
        let data = read_csv(text.as_bytes(), "y", Some("s")).unwrap();
        assert_eq!(data.features.ncols(), 1);
        assert_eq!(data.sensitive.unwrap().to_vec(), vec![1.0, 0.0]);
    }

    #[test]
    fn split_is_seed_deterministic() {
        let data = read_csv(csv_text(20).as_bytes(), "y", None).unwrap();
        let a = split_dataset(&data, DEFAULT_FRACTIONS, 9).unwrap();
        let b = split_dataset(&data, DEFAULT_FRACTIONS, 9).unwrap();
        assert_eq!(a, b);
    }
}
