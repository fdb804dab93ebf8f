//! Aligned input/target sequences and their CSV form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::float;

/// Consecutive row ranges: washout, then training, then test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub washout: usize,
    pub train: usize,
    pub test: usize,
}

impl Split {
    #[must_use]
    pub fn total(&self) -> usize {
        self.washout + self.train + self.test
    }

    #[must_use]
    pub fn test_start(&self) -> usize {
        self.washout + self.train
    }
}

/// Network inputs `z(k)` and targets `y(k)`, one row per time step.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
    split: Split,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>, split: Split) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::Shape(format!(
                "{} input rows but {} target rows",
                inputs.len(),
                targets.len()
            )));
        }
        if inputs.is_empty() {
            return Err(Error::Shape("dataset has no rows".into()));
        }
        let (nz, ny) = (inputs[0].len(), targets[0].len());
        if nz == 0 || ny == 0 {
            return Err(Error::Shape("inputs and targets need at least one column".into()));
        }
        if inputs.iter().any(|r| r.len() != nz) || targets.iter().any(|r| r.len() != ny) {
            return Err(Error::Shape("ragged dataset rows".into()));
        }
        if inputs.iter().chain(&targets).flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("dataset contains non-finite values".into()));
        }
        if split.total() != inputs.len() {
            return Err(Error::Config(format!(
                "split covers {} rows but the dataset has {}",
                split.total(),
                inputs.len()
            )));
        }
        Ok(Self { inputs, targets, split })
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    #[must_use]
    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    #[must_use]
    pub fn output_dim(&self) -> usize {
        self.targets[0].len()
    }

    #[must_use]
    pub fn input(&self, k: usize) -> &[f64] {
        &self.inputs[k]
    }

    #[must_use]
    pub fn target(&self, k: usize) -> &[f64] {
        &self.targets[k]
    }

    #[must_use]
    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    #[must_use]
    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    #[must_use]
    pub fn split(&self) -> Split {
        self.split
    }

    /// Same rows under a different split.
    pub fn with_split(self, split: Split) -> Result<Self> {
        Self::new(self.inputs, self.targets, split)
    }

    /// Target of the previous row, zeros before the first one.
    #[must_use]
    pub fn previous_target(&self, k: usize) -> Vec<f64> {
        if k == 0 {
            vec![0.0; self.output_dim()]
        } else {
            self.targets[k - 1].clone()
        }
    }

    /// CSV text with header `z0,..,y0,..`.
    #[must_use]
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.input_dim())
            .map(|i| format!("z{i}"))
            .chain((0..self.output_dim()).map(|i| format!("y{i}")))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for (z, y) in self.inputs.iter().zip(&self.targets) {
            let row: Vec<String> = z.iter().chain(y).map(|&v| float(v)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses CSV text; columns are matched by their `z*`/`y*` header names.
    pub fn from_csv_str(text: &str, split: Option<Split>) -> Result<Self> {
        let perr = |detail: String| Error::Parse {
            what: "dataset csv".into(),
            detail,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| perr(e.to_string()))?.clone();
        let column = |prefix: char| -> Result<Vec<usize>> {
            let mut cols: Vec<(usize, usize)> = Vec::new();
            for (pos, h) in headers.iter().enumerate() {
                if let Some(rest) = h.strip_prefix(prefix) {
                    let idx: usize = rest
                        .parse()
                        .map_err(|_| perr(format!("unexpected column '{h}'")))?;
                    cols.push((idx, pos));
                }
            }
            cols.sort_unstable();
            if cols.iter().enumerate().any(|(i, c)| c.0 != i) {
                return Err(perr(format!("{prefix} columns must be numbered from 0 without gaps")));
            }
            Ok(cols.into_iter().map(|c| c.1).collect())
        };
        let zc = column('z')?;
        let yc = column('y')?;
        if zc.is_empty() || yc.is_empty() {
            return Err(perr("need at least one z and one y column".into()));
        }
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| perr(e.to_string()))?;
            let get = |pos: usize| -> Result<f64> {
                let s = rec.get(pos).unwrap_or("");
                s.parse()
                    .map_err(|_| perr(format!("row {}: bad number '{s}'", line + 1)))
            };
            inputs.push(zc.iter().map(|&p| get(p)).collect::<Result<Vec<_>>>()?);
            targets.push(yc.iter().map(|&p| get(p)).collect::<Result<Vec<_>>>()?);
        }
        let n = inputs.len();
        let split = split.unwrap_or(Split {
            washout: 0,
            train: n,
            test: 0,
        });
        Self::new(inputs, targets, split)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load_csv(path: &Path, split: Option<Split>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text, split)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset::new(
            vec![vec![1.0, 0.5], vec![2.0, -0.25], vec![3.0, 1e-7]],
            vec![vec![0.1], vec![0.2], vec![0.3]],
            Split { washout: 1, train: 1, test: 1 },
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let d = tiny();
        let text = d.to_csv_string();
        assert!(text.starts_with("z0,z1,y0\n"));
        assert_eq!(Dataset::from_csv_str(&text, Some(d.split())).unwrap(), d);
    }

    #[test]
    fn column_order_comes_from_headers() {
        let d = Dataset::from_csv_str("y0,z1,z0\n9,2,1\n", None).unwrap();
        assert_eq!(d.input(0), &[1.0, 2.0]);
        assert_eq!(d.target(0), &[9.0]);
        assert!(Dataset::from_csv_str("z0,z2,y0\n1,2,3\n", None).is_err());
        assert!(Dataset::from_csv_str("z0,y0\n1,x\n", None).is_err());
    }

    #[test]
    fn split_must_cover_rows() {
        assert!(tiny().with_split(Split { washout: 0, train: 2, test: 0 }).is_err());
        assert_eq!(tiny().previous_target(0), vec![0.0]);
        assert_eq!(tiny().previous_target(2), vec![0.2]);
    }
}
