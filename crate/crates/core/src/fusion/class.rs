use crate::error::{Error, Result};

/// Per-sensor confusion matrix: `entries[i][j] = P(observed j | true i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub entries: Vec<Vec<f64>>,
    /// Class prior, when supplied with the matrix.
    pub prior: Option<Vec<f64>>,
}

fn check_distribution(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::invalid(format!("{what} has entries outside [0, 1]")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

impl ConfusionMatrix {
    /// Class names default to `C0, C1, ...` when `classes` is empty.
    pub fn new(classes: Vec<String>, entries: Vec<Vec<f64>>, prior: Option<Vec<f64>>) -> Result<Self> {
        let n = entries.len();
        if n < 2 {
            return Err(Error::invalid("confusion matrix needs at least two classes"));
        }
        for (i, row) in entries.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: row.len() });
            }
            check_distribution(row, &format!("confusion row {i}"))?;
        }
        if let Some(p) = &prior {
            if p.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: p.len() });
            }
            check_distribution(p, "class prior")?;
        }
        let classes = if classes.is_empty() {
            (0..n).map(|i| format!("C{i}")).collect()
        } else if classes.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: classes.len() });
        } else {
            classes
        };
        Ok(ConfusionMatrix { classes, entries, prior })
    }

    pub fn identity(classes: &[&str]) -> Self {
        let n = classes.len();
        let entries = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
        ConfusionMatrix::new(classes.iter().map(|s| s.to_string()).collect(), entries, None).expect("valid identity")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    pub fn uniform_prior(&self) -> Vec<f64> {
        vec![1.0 / self.len() as f64; self.len()]
    }
}

/// Joint probability of the two observed classes, assuming the sensors
/// classify independently given the true class:
/// `Σ_k P(obs_a | c_k) P(obs_b | c_k) P(c_k)`.
pub fn class_similarity(
    obs_a: usize,
    obs_b: usize,
    cm_a: &ConfusionMatrix,
    cm_b: &ConfusionMatrix,
    prior: &[f64],
) -> Result<f64> {
    let n = cm_a.len();
    if cm_b.len() != n || prior.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if cm_b.len() != n { cm_b.len() } else { prior.len() },
        });
    }
    if obs_a >= n || obs_b >= n {
        return Err(Error::invalid(format!("class index {} out of range", obs_a.max(obs_b))));
    }
    Ok((0..n).map(|k| cm_a.entries[k][obs_a] * cm_b.entries[k][obs_b] * prior[k]).sum())
}
