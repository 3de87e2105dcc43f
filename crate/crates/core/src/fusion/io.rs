use super::{ConfusionMatrix, Homography, PatchGrid};
use crate::error::{Error, Result};

fn rows(text: &str) -> Result<Vec<Vec<String>>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    rd.records()
        .map(|r| {
            r.map(|r| r.iter().map(str::to_string).collect())
                .map_err(|e| Error::invalid(format!("csv: {e}")))
        })
        .collect()
}

fn numbers(row: &[String]) -> Result<Vec<f64>> {
    row.iter()
        .map(|s| s.parse().map_err(|_| Error::invalid(format!("`{s}` is not a number"))))
        .collect()
}

/// N rows of N probabilities, optionally preceded by a row of class names
/// and followed by a prior row.
pub fn read_confusion_csv(text: &str) -> Result<ConfusionMatrix> {
    let mut rows = rows(text)?;
    let classes = match rows.first() {
        Some(r) if r.iter().any(|s| s.parse::<f64>().is_err()) => rows.remove(0),
        _ => Vec::new(),
    };
    let n = rows.first().map_or(0, |r| r.len());
    let (entries, prior) = match rows.len() {
        l if l == n => (rows, None),
        l if l == n + 1 => {
            let p = rows.pop().expect("prior row");
            (rows, Some(numbers(&p)?))
        }
        l => return Err(Error::DimensionMismatch { expected: n, found: l }),
    };
    let entries = entries.iter().map(|r| numbers(r)).collect::<Result<_>>()?;
    ConfusionMatrix::new(classes, entries, prior)
}

/// Nine reals in row-major order, separated by whitespace or commas.
pub fn read_homography(text: &str) -> Result<Homography> {
    let v: Vec<f64> = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::invalid(format!("`{s}` is not a number"))))
        .collect::<Result<_>>()?;
    Homography::from_row_slice(&v)
}

/// Header row `M,N,dim` followed by `M·N` rows of `dim` values, row-major.
pub fn read_patch_grid_csv(text: &str) -> Result<PatchGrid> {
    let rows = rows(text)?;
    let Some(head) = rows.first() else {
        return Err(Error::invalid("empty patch grid file"));
    };
    let head = numbers(head)?;
    if head.len() != 3 || head.iter().any(|x| x.fract() != 0.0 || *x < 1.0) {
        return Err(Error::invalid("patch grid header must be `M,N,dim`"));
    }
    let (m, n, d) = (head[0] as usize, head[1] as usize, head[2] as usize);
    let features: Vec<Vec<f64>> = rows[1..].iter().map(|r| numbers(r)).collect::<Result<_>>()?;
    if let Some(f) = features.iter().find(|f| f.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: f.len() });
    }
    PatchGrid::new(m, n, features)
}
