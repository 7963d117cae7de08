//! Fixed-width histograms.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    /// Left edge of the first bin; a multiple of `bin_width`.
    pub start: f64,
    pub counts: Vec<u64>,
    pub total: u64,
}

#[derive(Debug, Serialize)]
struct BinRow {
    bin_start: f64,
    count: u64,
    density: f64,
}

impl Histogram {
    pub fn bin_start(&self, i: usize) -> f64 {
        self.start + i as f64 * self.bin_width
    }

    /// Count divided by `total * bin_width`, so the densities integrate to one.
    pub fn density(&self, i: usize) -> f64 {
        self.counts[i] as f64 / (self.total as f64 * self.bin_width)
    }

    pub fn densities(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|i| self.density(i)).collect()
    }

    /// Left edge of the most populated bin.
    pub fn mode_bin_start(&self) -> f64 {
        let (i, _) = self
            .counts
            .iter()
            .enumerate()
            .fold((0, 0), |best, (i, &c)| if c > best.1 { (i, c) } else { best });
        self.bin_start(i)
    }

    pub fn write_csv(&self, out_path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(out_path).map_err(|e| Error::io(out_path, csv_io(e)))?;
        for i in 0..self.counts.len() {
            w.serialize(BinRow {
                bin_start: self.bin_start(i),
                count: self.counts[i],
                density: self.density(i),
            })
            .map_err(|e| Error::io(out_path, csv_io(e)))?;
        }
        w.flush().map_err(|e| Error::io(out_path, e))
    }
}

pub(crate) fn csv_io(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// Bin `samples` into `[k w, (k + 1) w)` bins covering the sample range.
pub fn histogram(samples: &[f64], bin_width: f64) -> Result<Histogram> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    if samples.is_empty() {
        return Err(Error::EmptyData("no samples to bin".into()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::ParameterDomain("samples must be finite".into()));
    }
    let index = |x: f64| (x / bin_width).floor() as i64;
    let lo = samples.iter().copied().map(index).min().unwrap();
    let hi = samples.iter().copied().map(index).max().unwrap();
    let mut counts = vec![0u64; (hi - lo + 1) as usize];
    for &x in samples {
        counts[(index(x) - lo) as usize] += 1;
    }
    Ok(Histogram {
        bin_width,
        start: lo as f64 * bin_width,
        counts,
        total: samples.len() as u64,
    })
}

/// Bin `samples` and write `bin_start,count,density` rows to `out_path`.
pub fn emit_histogram(samples: &[f64], bin_width: f64, out_path: &Path) -> Result<Histogram> {
    let h = histogram(samples, bin_width)?;
    h.write_csv(out_path)?;
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_binning() {
        let h = histogram(&[0.5, 1.5], 1.0).unwrap();
        assert_eq!(h.start, 0.0);
        assert_eq!(h.counts, vec![1, 1]);
        assert_eq!(h.densities(), vec![0.5, 0.5]);
    }

    #[test]
    fn degenerate_single_bin() {
        let h = histogram(&[7.0; 10], 0.25).unwrap();
        assert_eq!(h.counts, vec![10]);
        assert_eq!(h.density(0), 4.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(histogram(&[], 1.0), Err(Error::EmptyData(_))));
        assert!(matches!(histogram(&[1.0], 0.0), Err(Error::ParameterDomain(_))));
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        emit_histogram(&[0.5, 1.5, 1.7, -0.2], 1.0, &path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text, "bin_start,count,density\n-1.0,1,0.25\n0.0,1,0.25\n1.0,2,0.5\n");
    }

    proptest! {
        #[test]
        fn densities_integrate_to_one(
            samples in proptest::collection::vec(-1e5f64..1e5, 1..500),
            width in 0.5f64..5000.0,
        ) {
            let h = histogram(&samples, width).unwrap();
            let area: f64 = h.densities().iter().map(|d| d * width).sum();
            prop_assert!((area - 1.0).abs() < 1e-9);
            prop_assert!(h.densities().iter().all(|&d| d >= 0.0));
            prop_assert_eq!(h.counts.iter().sum::<u64>(), samples.len() as u64);
        }
    }
}
