//! Diagonal focus rate over encoder-decoder attention maps.
//!
//! For an O x I map with slope k = O/I, the DFR is the fraction of total
//! attention mass lying within a band of width b around the diagonal:
//! rows ceil(k*i) - b ..= ceil(k*i) + b for each column i (1-based,
//! clamped to [1, O]). The slope is kept as an exact rational; the band
//! center uses integer ceiling, so no floating-point rounding enters the
//! band geometry.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct AttentionMap {
    rows: usize, // O: output length
    cols: usize, // I: input length
    weights: Vec<f64>,
    row_stochastic: bool,
}

impl AttentionMap {
    /// Validates entries: all finite and non-negative; if `row_stochastic`
    /// is set, each row must sum to 1 within 1e-6.
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>, row_stochastic: bool) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Domain("attention map must be at least 1x1".into()));
        }
        if weights.len() != rows * cols {
            return Err(Error::Dimension {
                op: "attention map",
                left: format!("{rows}x{cols}"),
                right: format!("{} weights", weights.len()),
            });
        }
        for (idx, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite(format!("attention weight at index {idx}")));
            }
            if w < 0.0 {
                return Err(Error::Domain(format!(
                    "negative attention weight {w} at index {idx}"
                )));
            }
        }
        if row_stochastic {
            for r in 0..rows {
                let sum: f64 = weights[r * cols..(r + 1) * cols].iter().sum();
                if (sum - 1.0).abs() > 1e-6 {
                    return Err(Error::Domain(format!(
                        "row {r} sums to {sum}, expected 1 within 1e-6"
                    )));
                }
            }
        }
        Ok(AttentionMap {
            rows,
            cols,
            weights,
            row_stochastic,
        })
    }

    pub fn output_len(&self) -> usize {
        self.rows
    }

    pub fn input_len(&self) -> usize {
        self.cols
    }

    pub fn is_row_stochastic(&self) -> bool {
        self.row_stochastic
    }

    #[inline]
    pub fn at(&self, o: usize, i: usize) -> f64 {
        self.weights[o * self.cols + i]
    }

    /// Parses the plain-text form: first line `O I`, then O rows of I reals.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Domain("empty attention map file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::Domain(format!("bad dimension token {t:?}")))
            })
            .collect::<Result<_>>()?;
        if dims.len() != 2 {
            return Err(Error::Domain(format!(
                "header must be `O I`, found {header:?}"
            )));
        }
        let (rows, cols) = (dims[0], dims[1]);
        let mut weights = Vec::with_capacity(rows * cols);
        for (r, line) in lines.enumerate() {
            if r >= rows {
                return Err(Error::Domain(format!("more than {rows} data rows")));
            }
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::Domain(format!("bad weight {tok:?} in row {r}")))?;
                weights.push(v);
            }
            if weights.len() != (r + 1) * cols {
                return Err(Error::Domain(format!(
                    "row {r} has {} entries, expected {cols}",
                    weights.len() - r * cols
                )));
            }
        }
        AttentionMap::new(rows, cols, weights, false)
    }
}

/// Band center for 1-based column i: ceil(O*i / I).
#[inline]
fn band_center(o_len: usize, i_len: usize, i: usize) -> usize {
    (o_len * i).div_ceil(i_len)
}

/// Fraction of attention mass inside the width-b diagonal band.
pub fn compute_dfr(map: &AttentionMap, band: usize) -> Result<f64> {
    let (o_len, i_len) = (map.output_len(), map.input_len());
    let total: f64 = map.weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::UndefinedMetric(
            "attention map has zero total mass".into(),
        ));
    }
    let mut in_band = 0.0;
    for i in 1..=i_len {
        let center = band_center(o_len, i_len, i);
        let lo = center.saturating_sub(band).max(1);
        let hi = (center + band).min(o_len);
        for o in lo..=hi {
            in_band += map.at(o - 1, i - 1);
        }
    }
    // the band is a subset of the matrix; clamp away summation-order ulps
    Ok((in_band / total).clamp(0.0, 1.0))
}

/// Unweighted mean DFR over several maps, plus the per-map values.
pub fn batch_dfr(maps: &[AttentionMap], band: usize) -> Result<(f64, Vec<f64>)> {
    if maps.is_empty() {
        return Err(Error::Usage("batch_dfr needs at least one map".into()));
    }
    let per_map: Vec<f64> = maps
        .iter()
        .map(|m| compute_dfr(m, band))
        .collect::<Result<_>>()?;
    let mean = per_map.iter().sum::<f64>() / per_map.len() as f64;
    Ok((mean, per_map))
}
