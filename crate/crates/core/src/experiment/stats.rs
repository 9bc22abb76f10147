//! Rank and linear correlation of bundle entropy against accuracy.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::grid::CellResult;
use crate::{math, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub spearman: f64,
    pub pearson: f64,
    pub cells: usize,
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Shape {
            context: "correlation series".into(),
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::Degenerate(alloc::format!("need at least 3 pairs, got {}", xs.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Degenerate("a series has zero variance".into()));
    }
    Ok((sxy / math::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return pearson(xs, ys);
    }
    pearson(&ranks(xs), &ranks(ys))
}

/// Correlation of last-layer bundle entropy with test accuracy across cells.
pub fn correlate(cells: &[CellResult]) -> Result<Correlation> {
    let h: Vec<f64> = cells.iter().map(CellResult::bundle_entropy).collect();
    let acc: Vec<f64> = cells.iter().map(|c| c.test_accuracy).collect();
    correlate_pairs(&h, &acc)
}

pub fn correlate_pairs(entropy: &[f64], accuracy: &[f64]) -> Result<Correlation> {
    Ok(Correlation {
        spearman: spearman(entropy, accuracy)?,
        pearson: pearson(entropy, accuracy)?,
        cells: entropy.len(),
    })
}
