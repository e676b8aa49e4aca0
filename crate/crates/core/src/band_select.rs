//! Divergence-based band selection.
//!
//! Each band gets a within-class scatter `s_W` (prior-weighted class
//! variances) and a between-class scatter `s_B` (prior-weighted squared
//! distances of class means from the global mean). A band subset is scored
//! by the ratio of summed between-class to summed within-class scatter, and
//! subsets are grown greedily one band at a time.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::data::PixelDataset;
use crate::error::{Error, Result};

/// Guard added to the within-class denominator.
pub const DIVERGENCE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterSummary {
    pub within: Vec<f64>,
    pub between: Vec<f64>,
    /// `n_c / n`; entry `c - 1` holds class `c`.
    pub priors: Vec<f64>,
}

impl ScatterSummary {
    pub fn bands(&self) -> usize {
        self.within.len()
    }
}

pub fn scatter_summary(ds: &PixelDataset) -> Result<ScatterSummary> {
    let counts = ds.class_counts();
    let present = counts.iter().filter(|&&n| n > 0).count();
    if present < 2 {
        return Err(Error::invalid(format!(
            "scatter needs at least two populated classes, found {present}"
        )));
    }
    let bands = ds.bands();
    let n = ds.len() as f64;
    let classes = counts.len();

    let mut class_mean = vec![vec![0.0; bands]; classes];
    for i in 0..ds.len() {
        let c = ds.label(i) as usize - 1;
        for (m, &x) in class_mean[c].iter_mut().zip(ds.signature(i)) {
            *m += x;
        }
    }
    for (m, &nc) in class_mean.iter_mut().zip(&counts) {
        if nc > 0 {
            m.iter_mut().for_each(|v| *v /= nc as f64);
        }
    }
    let priors: Vec<f64> = counts.iter().map(|&nc| nc as f64 / n).collect();
    let mut mean = vec![0.0; bands];
    for (m, &p) in class_mean.iter().zip(&priors) {
        for (g, &v) in mean.iter_mut().zip(m) {
            *g += p * v;
        }
    }

    // Sum over records of squared deviations from the own-class mean, / n,
    // equals sum_c pi_c var_c.
    let mut within = vec![0.0; bands];
    for i in 0..ds.len() {
        let m = &class_mean[ds.label(i) as usize - 1];
        for ((w, &x), &mu) in within.iter_mut().zip(ds.signature(i)).zip(m) {
            *w += (x - mu) * (x - mu);
        }
    }
    within.iter_mut().for_each(|w| *w /= n);

    let mut between = vec![0.0; bands];
    for (m, &p) in class_mean.iter().zip(&priors) {
        if p == 0.0 {
            continue;
        }
        for ((b, &mu_c), &mu) in between.iter_mut().zip(m).zip(&mean) {
            *b += p * (mu_c - mu) * (mu_c - mu);
        }
    }
    Ok(ScatterSummary {
        within,
        between,
        priors,
    })
}

pub fn divergence_score(summary: &ScatterSummary, subset: &[usize]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::invalid("divergence of an empty band subset"));
    }
    if let Some(&b) = subset.iter().find(|&&b| b >= summary.bands()) {
        return Err(Error::invalid(format!(
            "band {b} out of range for {} bands",
            summary.bands()
        )));
    }
    let between: f64 = subset.iter().map(|&b| summary.between[b]).sum();
    let within: f64 = subset.iter().map(|&b| summary.within[b]).sum();
    Ok(between / (within + DIVERGENCE_EPSILON))
}

/// Greedy forward selection of `k` bands; ties go to the lowest band index.
pub fn greedy_band_selection(ds: &PixelDataset, k: usize) -> Result<Vec<usize>> {
    let bands = ds.bands();
    if k == 0 || k > bands {
        return Err(Error::invalid(format!("k = {k} outside 1..={bands}")));
    }
    let summary = scatter_summary(ds)?;
    Ok(greedy_from_summary(&summary, k))
}

pub(crate) fn greedy_from_summary(summary: &ScatterSummary, k: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; summary.bands()];
    let (mut sum_b, mut sum_w) = (0.0, 0.0);
    for _ in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for b in (0..summary.bands()).filter(|&b| !taken[b]) {
            let score =
                (sum_b + summary.between[b]) / (sum_w + summary.within[b] + DIVERGENCE_EPSILON);
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((b, score));
            }
        }
        let (b, _) = best.expect("k <= bands");
        taken[b] = true;
        sum_b += summary.between[b];
        sum_w += summary.within[b];
        chosen.push(b);
    }
    chosen
}

/// Restricts every signature to `bands`, in the given order.
pub fn project_bands(ds: &PixelDataset, bands: &[usize]) -> Result<PixelDataset> {
    let mut seen = vec![false; ds.bands()];
    for &b in bands {
        if b >= ds.bands() {
            return Err(Error::invalid(format!(
                "band {b} out of range for {} bands",
                ds.bands()
            )));
        }
        if std::mem::replace(&mut seen[b], true) {
            return Err(Error::invalid(format!("band {b} selected twice")));
        }
    }
    if bands.is_empty() {
        return Err(Error::invalid("empty band selection"));
    }
    Ok(ds.map_signatures(bands.len(), |sig, out| {
        out.extend(bands.iter().map(|&b| sig[b]))
    }))
}

/// One band index per line, in selection order.
pub fn write_band_list(bands: &[usize], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for b in bands {
        writeln!(out, "{b}").unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_band_list(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse()
                .map_err(|_| Error::format(format!("{}: bad band index {l:?}", path.display())))
        })
        .collect()
}
