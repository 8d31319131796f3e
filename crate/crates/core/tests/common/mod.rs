#![allow(dead_code)]

use gmr_core::{Composition, CompositionEstimate, GmrDataset};

/// Dataset whose standard errors follow `s^2 = beta p (1 - p)` exactly.
pub fn proportional_dataset(p: &[Vec<f64>], n: &[u32], beta: f64, lake_mask: &[bool], lake_count: f64) -> GmrDataset {
    let weeks = p
        .iter()
        .zip(n)
        .map(|(row, &n)| {
            let se = row.iter().map(|v| (beta * v * (1.0 - v)).sqrt()).collect();
            CompositionEstimate::new(Composition::new(row.clone()).unwrap(), se, n).unwrap()
        })
        .collect();
    let t = p.len();
    GmrDataset::new(
        weeks,
        vec![1.0 / t as f64; t],
        lake_mask.to_vec(),
        lake_count,
        (0..lake_mask.len()).map(|k| format!("s{k}")).collect(),
        (1..=t as i64).collect(),
    )
    .unwrap()
}

/// Mean and batch-means standard error of an autocorrelated trace.
pub fn batch_mean_se(xs: &[f64], batches: usize) -> (f64, f64) {
    let size = xs.len() / batches;
    let means: Vec<f64> = xs.chunks_exact(size).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let b = means.len() as f64;
    let mean = means.iter().sum::<f64>() / b;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt())
}
