/// Adjusted R² of `predicted` against `observed` with `p` predictors
/// (intercept excluded). `None` when `n <= p + 1` or the observations have
/// zero variance.
pub fn adjusted_r2(observed: &[f64], predicted: &[f64], p: usize) -> Option<f64> {
    assert_eq!(observed.len(), predicted.len(), "length mismatch");
    let n = observed.len();
    if n <= p + 1 {
        return None;
    }
    let mean = observed.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = observed.iter().map(|o| (o - mean).powi(2)).sum();
    if ss_tot <= 0.0 {
        return None;
    }
    let ss_res: f64 = observed
        .iter()
        .zip(predicted)
        .map(|(o, f)| (o - f).powi(2))
        .sum();
    Some(1.0 - (ss_res / ss_tot) * (n as f64 - 1.0) / (n as f64 - p as f64 - 1.0))
}

/// Fraction of observations inside their closed interval `[lo, hi]`.
pub fn coverage95(observed: &[f64], intervals: &[(f64, f64)]) -> f64 {
    assert_eq!(observed.len(), intervals.len(), "length mismatch");
    if observed.is_empty() {
        return 0.0;
    }
    let inside = observed
        .iter()
        .zip(intervals)
        .filter(|(o, (lo, hi))| lo <= *o && *o <= hi)
        .count();
    inside as f64 / observed.len() as f64
}
