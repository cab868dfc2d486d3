//! Andrews sine weighting of UE residuals.

/// Pre-normalization weight `(e_max / e) sin(e / e_max)`, 1 at `e = 0` and
/// zero beyond `e_max`.
pub fn andrews_weight(residual: f64, e_max: f64) -> f64 {
    if residual.is_nan() || residual > e_max {
        return 0.0;
    }
    if residual == 0.0 {
        return 1.0;
    }
    let t = residual / e_max;
    t.sin() / t
}

/// Weights for each residual, scaled to sum to one. Returns `None` when every
/// weight is zero.
pub fn normalized_weights(residuals: &[f64], e_max: f64) -> Option<Vec<f64>> {
    let mut w: Vec<f64> = residuals.iter().map(|e| andrews_weight(*e, e_max)).collect();
    let total: f64 = w.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return None;
    }
    w.iter_mut().for_each(|v| *v /= total);
    Some(w)
}
