use super::{FlError, ModelParams};
use crate::codes::AssignmentMatrix;

/// Floor on distances in the Weiszfeld weights.
pub const GEOMEDIAN_SMOOTHING: f64 = 1e-6;

/// Coordinate-wise mean. `None` for an empty slice.
pub fn mean_model(models: &[&ModelParams]) -> Option<ModelParams> {
    let first = *models.first()?;
    let mut out = ModelParams::zeros(first.n_classes(), first.n_features());
    let scale = 1.0 / models.len() as f64;
    for m in models {
        for (o, w) in out.weights_mut().iter_mut().zip(m.weights()) {
            *o += w;
        }
    }
    out.weights_mut().iter_mut().for_each(|o| *o *= scale);
    Some(out)
}

/// Mean of the models of the clients in group `group`.
pub fn group_aggregate(models: &[ModelParams], a: &AssignmentMatrix, group: usize) -> Result<ModelParams, FlError> {
    if models.len() != a.clients() {
        return Err(FlError::DimensionMismatch { expected: a.clients(), actual: models.len() });
    }
    if group >= a.groups() {
        return Err(FlError::DimensionMismatch { expected: a.groups(), actual: group });
    }
    let members: Vec<&ModelParams> = a.group(group).into_iter().map(|j| &models[j]).collect();
    mean_model(&members).ok_or(FlError::EmptyGroup(group))
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `Σ_j ‖z − c_j‖₂`.
pub fn median_objective(z: &ModelParams, models: &[ModelParams]) -> f64 {
    models.iter().map(|m| distance(z.weights(), m.weights())).sum()
}

/// Smoothed Weiszfeld iteration from the mean. Stops once a step moves less
/// than `tol` or after `max_iters` steps, returning the last iterate.
///
/// Panics on an empty slice.
pub fn geometric_median(models: &[ModelParams], tol: f64, max_iters: usize) -> ModelParams {
    geometric_median_trace(models, tol, max_iters, |_| {})
}

pub(crate) fn geometric_median_trace(
    models: &[ModelParams],
    tol: f64,
    max_iters: usize,
    mut on_iterate: impl FnMut(&ModelParams),
) -> ModelParams {
    let refs: Vec<&ModelParams> = models.iter().collect();
    let mut z = mean_model(&refs).expect("geometric median of no models");
    on_iterate(&z);
    let mut next = vec![0.0; z.weights().len()];
    for _ in 0..max_iters {
        next.iter_mut().for_each(|v| *v = 0.0);
        let mut total = 0.0;
        for m in models {
            let w = 1.0 / distance(z.weights(), m.weights()).max(GEOMEDIAN_SMOOTHING);
            total += w;
            for (n, c) in next.iter_mut().zip(m.weights()) {
                *n += w * c;
            }
        }
        next.iter_mut().for_each(|v| *v /= total);
        let step = distance(&next, z.weights());
        z.weights_mut().copy_from_slice(&next);
        on_iterate(&z);
        if step < tol {
            break;
        }
    }
    z
}
