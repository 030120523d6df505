use super::GtError;

/// Weighted squared error over observed entries, normalized by the observed
/// weight mass. Returns the loss and its gradient with respect to `pred`
/// (exactly zero at unobserved entries).
pub fn masked_multitask_loss(
    pred: &[f64],
    target: &[f64],
    observed: &[bool],
    task_weight: &[f64],
) -> Result<(f64, Vec<f64>), GtError> {
    let t = task_weight.len();
    if t == 0 || pred.len() != target.len() || pred.len() != observed.len() || !pred.len().is_multiple_of(t) {
        return Err(GtError::DimensionMismatch(format!(
            "pred {}, target {}, mask {}, tasks {t}",
            pred.len(),
            target.len(),
            observed.len()
        )));
    }
    let mass: f64 = observed
        .iter()
        .enumerate()
        .filter(|(_, &o)| o)
        .map(|(i, _)| task_weight[i % t])
        .sum();
    if mass <= 0.0 {
        return Err(GtError::EmptyBatch);
    }
    let mut loss = 0.0;
    let mut grad = vec![0.0; pred.len()];
    for i in 0..pred.len() {
        if observed[i] {
            let w = task_weight[i % t];
            let e = pred[i] - target[i];
            loss += w * e * e;
            grad[i] = 2.0 * w * e / mass;
        }
    }
    Ok((loss / mass, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_observed_entry() {
        let (l, g) = masked_multitask_loss(&[2.0, 5.0], &[1.0, 0.0], &[true, false], &[1.0, 1.0]).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(g, vec![2.0, 0.0]);
    }

    #[test]
    fn empty_mask_is_an_error() {
        assert!(matches!(
            masked_multitask_loss(&[1.0], &[1.0], &[false], &[1.0]),
            Err(GtError::EmptyBatch)
        ));
    }
}
