use crate::error::{Error, Result};
use crate::ndcore::{Scalar, Tensor};

#[derive(Clone, Debug)]
pub struct CrossEntropy<T> {
    pub loss: T,
    pub grad_logits: Tensor<T>,
}

/// Class-weighted softmax cross-entropy over a batch of logits `[batch × C]`,
/// normalised by the total weight of the batch's labels:
/// `Σ_i w[y_i]·(logsumexp(z_i) − z_i[y_i]) / Σ_i w[y_i]`.
pub fn weighted_cross_entropy<T: Scalar>(
    logits: &Tensor<T>,
    labels: &[usize],
    class_weights: &[T],
) -> Result<CrossEntropy<T>> {
    let (batch, classes) = match logits.shape() {
        [b, c] if *b > 0 && *c > 0 => (*b, *c),
        s => return Err(Error::Dimension(format!("cross-entropy expects [batch x C], got {s:?}"))),
    };
    if labels.len() != batch {
        return Err(Error::Dimension(format!("{} labels for a batch of {batch}", labels.len())));
    }
    if class_weights.len() != classes {
        return Err(Error::Dimension(format!("{} class weights for {classes} classes", class_weights.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
        return Err(Error::Data(format!("label {bad} out of range for {classes} classes")));
    }
    if class_weights.iter().any(|&w| !(w > T::zero())) {
        return Err(Error::Config("class weights must be positive".into()));
    }

    let total_weight: T = labels.iter().map(|&y| class_weights[y]).sum();
    let mut loss = T::zero();
    let mut grad = vec![T::zero(); batch * classes];
    for (i, &y) in labels.iter().enumerate() {
        let z = logits.row(i);
        let max = z.iter().copied().fold(T::neg_infinity(), T::max);
        let sum_exp: T = z.iter().map(|&v| (v - max).exp()).sum();
        let lse = max + sum_exp.ln();
        let w = class_weights[y] / total_weight;
        loss += w * (lse - z[y]);
        let g = &mut grad[i * classes..(i + 1) * classes];
        for (c, gc) in g.iter_mut().enumerate() {
            let p = (z[c] - lse).exp();
            *gc = w * (p - if c == y { T::one() } else { T::zero() });
        }
    }
    if !loss.is_finite() {
        return Err(Error::non_finite("cross_entropy"));
    }
    Ok(CrossEntropy { loss, grad_logits: Tensor::new(&[batch, classes], grad)? })
}
