use crate::tensor::Scalar;

/// Softmax with max-subtraction.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&v| (v - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `log Σ exp(v)` without overflow.
pub fn log_sum_exp<T: Scalar>(logits: &[T]) -> T {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    max + logits.iter().map(|&v| (v - max).exp()).sum::<T>().ln()
}

/// `-log softmax(logits)[label]`
pub fn cross_entropy<T: Scalar>(logits: &[T], label: usize) -> T {
    log_sum_exp(logits) - logits[label]
}

/// Index of the largest entry; the lowest index wins exact ties.
pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
