//! Elementary symmetric polynomials by divide-and-conquer.

/// Returns `e_0, ..., e_J` of the inputs, with `e_0 = 1`.
///
/// `e_t` is the coefficient of `z^t` in `prod_j (1 + v_j z)`. The product is
/// split in halves and merged by direct convolution, `O(J^2)` overall.
pub fn esp(values: &[f64]) -> Vec<f64> {
    match values {
        [] => vec![1.0],
        [v] => vec![1.0, *v],
        _ => {
            let (left, right) = values.split_at(values.len() / 2);
            convolve(&esp(left), &esp(right))
        }
    }
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}
