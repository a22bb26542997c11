//! Convolution over the additive group of GF(2^p), i.e. XOR convolution,
//! and the Walsh-Hadamard transform that diagonalizes it.

/// In-place unnormalized Walsh-Hadamard transform; `v.len()` must be a
/// power of two. Applying it twice scales by `v.len()`.
pub fn fwht(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let (x, y) = (v[i], v[i + h]);
                v[i] = x + y;
                v[i + h] = x - y;
            }
        }
        h *= 2;
    }
}

/// (u * v)(a) = sum_b u(b) v(a ^ b), through the transform.
pub fn xor_convolution(u: &[f64], v: &[f64]) -> Vec<f64> {
    assert_eq!(u.len(), v.len(), "operands must have equal length");
    let n = u.len();
    let mut fu = u.to_vec();
    let mut fv = v.to_vec();
    fwht(&mut fu);
    fwht(&mut fv);
    for (a, b) in fu.iter_mut().zip(&fv) {
        *a *= b;
    }
    fwht(&mut fu);
    fu.iter_mut().for_each(|x| *x /= n as f64);
    fu
}

/// O(q^2) reference for `xor_convolution`.
pub fn xor_convolution_naive(u: &[f64], v: &[f64]) -> Vec<f64> {
    assert_eq!(u.len(), v.len(), "operands must have equal length");
    let mut out = vec![0.0; u.len()];
    for (a, slot) in out.iter_mut().enumerate() {
        *slot = u.iter().enumerate().map(|(b, &ub)| ub * v[a ^ b]).sum();
    }
    out
}

/// Inverse transform evaluated at the single point `s`.
pub(crate) fn inverse_at(spectrum: &[f64], s: usize) -> f64 {
    let total: f64 = spectrum
        .iter()
        .enumerate()
        .map(|(j, &x)| if (j & s).count_ones().is_multiple_of(2) { x } else { -x })
        .sum();
    total / spectrum.len() as f64
}
