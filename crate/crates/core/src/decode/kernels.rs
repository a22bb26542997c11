//! Check-node kernels. All compute, for every variable t of a check with
//! coefficients c and target y, the unnormalized message
//!
//!   r_t(a) = sum over x with c_t a + sum_{k != t} c_k x_k = y
//!            of prod_{k != t} mu_k(x_k; a),
//!
//! where mu_k(v; a) = q_k(v) * g_{k,t}(F^-1[v] - F^-1[a]) if sources k and t
//! are correlated and q_k(v) otherwise.

use super::transform::{fwht, inverse_at};
use super::{FactorGraph, MessageSet};
use crate::gf::FieldSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CheckKernel {
    /// Sum over all q^(d-1) configurations; reference only.
    Enumerate,
    /// Partial XOR-convolutions in the probability domain.
    Dp,
    /// Walsh-Hadamard products.
    Hadamard,
    /// Hadamard for targets with no correlated partner on the check,
    /// DP otherwise.
    #[default]
    Auto,
}

/// Unnormalized messages from check `l` to each of its variables, in the
/// order of `graph.check_vars(l)`.
pub fn check_messages(graph: &FactorGraph, ms: &MessageSet, l: usize, kernel: CheckKernel) -> Vec<Vec<f64>> {
    let ctx = CheckContext::new(graph, ms, l);
    match kernel {
        CheckKernel::Enumerate => (0..ctx.degree()).map(|t| ctx.enumerate(t)).collect(),
        CheckKernel::Dp => (0..ctx.degree()).map(|t| ctx.dp(t)).collect(),
        CheckKernel::Hadamard => {
            let spectra = ctx.spectra();
            (0..ctx.degree()).map(|t| ctx.hadamard(t, &spectra)).collect()
        }
        CheckKernel::Auto => {
            let spectra = if ctx.partners.iter().any(|p| p.is_empty()) {
                ctx.spectra()
            } else {
                Vec::new()
            };
            (0..ctx.degree())
                .map(|t| if ctx.partners[t].is_empty() { ctx.hadamard(t, &spectra) } else { ctx.dp(t) })
                .collect()
        }
    }
}

struct CheckContext<'a> {
    field: &'a FieldSpec,
    q: usize,
    vars: &'a [usize],
    coeffs: &'a [u8],
    target: u8,
    incoming: Vec<&'a [f64]>,
    /// Per slot t: the slots k whose source is correlated with t's, paired
    /// with the weight table of (k, t).
    partners: Vec<Vec<(usize, &'a [f64])>>,
    /// Field values that carry an alphabet symbol.
    image: Vec<bool>,
}

impl<'a> CheckContext<'a> {
    fn new(graph: &'a FactorGraph, ms: &'a MessageSet, l: usize) -> Self {
        let check = graph.check(l);
        let prior = graph.prior();
        let field = prior.field();
        let q = field.order();
        let d = check.vars.len();
        let incoming = (0..d).map(|k| ms.to_check(check.first_edge + k)).collect();
        let partners = (0..d)
            .map(|t| {
                (0..d)
                    .filter(|&k| k != t)
                    .filter_map(|k| prior.weights(check.vars[k], check.vars[t]).map(|w| (k, w)))
                    .collect()
            })
            .collect();
        let image = (0..q).map(|v| prior.map().symbol_of(v as u8).is_some()).collect();
        CheckContext {
            field,
            q,
            vars: &check.vars,
            coeffs: &check.coeffs,
            target: check.target,
            incoming,
            partners,
            image,
        }
    }

    fn degree(&self) -> usize {
        self.vars.len()
    }

    fn correlated(&self, t: usize, k: usize) -> Option<&'a [f64]> {
        self.partners[t].iter().find(|(slot, _)| *slot == k).map(|(_, w)| *w)
    }

    /// Field value the target variable must take when the others sum to `s`.
    fn forced(&self, t: usize, s: u8) -> u8 {
        self.field
            .div_raw(self.target ^ s, self.coeffs[t])
            .expect("check coefficients are nonzero")
    }

    /// The point at which the others' convolution is read for r_t(a).
    fn residual(&self, t: usize, a: usize) -> usize {
        (self.target ^ self.field.mul_raw(self.coeffs[t], a as u8)) as usize
    }

    /// mu_k(.; a) for target t.
    fn weighted(&self, k: usize, weights: &[f64], a: usize, out: &mut [f64]) {
        let q = self.q;
        for (v, slot) in out.iter_mut().enumerate() {
            *slot = self.incoming[k][v] * weights[v * q + a];
        }
    }

    fn enumerate(&self, t: usize) -> Vec<f64> {
        let q = self.q;
        let others: Vec<usize> = (0..self.degree()).filter(|&k| k != t).collect();
        let mut out = vec![0.0; q];
        let mut x = vec![0usize; others.len()];
        loop {
            let s = others
                .iter()
                .zip(&x)
                .fold(0u8, |acc, (&k, &v)| acc ^ self.field.mul_raw(self.coeffs[k], v as u8));
            let a = self.forced(t, s) as usize;
            let weight: f64 = others
                .iter()
                .zip(&x)
                .map(|(&k, &v)| {
                    let w = self.correlated(t, k).map_or(1.0, |w| w[v * q + a]);
                    self.incoming[k][v] * w
                })
                .product();
            out[a] += weight;
            // Odometer over GF(q)^(d-1).
            let mut i = 0;
            while i < x.len() {
                x[i] += 1;
                if x[i] < q {
                    break;
                }
                x[i] = 0;
                i += 1;
            }
            if i == x.len() {
                break;
            }
        }
        out
    }

    /// acc <- acc * (mu permuted by multiplication with c), skipping zeros.
    fn convolve_into(&self, acc: &[f64], mu: &[f64], c: u8, out: &mut [f64]) {
        out.fill(0.0);
        let support: Vec<(usize, f64)> = mu
            .iter()
            .enumerate()
            .filter(|(_, &m)| m != 0.0)
            .map(|(v, &m)| (self.field.mul_raw(c, v as u8) as usize, m))
            .collect();
        for (b, &p) in acc.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for &(cv, m) in &support {
                out[b ^ cv] += p * m;
            }
        }
    }

    fn dp(&self, t: usize) -> Vec<f64> {
        let q = self.q;
        let mut base = vec![0.0; q];
        base[0] = 1.0;
        let mut scratch = vec![0.0; q];
        for k in (0..self.degree()).filter(|&k| k != t && self.correlated(t, k).is_none()) {
            self.convolve_into(&base, self.incoming[k], self.coeffs[k], &mut scratch);
            std::mem::swap(&mut base, &mut scratch);
        }
        let partners = &self.partners[t];
        let Some((&(last, last_weights), rest)) = partners.split_last() else {
            return (0..q).map(|a| base[self.residual(t, a)]).collect();
        };

        let mut out = vec![0.0; q];
        let mut acc = vec![0.0; q];
        let mut mu = vec![0.0; q];
        for a in (0..q).filter(|&a| self.image[a]) {
            acc.copy_from_slice(&base);
            for &(k, weights) in rest {
                self.weighted(k, weights, a, &mut mu);
                self.convolve_into(&acc, &mu, self.coeffs[k], &mut scratch);
                std::mem::swap(&mut acc, &mut scratch);
            }
            // Only one point of the final convolution is needed.
            let s = self.residual(t, a);
            self.weighted(last, last_weights, a, &mut mu);
            out[a] = mu
                .iter()
                .enumerate()
                .filter(|(_, &m)| m != 0.0)
                .map(|(v, &m)| m * acc[s ^ self.field.mul_raw(self.coeffs[last], v as u8) as usize])
                .sum();
        }
        out
    }

    /// Transform of q_k permuted by its coefficient, for every slot.
    fn spectra(&self) -> Vec<Vec<f64>> {
        (0..self.degree()).map(|k| self.spectrum(self.incoming[k], self.coeffs[k])).collect()
    }

    fn spectrum(&self, mu: &[f64], c: u8) -> Vec<f64> {
        let mut permuted = vec![0.0; self.q];
        for (v, &m) in mu.iter().enumerate() {
            permuted[self.field.mul_raw(c, v as u8) as usize] = m;
        }
        fwht(&mut permuted);
        permuted
    }

    fn hadamard(&self, t: usize, spectra: &[Vec<f64>]) -> Vec<f64> {
        let q = self.q;
        let mut base = vec![1.0; q];
        for k in (0..self.degree()).filter(|&k| k != t && self.correlated(t, k).is_none()) {
            for (b, s) in base.iter_mut().zip(&spectra[k]) {
                *b *= s;
            }
        }
        let clamp = |x: f64| x.max(0.0);
        if self.partners[t].is_empty() {
            fwht(&mut base);
            return (0..q).map(|a| clamp(base[self.residual(t, a)] / q as f64)).collect();
        }
        let mut out = vec![0.0; q];
        let mut mu = vec![0.0; q];
        for a in (0..q).filter(|&a| self.image[a]) {
            let mut product = base.clone();
            for &(k, weights) in &self.partners[t] {
                self.weighted(k, weights, a, &mut mu);
                for (p, s) in product.iter_mut().zip(self.spectrum(&mu, self.coeffs[k])) {
                    *p *= s;
                }
            }
            out[a] = clamp(inverse_at(&product, self.residual(t, a)));
        }
        out
    }
}
