//! Sparse real polynomials in a fixed number of variables.
//!
//! Used by the catalog and by inline system definitions, which are limited to
//! polynomial nonlinearities so that configurations stay declarative.

use nalgebra::DMatrix;

/// `Σ coeff · Π x_i^{exps[i]}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<(f64, Vec<u32>)>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    /// Panics if an exponent vector has the wrong length.
    pub fn new(dim: usize, terms: Vec<(f64, Vec<u32>)>) -> Self {
        for (_, e) in &terms {
            assert_eq!(e.len(), dim, "exponent vector length must equal the dimension");
        }
        Self { dim, terms }
    }

    pub fn monomial(dim: usize, coeff: f64, exps: Vec<u32>) -> Self {
        Self::new(dim, vec![(coeff, exps)])
    }

    /// `coeff · x_axis^power`.
    pub fn power(dim: usize, axis: usize, coeff: f64, power: u32) -> Self {
        let mut e = vec![0; dim];
        e[axis] = power;
        Self::monomial(dim, coeff, e)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(f64, Vec<u32>)] {
        &self.terms
    }

    pub fn add(mut self, other: &Polynomial) -> Self {
        assert_eq!(self.dim, other.dim);
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    /// Largest total degree among the terms (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(_, e)| e.iter().sum()).max().unwrap_or(0)
    }

    /// True if no term involves a variable with index `>= n`.
    pub fn depends_only_on_prefix(&self, n: usize) -> bool {
        self.terms.iter().all(|(c, e)| *c == 0.0 || e[n..].iter().all(|&p| p == 0))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, e)| c * e.iter().zip(x).map(|(&p, &xi)| xi.powi(p as i32)).product::<f64>()).sum()
    }

    /// Partial derivative in `axis` evaluated at `x`.
    pub fn partial(&self, axis: usize, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (c, e) in &self.terms {
            if e[axis] == 0 {
                continue;
            }
            let mut v = c * e[axis] as f64;
            for (i, (&p, &xi)) in e.iter().zip(x).enumerate() {
                let q = if i == axis { p - 1 } else { p };
                v *= xi.powi(q as i32);
            }
            s += v;
        }
        s
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.partial(i, x);
        }
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        let mut h = DMatrix::zeros(d, d);
        for (c, e) in &self.terms {
            for a in 0..d {
                if e[a] == 0 {
                    continue;
                }
                for b in a..d {
                    let mut ex: Vec<i64> = e.iter().map(|&p| p as i64).collect();
                    let mut v = c * ex[a] as f64;
                    ex[a] -= 1;
                    if ex[b] == 0 {
                        continue;
                    }
                    v *= ex[b] as f64;
                    ex[b] -= 1;
                    for (i, &p) in ex.iter().enumerate() {
                        v *= x[i].powi(p as i32);
                    }
                    h[(a, b)] += v;
                    if a != b {
                        h[(b, a)] += v;
                    }
                }
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_well_derivatives() {
        // b = x^4/4 - x^2
        let b = Polynomial::power(2, 0, 0.25, 4).add(&Polynomial::power(2, 0, -1.0, 2));
        let x = [1.5, -0.3];
        assert!((b.eval(&x) - (1.5f64.powi(4) / 4.0 - 2.25)).abs() < 1e-12);
        assert!((b.partial(0, &x) - (1.5f64.powi(3) - 3.0)).abs() < 1e-12);
        assert_eq!(b.partial(1, &x), 0.0);
        let h = b.hessian(&x);
        assert!((h[(0, 0)] - (3.0 * 2.25 - 2.0)).abs() < 1e-12);
        assert_eq!(h[(0, 1)], 0.0);
    }

    #[test]
    fn mixed_term_hessian_is_symmetric() {
        let p = Polynomial::monomial(3, 2.0, vec![1, 2, 1]);
        let x = [0.5, -1.0, 2.0];
        let h = p.hessian(&x);
        // ∂²/∂x0∂x1 of 2 x0 x1² x2 = 4 x1 x2
        assert!((h[(0, 1)] - (4.0 * -1.0 * 2.0)).abs() < 1e-12);
        assert_eq!(h[(0, 1)], h[(1, 0)]);
        assert!((h[(1, 1)] - 4.0 * 0.5 * 2.0).abs() < 1e-12);
        assert!(p.depends_only_on_prefix(3));
        assert!(!p.depends_only_on_prefix(2));
    }
}
