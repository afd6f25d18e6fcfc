//! Sparse real polynomials in up to eight variables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::exterior::MAX_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub exps: [u8; MAX_DIM],
    pub coef: f64,
}

/// A polynomial stored as a list of monomials with distinct exponents.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Poly {
    dim: usize,
    terms: Vec<Monomial>,
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: Vec::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::from_terms(dim, [([0u8; MAX_DIM], c)])
    }

    /// The coordinate function `x_i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut e = [0u8; MAX_DIM];
        e[i] = 1;
        Self::from_terms(dim, [(e, 1.0)])
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, merging
    /// repeated exponents and dropping zero coefficients.
    pub fn from_terms<I: IntoIterator<Item = ([u8; MAX_DIM], f64)>>(dim: usize, terms: I) -> Self {
        let mut map: BTreeMap<[u8; MAX_DIM], f64> = BTreeMap::new();
        for (e, c) in terms {
            *map.entry(e).or_insert(0.0) += c;
        }
        Self {
            dim,
            terms: map
                .into_iter()
                .filter(|(_, c)| *c != 0.0)
                .map(|(exps, coef)| Monomial { exps, coef })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .map(|m| m.exps.iter().map(|&e| e as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|m| {
                let mut v = m.coef;
                for (xi, &e) in x.iter().zip(&m.exps) {
                    if e > 0 {
                        v *= xi.powi(e as i32);
                    }
                }
                v
            })
            .sum()
    }

    pub fn partial(&self, i: usize) -> Self {
        Self::from_terms(
            self.dim,
            self.terms.iter().filter(|m| m.exps[i] > 0).map(|m| {
                let mut e = m.exps;
                e[i] -= 1;
                (e, m.coef * m.exps[i] as f64)
            }),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(
            self.dim,
            self.terms
                .iter()
                .chain(&other.terms)
                .map(|m| (m.exps, m.coef)),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_terms(self.dim, self.terms.iter().map(|m| (m.exps, m.coef * s)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut e = a.exps;
                for (ei, bi) in e.iter_mut().zip(&b.exps) {
                    *ei += bi;
                }
                out.push((e, a.coef * b.coef));
            }
        }
        Self::from_terms(self.dim, out)
    }
}
