//! Truncated `B`-valued power series at 0 ("jets").
//!
//! A jet of degree `N` holds terms `F_0, .., F_N` where `F_n` is an order-`n`
//! multilinear map and `F(b) = F_0 + Σ F_n(b, .., b)`. Terms are kept in an
//! ordered (non-symmetrized) form: products split arguments into a prefix
//! and a suffix, compositions into contiguous blocks. The diagonals of these
//! ordered forms agree with the symmetric power-series calculus, so two jets
//! describe the same germ exactly when their symmetrized terms agree; that is
//! what [`jet_equal`] compares.

mod multilinear;

pub use multilinear::{multi_indices, MultilinearMap, MAX_SYMMETRIZE_ORDER};

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{random_element, Algebra, Element, INVERTIBILITY_GATE};
use crate::error::{Error, Result};

/// Largest stored term order.
pub const MAX_TERM_ORDER: usize = 6;
/// Factorization residual above which [`Jet::strip`] fails.
pub const STRIP_TOL: f64 = 1e-8;
/// Tolerance for "vanishing at 0" preconditions.
pub const ZERO_TERM_TOL: f64 = 1e-12;

const STRIP_SAMPLES: usize = 20;
const STRIP_SEED: u64 = 0x5eed_5714;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    algebra: Algebra,
    terms: Vec<MultilinearMap>,
}

/// Compositions of `n` into `k` positive parts, in lexicographic order.
pub fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 0 {
            if n == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for first in 1..=n.saturating_sub(k - 1) {
            prefix.push(first);
            rec(n - first, k - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

impl Jet {
    pub fn new(algebra: &Algebra, terms: Vec<MultilinearMap>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::contract("a jet needs at least its constant term"));
        }
        for (n, t) in terms.iter().enumerate() {
            if t.order() != n || t.dim() != algebra.dim() {
                return Err(Error::contract(format!(
                    "term {n} has order {} over dim {} (expected order {n} over dim {})",
                    t.order(),
                    t.dim(),
                    algebra.dim()
                )));
            }
        }
        if terms.len() > MAX_TERM_ORDER + 1 {
            return Err(Error::ResourceLimit(format!(
                "jet degree {} exceeds {MAX_TERM_ORDER}",
                terms.len() - 1
            )));
        }
        Ok(Jet {
            algebra: algebra.clone(),
            terms,
        })
    }

    pub fn zero(algebra: &Algebra, degree: usize) -> Self {
        let d = algebra.dim();
        Jet {
            algebra: algebra.clone(),
            terms: (0..=degree).map(|n| MultilinearMap::zeros(d, n)).collect(),
        }
    }

    pub fn constant(algebra: &Algebra, value: &Element, degree: usize) -> Self {
        let mut j = Self::zero(algebra, degree);
        j.terms[0] = MultilinearMap::constant(value);
        j
    }

    /// The constant jet `1`.
    pub fn unit(algebra: &Algebra, degree: usize) -> Self {
        Self::constant(algebra, algebra.unit(), degree)
    }

    /// The jet of `b ↦ b`.
    pub fn identity(algebra: &Algebra, degree: usize) -> Self {
        let mut j = Self::zero(algebra, degree);
        if degree >= 1 {
            j.terms[1] = MultilinearMap::identity(algebra.dim());
        }
        j
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn degree(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn term(&self, n: usize) -> &MultilinearMap {
        &self.terms[n]
    }

    pub fn terms(&self) -> &[MultilinearMap] {
        &self.terms
    }

    pub fn constant_term(&self) -> Element {
        self.terms[0].as_element()
    }

    pub fn truncate(&self, degree: usize) -> Jet {
        Jet {
            algebra: self.algebra.clone(),
            terms: self.terms[..=degree.min(self.degree())].to_vec(),
        }
    }

    fn same_algebra(&self, other: &Jet) -> Result<()> {
        if self.algebra != other.algebra {
            return Err(Error::contract("jets over different algebras"));
        }
        Ok(())
    }

    pub fn add(&self, other: &Jet) -> Result<Jet> {
        self.same_algebra(other)?;
        let deg = self.degree().min(other.degree());
        Ok(Jet {
            algebra: self.algebra.clone(),
            terms: (0..=deg).map(|n| self.terms[n].add(&other.terms[n])).collect(),
        })
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet> {
        self.same_algebra(other)?;
        let deg = self.degree().min(other.degree());
        Ok(Jet {
            algebra: self.algebra.clone(),
            terms: (0..=deg).map(|n| self.terms[n].sub(&other.terms[n])).collect(),
        })
    }

    pub fn scale(&self, c: C64) -> Jet {
        Jet {
            algebra: self.algebra.clone(),
            terms: self.terms.iter().map(|t| t.scale(c)).collect(),
        }
    }

    /// Pointwise product, `(FG)_n = Σ_k F_k(b_1..b_k)·G_{n-k}(b_{k+1}..b_n)`.
    pub fn mul(&self, other: &Jet) -> Result<Jet> {
        self.same_algebra(other)?;
        let deg = self.degree().min(other.degree());
        let alg = &self.algebra;
        let terms = (0..=deg)
            .map(|n| {
                let mut acc = MultilinearMap::zeros(alg.dim(), n);
                for k in 0..=n {
                    acc.add_assign(&MultilinearMap::tensor_mul(alg, &self.terms[k], &other.terms[n - k]));
                }
                acc
            })
            .collect();
        Ok(Jet {
            algebra: alg.clone(),
            terms,
        })
    }

    /// `F_k(H_{p_1}(block_1), .., H_{p_k}(block_k))` with contiguous blocks.
    fn substitute_blocks(outer: &MultilinearMap, inner: &[MultilinearMap], parts: &[usize]) -> MultilinearMap {
        // Substituting from the last slot keeps earlier slot indices valid.
        let mut acc = outer.clone();
        for (slot, &p) in parts.iter().enumerate().rev() {
            acc = acc.substitute(slot, &inner[p]);
        }
        acc
    }

    /// Composition `F ∘ H` for `H_0 = 0`.
    pub fn compose(&self, inner: &Jet) -> Result<Jet> {
        self.same_algebra(inner)?;
        let h0 = inner.terms[0].max_abs();
        if h0 > ZERO_TERM_TOL {
            return Err(Error::precondition(format!(
                "composition needs an inner jet vanishing at 0 (|H_0| = {h0:e})"
            )));
        }
        let deg = self.degree().min(inner.degree());
        let d = self.algebra.dim();
        let mut terms = vec![self.terms[0].clone()];
        for n in 1..=deg {
            let mut acc = MultilinearMap::zeros(d, n);
            for k in 1..=n {
                for parts in compositions(n, k) {
                    acc.add_assign(&Self::substitute_blocks(&self.terms[k], &inner.terms, &parts));
                }
            }
            terms.push(acc);
        }
        Ok(Jet {
            algebra: self.algebra.clone(),
            terms,
        })
    }

    /// Multiplicative inverse `G = F^{-1}`, solved so that `F·G = 1`.
    pub fn reciprocal(&self) -> Result<Jet> {
        let alg = &self.algebra;
        let f0_inv = alg.inv(&self.constant_term())?;
        let lead = alg.left_mult_matrix(&f0_inv);
        let mut terms = vec![MultilinearMap::constant(&f0_inv)];
        for n in 1..=self.degree() {
            let mut acc = MultilinearMap::zeros(alg.dim(), n);
            for k in 1..=n {
                acc.add_assign(&MultilinearMap::tensor_mul(alg, &self.terms[k], &terms[n - k]));
            }
            terms.push(acc.map_output(&lead).scale(C64::new(-1.0, 0.0)));
        }
        Ok(Jet {
            algebra: alg.clone(),
            terms,
        })
    }

    /// Compositional inverse, for `F_0 = 0` and invertible linear part.
    pub fn comp_inverse(&self) -> Result<Jet> {
        let f0 = self.terms[0].max_abs();
        if f0 > ZERO_TERM_TOL {
            return Err(Error::precondition(format!(
                "compositional inverse needs F_0 = 0 (|F_0| = {f0:e})"
            )));
        }
        let d = self.algebra.dim();
        if self.degree() == 0 {
            return Err(Error::precondition("compositional inverse needs degree >= 1"));
        }
        let lin = self.terms[1].as_matrix();
        let condition = crate::algebra::singular_value_ratio(&lin);
        if condition.is_nan() || condition <= INVERTIBILITY_GATE {
            return Err(Error::NotInvertible { condition });
        }
        let lin_inv = lin.try_inverse().ok_or(Error::NotInvertible { condition })?;
        let mut terms = vec![MultilinearMap::zeros(d, 0), MultilinearMap::from_matrix(&lin_inv)];
        let neg_inv = lin_inv.map(|z| -z);
        for n in 2..=self.degree() {
            let mut acc = MultilinearMap::zeros(d, n);
            for k in 2..=n {
                for parts in compositions(n, k) {
                    acc.add_assign(&Self::substitute_blocks(&self.terms[k], &terms, &parts));
                }
            }
            terms.push(acc.map_output(&neg_inv));
        }
        Ok(Jet {
            algebra: self.algebra.clone(),
            terms,
        })
    }

    /// Writes `G(b) = b·H(b)` (left) or `G(b) = H(b)·b` (right) and returns `H`
    /// with the largest sampled factorization residual.
    pub fn strip_with_residual(&self, side: Side) -> Result<(Jet, f64)> {
        let g0 = self.terms[0].max_abs();
        if g0 > ZERO_TERM_TOL {
            return Err(Error::precondition(format!("strip needs G_0 = 0 (|G_0| = {g0:e})")));
        }
        if self.degree() == 0 {
            return Err(Error::precondition("strip needs degree >= 1"));
        }
        let alg = &self.algebra;
        let d = alg.dim();
        let u = alg.unit();
        let mut rng = ChaCha8Rng::seed_from_u64(STRIP_SEED);
        let mut residual: f64 = 0.0;
        let mut terms = Vec::with_capacity(self.degree());
        for n in 1..=self.degree() {
            let g = &self.terms[n];
            let h = match side {
                Side::Left => g.fix_slot(0, u),
                Side::Right => g.fix_slot(n - 1, u),
            };
            for _ in 0..STRIP_SAMPLES {
                let args: Vec<Element> = (0..n).map(|_| random_element(&mut rng, d, 1.0)).collect();
                let refs: Vec<&Element> = args.iter().collect();
                let want = g.eval(&refs)?;
                let got = match side {
                    Side::Left => alg.mul(&args[0], &h.eval(&refs[1..])?),
                    Side::Right => alg.mul(&h.eval(&refs[..n - 1])?, &args[n - 1]),
                };
                residual = residual.max(got.dist(&want) / want.max_abs().max(1.0));
            }
            terms.push(h);
        }
        if residual > STRIP_TOL {
            return Err(Error::FactorizationFailed { residual });
        }
        Ok((
            Jet {
                algebra: alg.clone(),
                terms,
            },
            residual,
        ))
    }

    pub fn strip(&self, side: Side) -> Result<Jet> {
        self.strip_with_residual(side).map(|(j, _)| j)
    }

    /// `b·F(b)` (left) or `F(b)·b` (right), one degree higher; undoes [`Jet::strip`].
    pub fn times_arg(&self, side: Side) -> Jet {
        let alg = &self.algebra;
        let id = MultilinearMap::identity(alg.dim());
        let mut terms = vec![MultilinearMap::zeros(alg.dim(), 0)];
        for t in &self.terms {
            terms.push(match side {
                Side::Left => MultilinearMap::tensor_mul(alg, &id, t),
                Side::Right => MultilinearMap::tensor_mul(alg, t, &id),
            });
        }
        Jet {
            algebra: alg.clone(),
            terms,
        }
    }

    /// `F_0 + Σ F_n(b, .., b)`.
    pub fn diag_eval(&self, b: &Element) -> Element {
        self.terms
            .iter()
            .fold(Element::zeros(self.algebra.dim()), |acc, t| &acc + &t.eval_diag(b))
    }

    /// Canonical form: every term symmetrized.
    pub fn symmetrized(&self) -> Result<Jet> {
        Ok(Jet {
            algebra: self.algebra.clone(),
            terms: self.terms.iter().map(|t| t.symmetrize()).collect::<Result<_>>()?,
        })
    }
}

/// Outcome of comparing two jets term by term after symmetrization.
#[derive(Clone, Debug, Serialize)]
pub struct JetComparison {
    pub per_degree: Vec<f64>,
    pub max_dev: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Deviation between two maps, relative once the larger magnitude exceeds 1.
pub fn scaled_dist(a: &MultilinearMap, b: &MultilinearMap) -> f64 {
    let scale = a.max_abs().max(b.max_abs()).max(1.0);
    a.dist(b) / scale
}

/// Compares symmetrized terms over the common degree range.
pub fn jet_equal(f: &Jet, g: &Jet, tol: f64) -> Result<JetComparison> {
    f.same_algebra(g)?;
    if f.degree() != g.degree() {
        return Err(Error::contract(format!(
            "comparing jets of degree {} and {}",
            f.degree(),
            g.degree()
        )));
    }
    let per_degree = f
        .terms
        .iter()
        .zip(&g.terms)
        .map(|(a, b)| Ok(scaled_dist(&a.symmetrize()?, &b.symmetrize()?)))
        .collect::<Result<Vec<f64>>>()?;
    let max_dev = per_degree.iter().copied().fold(0.0, f64::max);
    Ok(JetComparison {
        per_degree,
        max_dev,
        tol,
        pass: max_dev <= tol,
    })
}

#[cfg(test)]
mod tests;
