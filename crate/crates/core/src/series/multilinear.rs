//! Dense coefficient tensors of `B`-valued multilinear maps.
//!
//! An order-`n` map over a `d`-dimensional algebra is stored as `d^(n+1)`
//! complex numbers, `T[o][i_1]..[i_n]`, row-major with the output index
//! slowest: `map(e_{i_1}, .., e_{i_n}) = Σ_o T[o][i_1..i_n] e_o`. Order-0 maps
//! are plain elements.

use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::algebra::{Algebra, Element};
use crate::error::{Error, Result};

/// Highest order accepted by [`MultilinearMap::symmetrize`].
pub const MAX_SYMMETRIZE_ORDER: usize = 8;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct MultilinearMap {
    dim: usize,
    order: usize,
    coeffs: Vec<C64>,
}

impl MultilinearMap {
    pub fn new(dim: usize, order: usize, coeffs: Vec<C64>) -> Result<Self> {
        let expected = dim.pow(order as u32 + 1);
        if coeffs.len() != expected {
            return Err(Error::Format(format!(
                "order-{order} map over dim {dim} needs {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(MultilinearMap { dim, order, coeffs })
    }

    pub fn zeros(dim: usize, order: usize) -> Self {
        MultilinearMap {
            dim,
            order,
            coeffs: vec![ZERO; dim.pow(order as u32 + 1)],
        }
    }

    pub fn constant(value: &Element) -> Self {
        MultilinearMap {
            dim: value.dim(),
            order: 0,
            coeffs: value.coords().to_vec(),
        }
    }

    /// The identity linear map `b ↦ b`.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, 1);
        for i in 0..dim {
            m.coeffs[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Order-1 map from the coordinate matrix of a linear map.
    pub fn from_matrix(m: &DMatrix<C64>) -> Self {
        let d = m.nrows();
        let mut out = Self::zeros(d, 1);
        for o in 0..d {
            for i in 0..d {
                out.coeffs[o * d + i] = m[(o, i)];
            }
        }
        out
    }

    /// Tabulates a map from its values on basis tuples.
    pub fn from_basis_fn(dim: usize, order: usize, mut f: impl FnMut(&[usize]) -> Element) -> Self {
        let inner = dim.pow(order as u32);
        let mut out = Self::zeros(dim, order);
        for (flat, idx) in multi_indices(dim, order).enumerate() {
            let v = f(&idx);
            for o in 0..dim {
                out.coeffs[o * inner + flat] = v.coords()[o];
            }
        }
        out
    }

    /// Random coefficients with max magnitude `scale`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize, order: usize, scale: f64) -> Self {
        let e = crate::algebra::random_element(rng, dim.pow(order as u32 + 1), scale);
        MultilinearMap {
            dim,
            order,
            coeffs: e.into_coords(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Value of an order-0 map.
    pub fn as_element(&self) -> Element {
        assert_eq!(self.order, 0, "as_element on order-{} map", self.order);
        Element::new(self.coeffs.clone())
    }

    /// Coordinate matrix of an order-1 map.
    pub fn as_matrix(&self) -> DMatrix<C64> {
        assert_eq!(self.order, 1, "as_matrix on order-{} map", self.order);
        DMatrix::from_row_slice(self.dim, self.dim, &self.coeffs)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn dist(&self, other: &Self) -> f64 {
        assert_eq!((self.dim, self.order), (other.dim, other.order));
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.dim, self.order), (other.dim, other.order));
        MultilinearMap {
            dim: self.dim,
            order: self.order,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.dim, self.order), (other.dim, other.order));
        MultilinearMap {
            dim: self.dim,
            order: self.order,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        MultilinearMap {
            dim: self.dim,
            order: self.order,
            coeffs: self.coeffs.iter().map(|z| z * c).collect(),
        }
    }

    pub(crate) fn add_assign(&mut self, other: &Self) {
        assert_eq!((self.dim, self.order), (other.dim, other.order));
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    pub fn eval(&self, args: &[&Element]) -> Result<Element> {
        if args.len() != self.order {
            return Err(Error::contract(format!(
                "order-{} map applied to {} arguments",
                self.order,
                args.len()
            )));
        }
        if let Some(bad) = args.iter().find(|a| a.dim() != self.dim) {
            return Err(Error::contract(format!(
                "argument of dim {} for a map over dim {}",
                bad.dim(),
                self.dim
            )));
        }
        let d = self.dim;
        let mut data = self.coeffs.clone();
        for arg in args.iter().rev() {
            let v = arg.coords();
            data = data
                .chunks_exact(d)
                .map(|chunk| chunk.iter().zip(v).map(|(t, x)| t * x).sum())
                .collect();
        }
        Ok(Element::new(data))
    }

    /// Evaluates at `(b, .., b)`.
    pub fn eval_diag(&self, b: &Element) -> Element {
        let args = vec![b; self.order];
        self.eval(&args).expect("diagonal arity always matches")
    }

    /// Substitutes the order-`p` map `inner` into argument `slot`, giving a map
    /// of order `n - 1 + p` whose arguments for that slot are contiguous.
    pub fn substitute(&self, slot: usize, inner: &MultilinearMap) -> Self {
        assert!(slot < self.order, "slot {slot} out of range for order {}", self.order);
        assert_eq!(self.dim, inner.dim);
        let d = self.dim;
        let a = d.pow(slot as u32 + 1);
        let c = d.pow((self.order - 1 - slot) as u32);
        let w = d.pow(inner.order as u32);
        let mut out = vec![ZERO; a * w * c];
        for ai in 0..a {
            for j in 0..d {
                let src = &self.coeffs[(ai * d + j) * c..(ai * d + j + 1) * c];
                if src.iter().all(|z| *z == ZERO) {
                    continue;
                }
                let row = &inner.coeffs[j * w..(j + 1) * w];
                for (ii, &m) in row.iter().enumerate() {
                    if m == ZERO {
                        continue;
                    }
                    let dst = &mut out[(ai * w + ii) * c..(ai * w + ii + 1) * c];
                    for (o, s) in dst.iter_mut().zip(src) {
                        *o += s * m;
                    }
                }
            }
        }
        MultilinearMap {
            dim: d,
            order: self.order - 1 + inner.order,
            coeffs: out,
        }
    }

    /// Fixes argument `slot` to `value`.
    pub fn fix_slot(&self, slot: usize, value: &Element) -> Self {
        self.substitute(slot, &MultilinearMap::constant(value))
    }

    /// Precomposes argument `slot` with a linear map.
    pub fn precompose_slot(&self, slot: usize, linear: &DMatrix<C64>) -> Self {
        self.substitute(slot, &MultilinearMap::from_matrix(linear))
    }

    /// Postcomposes the output with a linear map.
    pub fn map_output(&self, linear: &DMatrix<C64>) -> Self {
        let d = self.dim;
        let inner = self.coeffs.len() / d;
        let mut out = vec![ZERO; self.coeffs.len()];
        for o2 in 0..d {
            for o in 0..d {
                let m = linear[(o2, o)];
                if m == ZERO {
                    continue;
                }
                let src = &self.coeffs[o * inner..(o + 1) * inner];
                for (dst, s) in out[o2 * inner..(o2 + 1) * inner].iter_mut().zip(src) {
                    *dst += s * m;
                }
            }
        }
        MultilinearMap {
            dim: d,
            order: self.order,
            coeffs: out,
        }
    }

    /// `x · m(..)`.
    pub fn left_mul(&self, alg: &Algebra, x: &Element) -> Self {
        self.map_output(&alg.left_mult_matrix(x))
    }

    /// `m(..) · x`.
    pub fn right_mul(&self, alg: &Algebra, x: &Element) -> Self {
        self.map_output(&alg.right_mult_matrix(x))
    }

    /// Ordered product `(b_1..b_{k+m}) ↦ f(b_1..b_k) · g(b_{k+1}..b_{k+m})`.
    pub fn tensor_mul(alg: &Algebra, f: &Self, g: &Self) -> Self {
        assert_eq!(f.dim, g.dim);
        let d = f.dim;
        let fi = d.pow(f.order as u32);
        let gi = d.pow(g.order as u32);
        let mut out = vec![ZERO; d * fi * gi];
        for t in alg.terms() {
            let fs = &f.coeffs[t.p * fi..(t.p + 1) * fi];
            let gs = &g.coeffs[t.q * gi..(t.q + 1) * gi];
            let base = t.r * fi * gi;
            for (i, &fv) in fs.iter().enumerate() {
                if fv == ZERO {
                    continue;
                }
                let cf = t.c * fv;
                let dst = &mut out[base + i * gi..base + (i + 1) * gi];
                for (o, gv) in dst.iter_mut().zip(gs) {
                    *o += cf * gv;
                }
            }
        }
        MultilinearMap {
            dim: d,
            order: f.order + g.order,
            coeffs: out,
        }
    }

    /// `(b_1..b_n) ↦ m(b_{perm[0]}, .., b_{perm[n-1]})`.
    pub fn permute_args(&self, perm: &[usize]) -> Self {
        let n = self.order;
        assert_eq!(perm.len(), n);
        let d = self.dim;
        let inner = d.pow(n as u32);
        let strides: Vec<usize> = (0..n).map(|k| d.pow((n - 1 - k) as u32)).collect();
        // Source slot k reads destination argument perm[k].
        let mut out = vec![ZERO; self.coeffs.len()];
        for (flat, idx) in multi_indices(d, n).enumerate() {
            let src: usize = (0..n).map(|k| idx[perm[k]] * strides[k]).sum();
            for o in 0..d {
                out[o * inner + flat] = self.coeffs[o * inner + src];
            }
        }
        MultilinearMap {
            dim: d,
            order: n,
            coeffs: out,
        }
    }

    /// Average over all argument permutations.
    pub fn symmetrize(&self) -> Result<Self> {
        let n = self.order;
        if n > MAX_SYMMETRIZE_ORDER {
            return Err(Error::ResourceLimit(format!(
                "symmetrizing an order-{n} map (limit {MAX_SYMMETRIZE_ORDER})"
            )));
        }
        if n <= 1 {
            return Ok(self.clone());
        }
        let mut acc = Self::zeros(self.dim, n);
        let mut count = 0usize;
        for perm in (0..n).permutations(n) {
            acc.add_assign(&self.permute_args(&perm));
            count += 1;
        }
        Ok(acc.scale(C64::new(1.0 / count as f64, 0.0)))
    }
}

/// Row-major enumeration of `{0..dim}^order`.
pub fn multi_indices(dim: usize, order: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = dim.pow(order as u32);
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; order];
        for k in (0..order).rev() {
            idx[k] = flat % dim;
            flat /= dim;
        }
        idx
    })
}
