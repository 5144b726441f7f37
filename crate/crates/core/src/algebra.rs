//! Finite-dimensional unital algebras given by structure constants.
//!
//! An [`Algebra`] of dimension `d` stores the products of its basis vectors,
//! `e_p · e_q = Σ_r c[p][q][r] e_r`, together with the coordinates of its
//! unit. Two backends are built in: the full matrix algebra `M_k` (basis of
//! matrix units `E_ij` at index `i·k + j`) and the commutative diagonal algebra
//! `C^d`. Anything else can be supplied as custom structure constants, which
//! are checked for associativity and the unit laws on construction.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the associativity and unit checks on custom algebras.
pub const AXIOM_TOL: f64 = 1e-12;

/// Smallest admissible ratio of extreme singular values for inversion.
pub const INVERTIBILITY_GATE: f64 = 1e-8;

pub(crate) fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

pub(crate) fn from_pair(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

/// JSON description of an algebra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AlgebraSpec {
    Matrix {
        k: usize,
    },
    Diagonal {
        d: usize,
    },
    Custom {
        dim: usize,
        unit: Vec<[f64; 2]>,
        structure: Vec<Vec<Vec<[f64; 2]>>>,
    },
}

impl AlgebraSpec {
    /// Parses the short command-line forms `matrix:K` and `diagonal:D`.
    pub fn parse_short(s: &str) -> Result<Self> {
        let (kind, n) = s
            .split_once(':')
            .ok_or_else(|| Error::Format(format!("expected kind:size, got {s:?}")))?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad algebra size in {s:?}")))?;
        match kind.trim() {
            "matrix" => Ok(AlgebraSpec::Matrix { k: n }),
            "diagonal" => Ok(AlgebraSpec::Diagonal { d: n }),
            other => Err(Error::Format(format!("unknown algebra kind {other:?}"))),
        }
    }
}

impl fmt::Display for AlgebraSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgebraSpec::Matrix { k } => write!(f, "matrix:{k}"),
            AlgebraSpec::Diagonal { d } => write!(f, "diagonal:{d}"),
            AlgebraSpec::Custom { dim, .. } => write!(f, "custom:{dim}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgebraKind {
    Matrix(usize),
    Diagonal(usize),
    Custom,
}

/// An element of an algebra, stored as its basis coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    coords: Vec<C64>,
}

impl Element {
    pub fn new(coords: Vec<C64>) -> Self {
        Element { coords }
    }

    pub fn zeros(dim: usize) -> Self {
        Element {
            coords: vec![C64::new(0.0, 0.0); dim],
        }
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut e = Self::zeros(dim);
        e.coords[i] = C64::new(1.0, 0.0);
        e
    }

    pub fn from_real(values: &[f64]) -> Self {
        Element {
            coords: values.iter().map(|&v| C64::new(v, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<C64> {
        self.coords
    }

    /// Max-coordinate magnitude, the working norm.
    pub fn max_abs(&self) -> f64 {
        self.coords.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: C64) -> Element {
        Element {
            coords: self.coords.iter().map(|&z| z * c).collect(),
        }
    }

    /// Max-coordinate distance to `other`.
    pub fn dist(&self, other: &Element) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Add for &Element {
    type Output = Element;
    fn add(self, rhs: &Element) -> Element {
        assert_eq!(self.dim(), rhs.dim(), "element dimension mismatch");
        Element {
            coords: self.coords.iter().zip(&rhs.coords).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Element {
    type Output = Element;
    fn sub(self, rhs: &Element) -> Element {
        assert_eq!(self.dim(), rhs.dim(), "element dimension mismatch");
        Element {
            coords: self.coords.iter().zip(&rhs.coords).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Element {
    type Output = Element;
    fn neg(self) -> Element {
        Element {
            coords: self.coords.iter().map(|z| -z).collect(),
        }
    }
}

/// Nonzero structure constant `e_p · e_q ∋ c · e_r`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Term {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub c: C64,
}

#[derive(Debug)]
struct AlgebraData {
    dim: usize,
    kind: AlgebraKind,
    structure: Vec<C64>,
    terms: Vec<Term>,
    unit: Element,
}

/// A finite-dimensional unital associative algebra. Cheap to clone.
#[derive(Clone, Debug)]
pub struct Algebra {
    inner: Arc<AlgebraData>,
}

impl PartialEq for Algebra {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.kind == other.inner.kind
                && self.inner.structure == other.inner.structure
                && self.inner.unit == other.inner.unit)
    }
}

impl Algebra {
    pub fn create(spec: &AlgebraSpec) -> Result<Self> {
        match *spec {
            AlgebraSpec::Matrix { k } => Self::matrix(k),
            AlgebraSpec::Diagonal { d } => Self::diagonal(d),
            AlgebraSpec::Custom {
                dim,
                ref unit,
                ref structure,
            } => {
                if unit.len() != dim
                    || structure.len() != dim
                    || structure
                        .iter()
                        .any(|row| row.len() != dim || row.iter().any(|col| col.len() != dim))
                {
                    return Err(Error::Format(format!(
                        "custom algebra of dim {dim} needs a {dim}-vector unit and a {dim}x{dim}x{dim} structure"
                    )));
                }
                let flat = structure.iter().flatten().flatten().map(|&z| from_pair(z)).collect();
                let unit = Element::new(unit.iter().map(|&z| from_pair(z)).collect());
                Self::custom(dim, flat, unit)
            }
        }
    }

    /// The full matrix algebra `M_k`, `1 ≤ k ≤ 4`.
    pub fn matrix(k: usize) -> Result<Self> {
        if !(1..=4).contains(&k) {
            return Err(Error::precondition(format!("matrix(k) needs 1 <= k <= 4, got {k}")));
        }
        let dim = k * k;
        let mut structure = vec![C64::new(0.0, 0.0); dim * dim * dim];
        for i in 0..k {
            for j in 0..k {
                for m in 0..k {
                    // E_ij E_jm = E_im
                    let (p, q, r) = (i * k + j, j * k + m, i * k + m);
                    structure[(p * dim + q) * dim + r] = C64::new(1.0, 0.0);
                }
            }
        }
        let mut unit = Element::zeros(dim);
        for i in 0..k {
            unit.coords[i * k + i] = C64::new(1.0, 0.0);
        }
        Ok(Self::from_parts(dim, AlgebraKind::Matrix(k), structure, unit))
    }

    /// The commutative algebra `C^d` with componentwise product, `1 ≤ d ≤ 16`.
    pub fn diagonal(d: usize) -> Result<Self> {
        if !(1..=16).contains(&d) {
            return Err(Error::precondition(format!("diagonal(d) needs 1 <= d <= 16, got {d}")));
        }
        let mut structure = vec![C64::new(0.0, 0.0); d * d * d];
        for p in 0..d {
            structure[(p * d + p) * d + p] = C64::new(1.0, 0.0);
        }
        let unit = Element::new(vec![C64::new(1.0, 0.0); d]);
        Ok(Self::from_parts(d, AlgebraKind::Diagonal(d), structure, unit))
    }

    /// Custom structure constants, flattened as `c[(p·d + q)·d + r]`.
    pub fn custom(dim: usize, structure: Vec<C64>, unit: Element) -> Result<Self> {
        if dim == 0 || dim > 16 {
            return Err(Error::precondition(format!(
                "custom algebra dim must be 1..=16, got {dim}"
            )));
        }
        if structure.len() != dim * dim * dim || unit.dim() != dim {
            return Err(Error::Format("structure/unit length does not match dim".into()));
        }
        let alg = Self::from_parts(dim, AlgebraKind::Custom, structure, unit);
        alg.validate()?;
        Ok(alg)
    }

    /// Builds an algebra without checking the axioms; used for fault injection.
    pub fn from_parts_unchecked(dim: usize, structure: Vec<C64>, unit: Element) -> Self {
        Self::from_parts(dim, AlgebraKind::Custom, structure, unit)
    }

    fn from_parts(dim: usize, kind: AlgebraKind, structure: Vec<C64>, unit: Element) -> Self {
        let mut terms = Vec::new();
        for p in 0..dim {
            for q in 0..dim {
                for r in 0..dim {
                    let c = structure[(p * dim + q) * dim + r];
                    if c != C64::new(0.0, 0.0) {
                        terms.push(Term { p, q, r, c });
                    }
                }
            }
        }
        Algebra {
            inner: Arc::new(AlgebraData {
                dim,
                kind,
                structure,
                terms,
                unit,
            }),
        }
    }

    /// Checks associativity on all basis triples and the two unit laws.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        for p in 0..d {
            let ep = Element::basis(d, p);
            for q in 0..d {
                let eq = Element::basis(d, q);
                let pq = self.mul(&ep, &eq);
                for s in 0..d {
                    let es = Element::basis(d, s);
                    let residual = self.mul(&pq, &es).dist(&self.mul(&ep, &self.mul(&eq, &es)));
                    if residual > AXIOM_TOL {
                        return Err(Error::InvalidAlgebra {
                            axiom: "associativity",
                            p,
                            q,
                            s,
                            residual,
                        });
                    }
                }
            }
            let u = self.unit();
            let residual = self.mul(u, &ep).dist(&ep).max(self.mul(&ep, u).dist(&ep));
            if residual > AXIOM_TOL {
                return Err(Error::InvalidAlgebra {
                    axiom: "unit law",
                    p,
                    q: p,
                    s: p,
                    residual,
                });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn kind(&self) -> AlgebraKind {
        self.inner.kind
    }

    pub fn unit(&self) -> &Element {
        &self.inner.unit
    }

    pub fn zero(&self) -> Element {
        Element::zeros(self.dim())
    }

    pub fn basis(&self, i: usize) -> Element {
        Element::basis(self.dim(), i)
    }

    /// Structure constant `c[p][q][r]`.
    pub fn structure(&self, p: usize, q: usize, r: usize) -> C64 {
        let d = self.dim();
        self.inner.structure[(p * d + q) * d + r]
    }

    pub(crate) fn terms(&self) -> &[Term] {
        &self.inner.terms
    }

    pub fn spec(&self) -> AlgebraSpec {
        match self.kind() {
            AlgebraKind::Matrix(k) => AlgebraSpec::Matrix { k },
            AlgebraKind::Diagonal(d) => AlgebraSpec::Diagonal { d },
            AlgebraKind::Custom => {
                let d = self.dim();
                AlgebraSpec::Custom {
                    dim: d,
                    unit: self.unit().coords().iter().map(|&z| pair(z)).collect(),
                    structure: (0..d)
                        .map(|p| {
                            (0..d)
                                .map(|q| (0..d).map(|r| pair(self.structure(p, q, r))).collect())
                                .collect()
                        })
                        .collect(),
                }
            }
        }
    }

    pub fn is_commutative(&self) -> bool {
        let d = self.dim();
        (0..d).all(|p| (0..d).all(|q| (0..d).all(|r| self.structure(p, q, r) == self.structure(q, p, r))))
    }

    pub fn mul(&self, x: &Element, y: &Element) -> Element {
        debug_assert_eq!(x.dim(), self.dim());
        debug_assert_eq!(y.dim(), self.dim());
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for t in self.terms() {
            out[t.r] += t.c * x.coords[t.p] * y.coords[t.q];
        }
        Element::new(out)
    }

    /// Product of a sequence, left to right; the unit for an empty slice.
    pub fn product(&self, xs: &[&Element]) -> Element {
        xs.iter().fold(self.unit().clone(), |acc, x| self.mul(&acc, x))
    }

    /// Matrix of `h ↦ x·h` on coordinates: column `q` holds `x·e_q`.
    pub fn left_mult_matrix(&self, x: &Element) -> DMatrix<C64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for t in self.terms() {
            m[(t.r, t.q)] += t.c * x.coords[t.p];
        }
        m
    }

    /// Matrix of `h ↦ h·x` on coordinates.
    pub fn right_mult_matrix(&self, x: &Element) -> DMatrix<C64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for t in self.terms() {
            m[(t.r, t.p)] += t.c * x.coords[t.q];
        }
        m
    }

    /// Two-sided inverse, gated on the conditioning of left multiplication.
    pub fn inv(&self, x: &Element) -> Result<Element> {
        let lx = self.left_mult_matrix(x);
        let condition = singular_value_ratio(&lx);
        if condition.is_nan() || condition <= INVERTIBILITY_GATE {
            return Err(Error::NotInvertible { condition });
        }
        let rhs = DVector::from_column_slice(self.unit().coords());
        let y = lx.lu().solve(&rhs).ok_or(Error::NotInvertible { condition })?;
        Ok(Element::new(y.iter().copied().collect()))
    }

    /// Deterministic random element whose max-coordinate magnitude is `radius`.
    pub fn random(&self, seed: u64, radius: f64) -> Element {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_element(&mut rng, self.dim(), radius)
    }

    /// `u + random(seed, radius)`, invertible whenever `radius` is small.
    pub fn near_unit(&self, seed: u64, radius: f64) -> Element {
        self.unit() + &self.random(seed, radius)
    }
}

/// Ratio of the smallest to the largest singular value (0 for the zero matrix).
pub fn singular_value_ratio(m: &DMatrix<C64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

/// Coordinates uniform in the unit square, rescaled to max magnitude `radius`.
pub fn random_element<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Element {
    let raw: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let max = raw.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let s = if max > 0.0 { radius / max } else { 0.0 };
    Element::new(raw.into_iter().map(|z| z * s).collect())
}
