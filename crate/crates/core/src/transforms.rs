//! S- and R-transforms computed from moment functions.
//!
//! The `n`th moment function of `a` is `μ_n(b_1, .., b_n) = E(b_1 a b_2 a .. b_n a)`.
//! From these we build the generating jets
//!
//! * `Ψ(b) = E((1 - ba)^{-1}) - 1`, with ordered terms `Ψ_n = μ_n`,
//! * `Φ(b) = E(a(1 - ba)^{-1})`, so that `Ψ(b) = b·Φ(b)`,
//! * `C(b) = E((1 - ba)^{-1} b)`, with `C_n(b_1..b_n) = μ_{n-1}(b_1..b_{n-1})·b_n`,
//!
//! and invert them. The S-transform is `S(b) = (1 + b)H(b)` where
//! `Ψ^{<-1>}(b) = b·H(b)`; the R-transform solves
//! `C^{<-1>}(b) = (1 + bR(b))^{-1} b`.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{random_element, Algebra, Element};
use crate::error::{Error, Result};
use crate::series::{jet_equal, scaled_dist, Jet, MultilinearMap, Side};

/// Bimodularity tolerance for moment data.
pub const BIMODULE_TOL: f64 = 1e-10;
/// Tolerance on `S_0 = E(a)^{-1}` and `R_0 = E(a)`.
pub const ANCHOR_TOL: f64 = 1e-10;
/// Change allowed in transform terms that must not depend on a perturbed moment.
pub const DEPENDENCE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    S,
    R,
}

/// Moment functions `μ_1, .., μ_N` of one random variable.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentData {
    algebra: Algebra,
    moments: Vec<MultilinearMap>,
}

impl MomentData {
    pub fn new(algebra: &Algebra, moments: Vec<MultilinearMap>) -> Result<Self> {
        if moments.is_empty() {
            return Err(Error::contract("moment data needs at least the first moment"));
        }
        for (i, m) in moments.iter().enumerate() {
            if m.order() != i + 1 || m.dim() != algebra.dim() {
                return Err(Error::contract(format!(
                    "moment {} has order {} over dim {}",
                    i + 1,
                    m.order(),
                    m.dim()
                )));
            }
        }
        Ok(MomentData {
            algebra: algebra.clone(),
            moments,
        })
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn order(&self) -> usize {
        self.moments.len()
    }

    /// `μ_n`, 1-based.
    pub fn moment(&self, n: usize) -> &MultilinearMap {
        &self.moments[n - 1]
    }

    pub fn moments(&self) -> &[MultilinearMap] {
        &self.moments
    }

    /// `E(a) = μ_1(1)`.
    pub fn mean(&self) -> Element {
        self.moments[0]
            .eval(&[self.algebra.unit()])
            .expect("first moment is linear")
    }

    pub fn truncate(&self, order: usize) -> Result<MomentData> {
        if order == 0 || order > self.order() {
            return Err(Error::precondition(format!(
                "cannot truncate order-{} moment data to {order}",
                self.order()
            )));
        }
        Ok(MomentData {
            algebra: self.algebra.clone(),
            moments: self.moments[..order].to_vec(),
        })
    }

    /// `μ_n ↦ λ^n μ_n`, the moments of `λa` for central scalar `λ`.
    pub fn scaled(&self, lambda: C64) -> MomentData {
        MomentData {
            algebra: self.algebra.clone(),
            moments: self
                .moments
                .iter()
                .enumerate()
                .map(|(i, m)| m.scale(lambda.powi(i as i32 + 1)))
                .collect(),
        }
    }

    pub(crate) fn with_moment(&self, n: usize, value: MultilinearMap) -> MomentData {
        let mut out = self.clone();
        out.moments[n - 1] = value;
        out
    }

    /// Largest sampled violation of `μ_n(c·b_1, ..) = c·μ_n(b_1, ..)`.
    pub fn bimodule_residual(&self, samples: usize, seed: u64) -> f64 {
        let alg = &self.algebra;
        let d = alg.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for m in &self.moments {
            for _ in 0..samples {
                let c = random_element(&mut rng, d, 1.0);
                let mut args: Vec<Element> = (0..m.order()).map(|_| random_element(&mut rng, d, 1.0)).collect();
                let base = m.eval(&args.iter().collect::<Vec<_>>()).expect("arity");
                args[0] = alg.mul(&c, &args[0]);
                let shifted = m.eval(&args.iter().collect::<Vec<_>>()).expect("arity");
                worst = worst.max(shifted.dist(&alg.mul(&c, &base)));
            }
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        let residual = self.bimodule_residual(8, 0xb1d0);
        if residual > BIMODULE_TOL {
            return Err(Error::precondition(format!(
                "moment data violates E(c b a ..) = c E(b a ..) by {residual:e}"
            )));
        }
        Ok(())
    }
}

/// Residual magnitudes from each pipeline stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub inversion: f64,
    pub strip: f64,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct TransformResult {
    /// Symmetrized canonical form.
    pub jet: Jet,
    pub diagnostics: Diagnostics,
}

/// `Ψ`, degree `N`.
pub fn psi_jet(m: &MomentData) -> Jet {
    let d = m.algebra.dim();
    let mut terms = vec![MultilinearMap::zeros(d, 0)];
    terms.extend(m.moments.iter().cloned());
    Jet::new(&m.algebra, terms).expect("moment orders are consecutive")
}

/// `Φ`, degree `N - 1`, with `Φ_n(b_1..b_n) = μ_{n+1}(1, b_1, .., b_n)`.
pub fn phi_jet(m: &MomentData) -> Jet {
    let u = m.algebra.unit();
    let terms = m.moments.iter().map(|mu| mu.fix_slot(0, u)).collect();
    Jet::new(&m.algebra, terms).expect("moment orders are consecutive")
}

/// `C`, degree `N + 1`: the last term uses `μ_N`.
pub fn c_jet(m: &MomentData) -> Jet {
    let alg = &m.algebra;
    let d = alg.dim();
    let id = MultilinearMap::identity(d);
    let mut terms = vec![MultilinearMap::zeros(d, 0), id.clone()];
    for mu in &m.moments {
        terms.push(MultilinearMap::tensor_mul(alg, mu, &id));
    }
    Jet::new(alg, terms).expect("moment orders are consecutive")
}

fn identity_dev(j: &Jet) -> Result<f64> {
    Ok(jet_equal(j, &Jet::identity(j.algebra(), j.degree()), 0.0)?.max_dev)
}

/// S-transform to degree `N - 1` from moments of order `N`.
pub fn s_transform(m: &MomentData) -> Result<TransformResult> {
    let alg = &m.algebra;
    let n = m.order();
    let mean_inv = alg.inv(&m.mean())?;

    let psi = psi_jet(m);
    let psi_inv = psi.comp_inverse()?;
    let inversion = identity_dev(&psi.compose(&psi_inv)?)?;
    let (h, strip) = psi_inv.strip_with_residual(Side::Left)?;

    let one_plus_b = Jet::unit(alg, n - 1).add(&Jet::identity(alg, n - 1))?;
    let s = one_plus_b.mul(&h)?;

    // H(b)·Φ(b·H(b)) = 1
    let defining = h.mul(&phi_jet(m).compose(&psi_inv)?)?;
    let residual = jet_equal(&defining, &Jet::unit(alg, n - 1), 0.0)?.max_dev;

    let anchor = s.constant_term().dist(&mean_inv);
    if anchor > ANCHOR_TOL {
        return Err(Error::contract(format!("S_0 differs from E(a)^-1 by {anchor:e}")));
    }
    Ok(TransformResult {
        jet: s.symmetrized()?,
        diagnostics: Diagnostics {
            inversion,
            strip,
            residual,
        },
    })
}

/// R-transform to degree `N - 1` from moments of order `N`.
pub fn r_transform(m: &MomentData) -> Result<TransformResult> {
    let alg = &m.algebra;
    let n = m.order();

    let c = c_jet(m);
    let k = c.comp_inverse()?;
    let inversion = identity_dev(&c.compose(&k)?)?;

    // K(b)·R(b)·b = b - K(b), and K(b) = b·K̃(b) with K̃_0 = 1.
    let t = Jet::identity(alg, n + 1).sub(&k)?;
    let (q, s1) = t.strip_with_residual(Side::Right)?;
    let (p, s2) = q.strip_with_residual(Side::Left)?;
    let (k_tilde, s3) = k.strip_with_residual(Side::Left)?;
    let r = k_tilde.reciprocal()?.mul(&p)?;

    let anchor = r.constant_term().dist(&m.mean());
    if anchor > ANCHOR_TOL {
        return Err(Error::contract(format!("R_0 differs from E(a) by {anchor:e}")));
    }

    let residual = r_fixed_point_residual(m, &r)?;
    Ok(TransformResult {
        jet: r.symmetrized()?,
        diagnostics: Diagnostics {
            inversion,
            strip: s1.max(s2).max(s3),
            residual,
        },
    })
}

/// `Φ((1 + bR(b))^{-1} b)·(1 + bR(b))^{-1} - R(b)`, measured both as
/// symmetrized terms and on diagonals at small random points.
fn r_fixed_point_residual(m: &MomentData, r: &Jet) -> Result<f64> {
    let alg = &m.algebra;
    let deg = r.degree() + 1;
    let inv = Jet::unit(alg, deg).add(&r.times_arg(Side::Left))?.reciprocal()?;
    let w = inv.mul(&Jet::identity(alg, deg))?;
    let lhs = phi_jet(m).compose(&w)?.mul(&inv)?;
    let diff = lhs.sub(r)?;
    let zero = Jet::zero(alg, diff.degree());
    let mut worst = jet_equal(&diff, &zero, 0.0)?.max_dev;
    let mut rng = ChaCha8Rng::seed_from_u64(0x4e51);
    for _ in 0..10 {
        let b = random_element(&mut rng, alg.dim(), 0.1);
        worst = worst.max(diff.diag_eval(&b).max_abs());
    }
    Ok(worst)
}

/// `S_y(b)·S_x(S_y(b)^{-1} b S_y(b))`.
pub fn twisted_rhs(sx: &Jet, sy: &Jet) -> Result<Jet> {
    if sx.degree() != sy.degree() {
        return Err(Error::contract(format!(
            "twisted product of degree {} and {} jets",
            sx.degree(),
            sy.degree()
        )));
    }
    let alg = sy.algebra();
    let deg = sy.degree();
    let conj = sy.reciprocal()?.mul(&Jet::identity(alg, deg))?.mul(sy)?;
    sy.mul(&sx.compose(&conj)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct DependenceReport {
    pub kind: TransformKind,
    pub n: usize,
    /// Moment index that was perturbed, or `None` when it lies past the data.
    pub perturbed: Option<usize>,
    /// Largest change among terms `0..=n`.
    pub max_change: f64,
    /// Largest change among the remaining terms.
    pub max_change_beyond: f64,
    /// Change of every term, by degree.
    pub changes: Vec<f64>,
    pub pass: bool,
}

/// Perturbs `μ_{n+1}` (S) or `μ_{n+2}` (R) and measures how terms `0..=n` move.
pub fn dependence_check(m: &MomentData, kind: TransformKind, n: usize, seed: u64) -> Result<DependenceReport> {
    let target = match kind {
        TransformKind::S => n + 1,
        TransformKind::R => n + 2,
    };
    locality_check(m, kind, target, n, seed)
}

/// Perturbs `μ_target` by `b_1·ν(b_2, ..)` with random `ν` of magnitude 1 and
/// reports the change of every transform term. Passes when terms `0..=n`
/// move by less than [`DEPENDENCE_TOL`]. A target past the data perturbs nothing.
pub fn locality_check(
    m: &MomentData,
    kind: TransformKind,
    target: usize,
    n: usize,
    seed: u64,
) -> Result<DependenceReport> {
    if n + 1 > m.order() || target == 0 {
        return Err(Error::precondition(format!(
            "{kind:?}-transform from order-{} moments has no term {n}",
            m.order()
        )));
    }
    let alg = &m.algebra;
    let transform = |data: &MomentData| match kind {
        TransformKind::S => s_transform(data),
        TransformKind::R => r_transform(data),
    };
    let base = transform(m)?.jet;
    let perturbed = (target <= m.order()).then_some(target);
    let moved = match perturbed {
        Some(t) => {
            // b_1·ν(b_2, ..) keeps the perturbed moment left B-linear.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let nu = MultilinearMap::random(&mut rng, alg.dim(), t - 1, 1.0);
            let delta = MultilinearMap::tensor_mul(alg, &MultilinearMap::identity(alg.dim()), &nu);
            transform(&m.with_moment(t, m.moment(t).add(&delta)))?.jet
        }
        None => base.clone(),
    };
    let changes: Vec<f64> = base
        .terms()
        .iter()
        .zip(moved.terms())
        .map(|(a, b)| scaled_dist(a, b))
        .collect();
    let max_change = changes[..=n].iter().copied().fold(0.0, f64::max);
    let max_change_beyond = changes[n + 1..].iter().copied().fold(0.0, f64::max);
    Ok(DependenceReport {
        kind,
        n,
        perturbed,
        max_change,
        max_change_beyond,
        changes,
        pass: max_change < DEPENDENCE_TOL,
    })
}
