use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::{FockConfig, FockVector, Operator};
use crate::algebra::{Algebra, Element};
use crate::error::{Error, Result};
use crate::series::{scaled_dist, Jet, MultilinearMap};
use crate::transforms::MomentData;

/// A fitted model must reproduce its target moments to this tolerance.
pub const FIT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelFlavor {
    /// `X = Σ_n V_{i,n}(α_n) + W_{i,n}(α_n)`, with `S_X = F^{-1}`.
    S,
    /// `X = L_i + Σ_n V_{i,n}(α_n)`, with `R_X = F`.
    R,
}

/// A model variable on index letter `i` with coefficients `α_0, .., α_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct RvModel {
    index: usize,
    flavor: ModelFlavor,
    coeffs: Vec<MultilinearMap>,
}

impl RvModel {
    pub fn new(algebra: &Algebra, index: usize, flavor: ModelFlavor, coeffs: Vec<MultilinearMap>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::contract("a model needs at least α_0"));
        }
        for (n, a) in coeffs.iter().enumerate() {
            if a.order() != n || a.dim() != algebra.dim() {
                return Err(Error::contract(format!(
                    "coefficient {n} has order {} over dim {}",
                    a.order(),
                    a.dim()
                )));
            }
        }
        if flavor == ModelFlavor::S {
            algebra.inv(&coeffs[0].as_element())?;
        }
        Ok(RvModel { index, flavor, coeffs })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn flavor(&self) -> ModelFlavor {
        self.flavor
    }

    pub fn coeffs(&self) -> &[MultilinearMap] {
        &self.coeffs
    }

    /// `N`, the order of the last coefficient.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `F(b) = α_0 + Σ_n α_n(b, .., b)`.
    pub fn series(&self, algebra: &Algebra) -> Jet {
        Jet::new(algebra, self.coeffs.clone()).expect("coefficient orders are consecutive")
    }

    pub fn operator(&self) -> Operator {
        let i = self.index;
        let mut ops = Vec::new();
        if self.flavor == ModelFlavor::R {
            ops.push(Operator::L(i));
        }
        for a in &self.coeffs {
            ops.push(Operator::V(i, a.clone()));
            if self.flavor == ModelFlavor::S {
                ops.push(Operator::W(i, a.clone()));
            }
        }
        Operator::Sum(ops)
    }
}

/// `Ec(b_1 Z_1 b_2 Z_2 .. b_m Z_m)`.
pub fn alternating_moment(config: &FockConfig, factors: &[Operator], bs: &[Element]) -> Result<Element> {
    if factors.len() != bs.len() {
        return Err(Error::contract(format!(
            "{} factors but {} coefficients",
            factors.len(),
            bs.len()
        )));
    }
    let mut v = FockVector::vacuum(config);
    for (z, b) in factors.iter().zip(bs).rev() {
        v = z.apply(&v)?;
        v = Operator::Lambda(b.clone()).apply(&v)?;
    }
    Ok(v.expectation())
}

/// The full tensor of `(b_1..b_m) ↦ Ec(b_1 Z_1 b_2 Z_2 .. b_m Z_m)`.
///
/// Basis tuples share their common right-hand tails, and the first argument
/// is pulled out of the expectation by left linearity.
pub fn moment_map(config: &FockConfig, factors: &[Operator]) -> Result<MultilinearMap> {
    let m = factors.len();
    if m == 0 {
        return Err(Error::contract("moment of zero factors"));
    }
    let alg = &config.algebra;
    let d = alg.dim();
    let start = factors[m - 1].apply(&FockVector::vacuum(config))?;
    let leaves = descend(config, factors, start, m - 1)?;
    let block = leaves.len();
    let mut coeffs = vec![C64::new(0.0, 0.0); d * d * block];
    for term in alg.terms() {
        for (rest, leaf) in leaves.iter().enumerate() {
            coeffs[(term.r * d + term.p) * block + rest] += term.c * leaf.coords()[term.q];
        }
    }
    MultilinearMap::new(d, m, coeffs)
}

/// `v = Z_{k+1} λ(..) .. Z_m Ω`; returns `P(Z_1 λ(e_{t_2}) .. Z_k λ(e_{t_{k+1}}) v)`
/// over `(t_2, .., t_{k+1})`, first index slowest.
fn descend(config: &FockConfig, factors: &[Operator], v: FockVector, k: usize) -> Result<Vec<Element>> {
    if k == 0 {
        return Ok(vec![v.expectation()]);
    }
    let d = config.algebra.dim();
    let branches: Vec<Vec<Element>> = (0..d)
        .into_par_iter()
        .map(|c| {
            let w = Operator::Lambda(config.algebra.basis(c)).apply(&v)?;
            let w = factors[k - 1].apply(&w)?;
            descend(config, factors, w, k - 1)
        })
        .collect::<Result<_>>()?;
    // The argument chosen here sits to the right of the deeper ones.
    let inner = branches[0].len();
    let mut out = Vec::with_capacity(inner * d);
    for s in 0..inner {
        for branch in &branches {
            out.push(branch[s].clone());
        }
    }
    Ok(out)
}

/// Moment functions `μ_1, .., μ_order` of a model, read back from the Fock space.
pub fn model_moments(config: &FockConfig, model: &RvModel, order: usize) -> Result<MomentData> {
    let x = model.operator();
    let moments = (1..=order)
        .map(|m| moment_map(config, &vec![x.clone(); m]))
        .collect::<Result<Vec<_>>>()?;
    MomentData::new(&config.algebra, moments)
}

fn check_fit_depth(m: &MomentData, config: &FockConfig) -> Result<()> {
    if config.depth < m.order() + 1 {
        return Err(Error::precondition(format!(
            "fitting order-{} moments needs depth at least {}, got {}",
            m.order(),
            m.order() + 1,
            config.depth
        )));
    }
    if config.algebra != *m.algebra() {
        return Err(Error::contract("moment data and Fock space use different algebras"));
    }
    Ok(())
}

fn check_fit(config: &FockConfig, model: &RvModel, m: &MomentData) -> Result<()> {
    let got = model_moments(config, model, m.order())?;
    let worst = got
        .moments()
        .iter()
        .zip(m.moments())
        .map(|(a, b)| scaled_dist(a, b))
        .fold(0.0, f64::max);
    if worst > FIT_TOL {
        return Err(Error::contract(format!("fitted model misses its moments by {worst:e}")));
    }
    Ok(())
}

/// S-model on letter `i` with `Ec(b_0 X b_1 X .. b_k X) = μ_{k+1}(b_0, .., b_k)`
/// for `k ≤ N`, where `N + 1` is the order of `m`.
pub fn fit_s_model(m: &MomentData, i: usize, config: &FockConfig) -> Result<RvModel> {
    check_fit_depth(m, config)?;
    let alg = &config.algebra;
    let u = alg.unit();
    let a0 = m.mean();
    let a0_inv = alg.inv(&a0)?;
    let shift = alg.right_mult_matrix(&a0_inv);

    let mut coeffs = vec![MultilinearMap::constant(&a0)];
    for n in 1..m.order() {
        let partial = RvModel::new(alg, i, ModelFlavor::S, coeffs.clone())?.operator();
        // Only V_n(α_n) W_0(α_0)^n reaches the vacuum, giving α_n(b_1 α_0, .., b_n α_0).
        let mut target = m.moment(n + 1).clone();
        for slot in 1..=n {
            target = target.precompose_slot(slot, &shift);
        }
        let mut factors = vec![partial.clone()];
        let shifted = Operator::Product(vec![Operator::Lambda(a0_inv.clone()), partial]);
        factors.extend(std::iter::repeat_n(shifted, n));
        let known = moment_map(config, &factors)?;
        coeffs.push(target.sub(&known).fix_slot(0, u));
    }
    let model = RvModel::new(alg, i, ModelFlavor::S, coeffs)?;
    check_fit(config, &model, m)?;
    Ok(model)
}

/// R-model on letter `i` reproducing `μ_1, .., μ_{N+1}`.
pub fn fit_r_model(m: &MomentData, i: usize, config: &FockConfig) -> Result<RvModel> {
    check_fit_depth(m, config)?;
    let alg = &config.algebra;
    let u = alg.unit();
    let mut coeffs: Vec<MultilinearMap> = Vec::new();
    for n in 0..m.order() {
        // Only V_n(α_n) L_i^n reaches the vacuum, giving α_n(b_1, .., b_n).
        let mut ops = vec![Operator::L(i)];
        ops.extend(coeffs.iter().map(|a| Operator::V(i, a.clone())));
        let partial = Operator::Sum(ops);
        let known = moment_map(config, &vec![partial; n + 1])?;
        coeffs.push(m.moment(n + 1).sub(&known).fix_slot(0, u));
    }
    let model = RvModel::new(alg, i, ModelFlavor::R, coeffs)?;
    check_fit(config, &model, m)?;
    Ok(model)
}
