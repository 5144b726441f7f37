//! Operator identities verified on concrete Fock vectors.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{DepthMode, FockConfig, FockVector, Operator, RvModel};
use crate::algebra::{random_element, Element};
use crate::error::{Error, Result};
use crate::series::MultilinearMap;

pub const RELATION_TOL: f64 = 1e-12;
pub const BIMODULE_TOL: f64 = 1e-12;
pub const FREENESS_TOL: f64 = 1e-10;
pub const GEOMETRIC_TOL: f64 = 1e-9;

/// Longest alternating word tried by [`freeness_check`].
pub const MAX_ALTERNATION: usize = 5;

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub max_dev: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CheckReport {
    pub(crate) fn new(name: impl Into<String>, max_dev: f64, tol: f64) -> Self {
        CheckReport {
            name: name.into(),
            max_dev,
            tol,
            pass: max_dev <= tol,
        }
    }
}

fn rel_dist(got: &FockVector, want: &FockVector) -> f64 {
    got.dist(want) / want.max_abs().max(1.0)
}

fn same_action(lhs: &Operator, rhs: &Operator, v: &FockVector) -> Result<f64> {
    Ok(rel_dist(&lhs.apply(v)?, &rhs.apply(v)?))
}

fn product(ops: Vec<Operator>) -> Operator {
    Operator::Product(ops)
}

/// The six families of composition rules for `λ`, `L_i`, `V_{i,n}` and `W_{i,n}`,
/// each tested on `trials` random vectors.
pub fn relation_checks(config: &FockConfig, trials: usize, seed: u64) -> Result<Vec<CheckReport>> {
    if config.depth < 4 || config.indices < 2 {
        return Err(Error::precondition(
            "relation checks need depth ≥ 4 and two index letters",
        ));
    }
    let alg = &config.algebra;
    let d = alg.dim();
    let u = alg.unit();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 6];
    for trial in 0..trials {
        let i = 1 + trial % 2;
        let other = 3 - i;
        let n = rng.random_range(1..=3usize);
        let m = rng.random_range(1..=3usize);
        let alpha = MultilinearMap::random(&mut rng, d, n, 0.5);
        let beta = MultilinearMap::random(&mut rng, d, m, 0.5);
        let b = random_element(&mut rng, d, 1.0);
        let v = FockVector::random(config, config.depth - 1, 0.5, rng.random());
        let (vn, wn) = (Operator::V(i, alpha.clone()), Operator::W(i, alpha.clone()));

        // (i) absorbing λ(b) into the first argument
        let tilde = alpha.precompose_slot(0, &alg.left_mult_matrix(&b));
        let lam = Operator::Lambda(b.clone());
        worst[0] = worst[0]
            .max(same_action(
                &product(vec![vn.clone(), lam.clone()]),
                &Operator::V(i, tilde.clone()),
                &v,
            )?)
            .max(same_action(
                &product(vec![wn.clone(), lam.clone()]),
                &Operator::W(i, tilde),
                &v,
            )?);

        // (ii) one creation cancels one annihilation
        let li = Operator::L(i);
        let (v_rhs, w_rhs) = if n == 1 {
            let a1 = Operator::Lambda(alpha.eval(&[u])?);
            (a1.clone(), product(vec![a1, li.clone()]))
        } else {
            let lowered = alpha.fix_slot(0, u);
            (Operator::V(i, lowered.clone()), Operator::W(i, lowered))
        };
        worst[1] = worst[1]
            .max(same_action(&product(vec![vn.clone(), li.clone()]), &v_rhs, &v)?)
            .max(same_action(&product(vec![wn.clone(), li.clone()]), &w_rhs, &v)?);

        // (iii) after V_m: γ(b_1..) = α(β(b_1..b_m) b_{m+1}, ..)
        let gamma = alpha.substitute(0, &MultilinearMap::tensor_mul(alg, &beta, &MultilinearMap::identity(d)));
        let vm = Operator::V(i, beta.clone());
        worst[2] = worst[2]
            .max(same_action(
                &product(vec![vn.clone(), vm.clone()]),
                &Operator::V(i, gamma.clone()),
                &v,
            )?)
            .max(same_action(&product(vec![wn.clone(), vm]), &Operator::W(i, gamma), &v)?);

        // (iv) after W_m: γ(b_1..) = α(β(b_1..b_m), b_{m+1}, ..)
        let gamma = alpha.substitute(0, &beta);
        let wm = Operator::W(i, beta.clone());
        worst[3] = worst[3]
            .max(same_action(
                &product(vec![vn.clone(), wm.clone()]),
                &Operator::V(i, gamma.clone()),
                &v,
            )?)
            .max(same_action(&product(vec![wn.clone(), wm]), &Operator::W(i, gamma), &v)?);

        // (v) λ(b) V(α) = V(bα)
        worst[4] = worst[4].max(same_action(
            &product(vec![lam, vn.clone()]),
            &Operator::V(i, alpha.left_mul(alg, &b)),
            &v,
        )?);

        // (vi) annihilating the wrong letter
        let zero = FockVector::zero(config);
        let lo = Operator::L(other);
        worst[5] = worst[5]
            .max(rel_dist(&product(vec![vn, lo.clone()]).apply(&v)?, &zero))
            .max(rel_dist(&product(vec![wn, lo]).apply(&v)?, &zero));
    }
    let names = [
        "relation (i): V/W absorb λ",
        "relation (ii): V/W after L_i",
        "relation (iii): V/W after V",
        "relation (iv): V/W after W",
        "relation (v): λ before V",
        "relation (vi): mismatched letters",
    ];
    Ok(names
        .iter()
        .zip(worst)
        .map(|(name, dev)| CheckReport::new(*name, dev, RELATION_TOL))
        .collect())
}

/// A random product of model operators and `λ`s, at most `budget` model factors.
fn random_word(rng: &mut ChaCha8Rng, config: &FockConfig, models: &[Operator], budget: usize) -> Operator {
    let d = config.algebra.dim();
    let mut ops = vec![Operator::Lambda(random_element(rng, d, 1.0))];
    for _ in 0..rng.random_range(1..=budget) {
        ops.push(models[rng.random_range(0..models.len())].clone());
        ops.push(Operator::Lambda(random_element(rng, d, 1.0)));
    }
    Operator::Product(ops)
}

/// `Ec(b_1 Z b_2) = b_1 Ec(Z) b_2` for random words `Z` in the models.
pub fn bimodularity_check(config: &FockConfig, models: &[RvModel], trials: usize, seed: u64) -> Result<CheckReport> {
    let alg = &config.algebra;
    let ops: Vec<Operator> = models.iter().map(RvModel::operator).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = FockVector::vacuum(config);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let z = random_word(&mut rng, config, &ops, config.depth.min(3));
        let b1 = random_element(&mut rng, alg.dim(), 1.0);
        let b2 = random_element(&mut rng, alg.dim(), 1.0);
        let sandwiched = product(vec![
            Operator::Lambda(b1.clone()),
            z.clone(),
            Operator::Lambda(b2.clone()),
        ]);
        let got = sandwiched.apply(&omega)?.expectation();
        let want = alg.product(&[&b1, &z.apply(&omega)?.expectation(), &b2]);
        worst = worst.max(got.dist(&want) / want.max_abs().max(1.0));
    }
    Ok(CheckReport::new("Ec bimodularity", worst, BIMODULE_TOL))
}

/// Each model operator commutes with `ρ(b)`.
pub fn rho_commutation_check(config: &FockConfig, models: &[RvModel], trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let x = models[t % models.len()].operator();
        let rho = Operator::Rho(random_element(&mut rng, config.algebra.dim(), 1.0));
        let v = FockVector::random(config, config.depth.saturating_sub(1).min(4), 0.5, rng.random());
        let lhs = product(vec![x.clone(), rho.clone()]);
        let rhs = product(vec![rho, x]);
        worst = worst.max(same_action(&lhs, &rhs, &v)?);
    }
    Ok(CheckReport::new(
        "commutation with right multiplication",
        worst,
        RELATION_TOL,
    ))
}

/// Centered alternating products `a_1 .. a_p`, `p ≤ 5`, of words in distinct
/// models have vanishing expectation.
pub fn freeness_check(config: &FockConfig, models: &[RvModel], trials: usize, seed: u64) -> Result<CheckReport> {
    let mut indices: Vec<usize> = models.iter().map(RvModel::index).collect();
    indices.sort_unstable();
    indices.dedup();
    if indices.len() != models.len() {
        return Err(Error::precondition("freeness needs models on distinct letters"));
    }
    let alg = &config.algebra;
    let d = alg.dim();
    let ops: Vec<Operator> = models.iter().map(RvModel::operator).collect();
    let omega = FockVector::vacuum(config);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let p = if models.len() == 1 {
            1
        } else {
            1 + trial % MAX_ALTERNATION
        };
        // Each factor uses one or two model operators, within the depth budget.
        let mut budget = config.depth.min(2 * MAX_ALTERNATION);
        let mut last = usize::MAX;
        let mut factors = Vec::with_capacity(p);
        for slot in 0..p {
            let mut k = rng.random_range(0..models.len());
            if k == last {
                k = (k + 1) % models.len();
            }
            last = k;
            let remaining = p - slot - 1;
            let reps = if budget >= remaining + 2 && rng.random_bool(0.5) {
                2
            } else {
                1
            };
            budget -= reps;
            let mut word = vec![Operator::Lambda(random_element(&mut rng, d, 1.0))];
            for _ in 0..reps {
                word.push(ops[k].clone());
                word.push(Operator::Lambda(random_element(&mut rng, d, 1.0)));
            }
            let word = Operator::Product(word);
            let mean = word.apply(&omega)?.expectation();
            factors.push(Operator::Sum(vec![
                word,
                Operator::Scaled(C64::new(-1.0, 0.0), Box::new(Operator::Lambda(mean))),
            ]));
        }
        let value = Operator::Product(factors).apply(&omega)?.expectation();
        worst = worst.max(value.max_abs());
    }
    Ok(CheckReport::new(
        "freeness of centered alternating words",
        worst,
        FREENESS_TOL,
    ))
}

/// `ω_b = Σ_{k≤J} (b δ_i)^{⊗k} ⊗ 1`.
fn omega_b(config: &FockConfig, letter: usize, b: &Element) -> Result<FockVector> {
    let mut v = FockVector::vacuum(config);
    let mut tensor = config.algebra.unit().coords().to_vec();
    for k in 1..=config.depth {
        tensor = b
            .coords()
            .iter()
            .flat_map(|x| tensor.iter().map(move |t| x * t))
            .collect();
        v.set_sector(vec![letter; k], tensor.clone())?;
    }
    Ok(v)
}

fn one_plus_l(letter: usize) -> Operator {
    Operator::Sum(vec![Operator::Product(Vec::new()), Operator::L(letter)])
}

/// `X ω_b = F(b)(1 + L_i) ω_b`, and with a second model `Y` on another letter,
/// `Y σ_b = G(b)(1 + L_j) σ_b` and `XY σ_b = F(b')(1 + L_i) G(b) (1 + L_j) σ_b`
/// with `b' = G(b) b G(b)^{-1}`.
///
/// Truncation corrupts the top levels: annihilating `n` letters reads from
/// `n` levels up. Only levels at most `J - max(N, 1)` (one model) or
/// `J - 2 max(N, 1)` (product) are compared.
pub fn geometric_state_check(
    config: &FockConfig,
    x: &RvModel,
    y: Option<&RvModel>,
    b: &Element,
) -> Result<CheckReport> {
    if b.max_abs() > 0.2 {
        return Err(Error::precondition("geometric states need max |b| ≤ 0.2"));
    }
    if config.depth < 4 {
        return Err(Error::precondition("geometric states need depth ≥ 4"));
    }
    let cfg = config.with_mode(DepthMode::Lossy);
    let alg = &cfg.algebra;
    let f = x.series(alg);
    let xo = x.operator();
    let i = x.index();
    let Some(y) = y else {
        let omega = omega_b(&cfg, i, b)?;
        let lhs = xo.apply(&omega)?;
        let rhs = product(vec![Operator::Lambda(f.diag_eval(b)), one_plus_l(i)]).apply(&omega)?;
        let level = cfg.depth - x.degree().max(1);
        let dev = lhs.dist_up_to(&rhs, level) / rhs.max_abs().max(1.0);
        return Ok(CheckReport::new("geometric state ω_b", dev, GEOMETRIC_TOL));
    };
    let j = y.index();
    if j == i {
        return Err(Error::precondition("product state needs models on distinct letters"));
    }
    let g = y.series(alg).diag_eval(b);
    let g_inv = alg.inv(&g)?;
    let bg = alg.mul(b, &g_inv);
    let z = Operator::Sum(vec![
        product(vec![Operator::Lambda(b.clone()), Operator::L(j)]),
        product(vec![
            Operator::Lambda(bg.clone()),
            Operator::L(i),
            Operator::Lambda(g.clone()),
        ]),
        product(vec![
            Operator::Lambda(bg),
            Operator::L(i),
            Operator::Lambda(g.clone()),
            Operator::L(j),
        ]),
    ]);
    let omega = FockVector::vacuum(&cfg);
    let mut sigma = omega.clone();
    for _ in 0..cfg.depth {
        sigma = omega.add(&z.apply(&sigma)?);
    }
    let b_prime = alg.product(&[&g, b, &g_inv]);
    let yo = y.operator();
    let y_sigma = yo.apply(&sigma)?;
    let y_rhs = product(vec![Operator::Lambda(g.clone()), one_plus_l(j)]).apply(&sigma)?;
    let lhs = xo.apply(&y_sigma)?;
    let rhs = product(vec![
        Operator::Lambda(f.diag_eval(&b_prime)),
        one_plus_l(i),
        Operator::Lambda(g),
        one_plus_l(j),
    ])
    .apply(&sigma)?;
    let reach = x.degree().max(y.degree()).max(1);
    let single = y_sigma.dist_up_to(&y_rhs, cfg.depth - reach) / y_rhs.max_abs().max(1.0);
    let level = cfg.depth.saturating_sub(2 * reach);
    let dev = lhs.dist_up_to(&rhs, level) / rhs.max_abs().max(1.0);
    Ok(CheckReport::new("geometric state σ_b", dev.max(single), GEOMETRIC_TOL))
}
