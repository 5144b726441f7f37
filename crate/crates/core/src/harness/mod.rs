//! End-to-end scenarios: random free pairs at the moment level, realized as
//! Fock-space models, pushed through the transform pipelines and compared.

mod selftest;
pub mod wire;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{random_element, Algebra, AlgebraSpec};
use crate::error::{Error, Result};
use crate::fock::{
    fit_r_model, fit_s_model, model_moments, moment_map, CheckReport, FockConfig, ModelFlavor, Operator, RvModel,
};
use crate::series::{jet_equal, Jet, JetComparison, MultilinearMap};
use crate::transforms::{r_transform, s_transform, twisted_rhs, MomentData, TransformResult};

pub use selftest::run_selftest;

/// Largest supported compare order.
pub const MAX_COMPARE_ORDER: usize = 4;
/// Commutative algebras must make the twist vanish to this tolerance.
pub const TWIST_TOL: f64 = 1e-10;
/// A counterexample witness must miss the plain product by more than this.
pub const WITNESS_GAP: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    VerifyS,
    VerifyR,
    Commutative,
    Counterexample,
    Selftest,
}

impl ScenarioKind {
    fn flavor(self) -> ModelFlavor {
        match self {
            ScenarioKind::VerifyR => ModelFlavor::R,
            _ => ModelFlavor::S,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub algebra: AlgebraSpec,
    /// `N_cmp`: S is compared to degree `N_cmp - 1`, R to degree `N_cmp`.
    pub order: usize,
    pub seed: u64,
    pub tol: f64,
    /// Instances run with seeds `seed, seed + 1, ..`; ignored when `x` and `y` are given.
    pub trials: usize,
    pub x: Option<MomentData>,
    pub y: Option<MomentData>,
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind, algebra: AlgebraSpec, order: usize, seed: u64) -> Self {
        ScenarioConfig {
            kind,
            algebra,
            order,
            seed,
            tol: 1e-7,
            trials: 20,
            x: None,
            y: None,
        }
    }

    pub fn with_tol(self, tol: f64) -> Self {
        ScenarioConfig { tol, ..self }
    }

    pub fn with_trials(self, trials: usize) -> Self {
        ScenarioConfig { trials, ..self }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario: ScenarioKind,
    pub algebra: AlgebraSpec,
    pub order: usize,
    pub tol: f64,
    /// Worst deviation per degree over all instances.
    pub per_degree: Vec<f64>,
    pub max_abs_dev: f64,
    pub pass: bool,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub runtime_ms: u64,
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub suites: Vec<CheckReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

impl Report {
    fn empty(cfg: &ScenarioConfig) -> Self {
        Report {
            scenario: cfg.kind,
            algebra: cfg.algebra.clone(),
            order: cfg.order,
            tol: cfg.tol,
            per_degree: Vec::new(),
            max_abs_dev: 0.0,
            pass: false,
            seed: cfg.seed,
            seeds: Vec::new(),
            runtime_ms: 0,
            diagnostics: BTreeMap::new(),
            witness: None,
            suites: Vec::new(),
            errors: Vec::new(),
        }
    }

    fn absorb(&mut self, cmp: &JetComparison) {
        if self.per_degree.len() < cmp.per_degree.len() {
            self.per_degree.resize(cmp.per_degree.len(), 0.0);
        }
        for (w, d) in self.per_degree.iter_mut().zip(&cmp.per_degree) {
            *w = w.max(*d);
        }
        self.max_abs_dev = self.max_abs_dev.max(cmp.max_dev);
    }

    fn note(&mut self, key: &str, value: f64) {
        let slot = self.diagnostics.entry(key.to_string()).or_insert(0.0);
        *slot = slot.max(value);
    }

    fn note_transform(&mut self, prefix: &str, t: &TransformResult) {
        self.note(&format!("{prefix}.inversion"), t.diagnostics.inversion);
        self.note(&format!("{prefix}.strip"), t.diagnostics.strip);
        self.note(&format!("{prefix}.residual"), t.diagnostics.residual);
    }

    /// Equal in everything but wall-clock time.
    pub fn same_outcome(&self, other: &Report) -> bool {
        let strip = |r: &Report| {
            let mut v = serde_json::to_value(r).expect("reports serialize");
            v.as_object_mut().expect("object").remove("runtime_ms");
            v
        };
        strip(self) == strip(other)
    }
}

fn instance_seeds(cfg: &ScenarioConfig) -> Vec<u64> {
    if cfg.x.is_some() {
        vec![cfg.seed]
    } else {
        (0..cfg.trials.max(1) as u64)
            .map(|t| cfg.seed.wrapping_add(t))
            .collect()
    }
}

/// Coefficients `α_0 = 1 + r` with `|r| ≤ 0.3` and `α_n` of magnitude `1/(n!·d)`.
fn random_coefficients(alg: &Algebra, rng: &mut ChaCha8Rng, degree: usize) -> Vec<MultilinearMap> {
    let d = alg.dim();
    let a0 = alg.unit() + &random_element(rng, d, 0.3);
    let mut coeffs = vec![MultilinearMap::constant(&a0)];
    let mut fact = 1.0;
    for n in 1..=degree {
        fact *= n as f64;
        coeffs.push(MultilinearMap::random(rng, d, n, 1.0 / (fact * d as f64)));
    }
    coeffs
}

/// The model pair behind [`generate_instance`], on letters 1 and 2.
pub fn generate_models(kind: ScenarioKind, alg: &Algebra, degree: usize, seed: u64) -> Result<(RvModel, RvModel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flavor = kind.flavor();
    let x = RvModel::new(alg, 1, flavor, random_coefficients(alg, &mut rng, degree))?;
    let y = RvModel::new(alg, 2, flavor, random_coefficients(alg, &mut rng, degree))?;
    Ok((x, y))
}

/// Models whose coefficients are central: `α_n(b_1..b_n) = c_n b_1 .. b_n`.
/// Their S-transforms commute with `b`, so the twist is invisible.
pub fn generate_commuting_models(alg: &Algebra, degree: usize, seed: u64) -> Result<(RvModel, RvModel)> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = alg.dim();
    let mut make = |index| {
        let mut coeffs = Vec::new();
        let mut word = MultilinearMap::constant(alg.unit());
        for n in 0..=degree {
            let c = if n == 0 {
                1.0 + rng.random_range(-0.3..0.3)
            } else {
                rng.random_range(-1.0..1.0) / d as f64
            };
            coeffs.push(word.scale(num_complex::Complex64::new(c, 0.0)));
            word = MultilinearMap::tensor_mul(alg, &word, &MultilinearMap::identity(d));
        }
        RvModel::new(alg, index, ModelFlavor::S, coeffs)
    };
    let x = make(1)?;
    let y = make(2)?;
    Ok((x, y))
}

/// A random free pair, returned as moments `μ_1..μ_{N+1}` of each variable.
pub fn generate_instance(
    kind: ScenarioKind,
    alg: &Algebra,
    degree: usize,
    seed: u64,
) -> Result<(MomentData, MomentData)> {
    if degree > 5 {
        return Err(Error::precondition(format!("instance degree {degree} exceeds 5")));
    }
    let (x, y) = generate_models(kind, alg, degree, seed)?;
    instance_from_models(alg, &x, &y, degree)
}

/// Moments `μ_1..μ_{N+1}` of two models of degree `N`.
pub fn instance_from_models(
    alg: &Algebra,
    x: &RvModel,
    y: &RvModel,
    degree: usize,
) -> Result<(MomentData, MomentData)> {
    let cfg = FockConfig::strict(alg, degree + 2);
    Ok((model_moments(&cfg, x, degree + 1)?, model_moments(&cfg, y, degree + 1)?))
}

/// `μ_{XY,1..order}` on the Fock space.
pub fn product_moments(cfg: &FockConfig, x: &RvModel, y: &RvModel, order: usize) -> Result<MomentData> {
    let xy = Operator::Product(vec![x.operator(), y.operator()]);
    collect_moments(cfg, xy, order)
}

/// `μ_{X+Y,1..order}` on the Fock space.
pub fn sum_moments(cfg: &FockConfig, x: &RvModel, y: &RvModel, order: usize) -> Result<MomentData> {
    let sum = Operator::Sum(vec![x.operator(), y.operator()]);
    collect_moments(cfg, sum, order)
}

fn collect_moments(cfg: &FockConfig, z: Operator, order: usize) -> Result<MomentData> {
    let moments = (1..=order)
        .map(|m| moment_map(cfg, &vec![z.clone(); m]))
        .collect::<Result<Vec<_>>>()?;
    MomentData::new(&cfg.algebra, moments)
}

/// Fock depth for products of two models at compare order `n`.
pub fn product_depth(order: usize) -> usize {
    2 * order + 2
}

/// Fock depth for sums of two models at compare order `n`.
pub fn sum_depth(order: usize) -> usize {
    order + 3
}

/// Both sides of the twisted product identity for one free pair.
#[derive(Clone, Debug)]
pub struct SInstance {
    pub lhs: TransformResult,
    pub sx: TransformResult,
    pub sy: TransformResult,
    pub rhs: Jet,
    pub plain: Jet,
    pub twisted: JetComparison,
}

/// Fits both models from `μ_1..μ_order` and compares `S_{XY}` with the twisted
/// product of `S_X` and `S_Y`.
pub fn s_instance(x: &MomentData, y: &MomentData, order: usize, tol: f64) -> Result<SInstance> {
    let alg = x.algebra();
    let (x, y) = (x.truncate(order)?, y.truncate(order)?);
    let cfg = FockConfig::strict(alg, product_depth(order));
    let xm = fit_s_model(&x, 1, &cfg)?;
    let ym = fit_s_model(&y, 2, &cfg)?;
    let lhs = s_transform(&product_moments(&cfg, &xm, &ym, order)?)?;
    let sx = s_transform(&x)?;
    let sy = s_transform(&y)?;
    let rhs = twisted_rhs(&sx.jet, &sy.jet)?.symmetrized()?;
    let plain = sx.jet.mul(&sy.jet)?.symmetrized()?;
    let twisted = jet_equal(&lhs.jet, &rhs, tol)?;
    Ok(SInstance {
        lhs,
        sx,
        sy,
        rhs,
        plain,
        twisted,
    })
}

#[derive(Clone, Debug)]
pub struct RInstance {
    pub lhs: TransformResult,
    pub rx: TransformResult,
    pub ry: TransformResult,
    pub rhs: Jet,
    pub comparison: JetComparison,
}

/// Fits both R-models from `μ_1..μ_{order+1}` and compares `R_{X+Y}` with `R_X + R_Y`.
pub fn r_instance(x: &MomentData, y: &MomentData, order: usize, tol: f64) -> Result<RInstance> {
    let alg = x.algebra();
    let (x, y) = (x.truncate(order + 1)?, y.truncate(order + 1)?);
    let cfg = FockConfig::strict(alg, sum_depth(order));
    let xm = fit_r_model(&x, 1, &cfg)?;
    let ym = fit_r_model(&y, 2, &cfg)?;
    let lhs = r_transform(&sum_moments(&cfg, &xm, &ym, order + 1)?)?;
    let rx = r_transform(&x)?;
    let ry = r_transform(&y)?;
    let rhs = rx.jet.add(&ry.jet)?;
    let comparison = jet_equal(&lhs.jet, &rhs, tol)?;
    Ok(RInstance {
        lhs,
        rx,
        ry,
        rhs,
        comparison,
    })
}

fn check_order(cfg: &ScenarioConfig) -> Result<()> {
    if cfg.order == 0 || cfg.order > MAX_COMPARE_ORDER {
        return Err(Error::precondition(format!(
            "compare order must be in 1..={MAX_COMPARE_ORDER}, got {}",
            cfg.order
        )));
    }
    if cfg.x.is_some() != cfg.y.is_some() {
        return Err(Error::precondition("moment files for x and y come together"));
    }
    Ok(())
}

/// Moment data for one instance: the supplied files or a generated pair.
fn instance_data(cfg: &ScenarioConfig, alg: &Algebra, seed: u64, degree: usize) -> Result<(MomentData, MomentData)> {
    match (&cfg.x, &cfg.y) {
        (Some(x), Some(y)) => {
            for m in [x, y] {
                if m.algebra() != alg {
                    return Err(Error::precondition("moment file algebra differs from --algebra"));
                }
                m.validate()?;
            }
            Ok((x.clone(), y.clone()))
        }
        _ => generate_instance(cfg.kind, alg, degree, seed),
    }
}

/// Runs any scenario; failures inside an instance land in `errors`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Report {
    let start = Instant::now();
    let mut report = Report::empty(cfg);
    let outcome = match cfg.kind {
        ScenarioKind::VerifyS => run_s(cfg, &mut report),
        ScenarioKind::VerifyR => run_r(cfg, &mut report),
        ScenarioKind::Commutative => run_commutative(cfg, &mut report),
        ScenarioKind::Counterexample => run_counterexample(cfg, &mut report),
        ScenarioKind::Selftest => Algebra::create(&cfg.algebra).map(|alg| report = run_selftest(&alg, cfg.seed)),
    };
    if let Err(e) = outcome {
        report.errors.push(e.to_string());
    }
    if cfg.kind != ScenarioKind::Selftest && cfg.kind != ScenarioKind::Counterexample {
        report.pass = report.errors.is_empty() && !report.seeds.is_empty() && report.max_abs_dev <= cfg.tol;
    }
    report.pass &= report.errors.is_empty();
    report.runtime_ms = start.elapsed().as_millis() as u64;
    report
}

fn run_s(cfg: &ScenarioConfig, report: &mut Report) -> Result<()> {
    check_order(cfg)?;
    let alg = Algebra::create(&cfg.algebra)?;
    for seed in instance_seeds(cfg) {
        let (x, y) = instance_data(cfg, &alg, seed, cfg.order - 1)?;
        match s_instance(&x, &y, cfg.order, cfg.tol) {
            Ok(inst) => {
                report.absorb(&inst.twisted);
                report.note_transform("lhs", &inst.lhs);
                report.note_transform("sx", &inst.sx);
                report.note_transform("sy", &inst.sy);
            }
            Err(e) => report.errors.push(format!("seed {seed}: {e}")),
        }
        report.seeds.push(seed);
    }
    Ok(())
}

fn run_r(cfg: &ScenarioConfig, report: &mut Report) -> Result<()> {
    check_order(cfg)?;
    let alg = Algebra::create(&cfg.algebra)?;
    for seed in instance_seeds(cfg) {
        let (x, y) = instance_data(cfg, &alg, seed, cfg.order)?;
        match r_instance(&x, &y, cfg.order, cfg.tol) {
            Ok(inst) => {
                report.absorb(&inst.comparison);
                report.note_transform("lhs", &inst.lhs);
                report.note_transform("rx", &inst.rx);
                report.note_transform("ry", &inst.ry);
            }
            Err(e) => report.errors.push(format!("seed {seed}: {e}")),
        }
        report.seeds.push(seed);
    }
    Ok(())
}

fn run_commutative(cfg: &ScenarioConfig, report: &mut Report) -> Result<()> {
    let alg = Algebra::create(&cfg.algebra)?;
    if !alg.is_commutative() {
        return Err(Error::precondition(format!("{} is not commutative", cfg.algebra)));
    }
    check_order(cfg)?;
    for seed in instance_seeds(cfg) {
        let (x, y) = instance_data(cfg, &alg, seed, cfg.order - 1)?;
        let inst = match s_instance(&x, &y, cfg.order, cfg.tol) {
            Ok(inst) => inst,
            Err(e) => {
                report.errors.push(format!("seed {seed}: {e}"));
                report.seeds.push(seed);
                continue;
            }
        };
        let twist = jet_equal(&inst.rhs, &inst.plain, TWIST_TOL)?;
        let plain = jet_equal(&inst.lhs.jet, &inst.plain, cfg.tol)?;
        report.absorb(&inst.twisted);
        report.absorb(&plain);
        report.note("twist_dev", twist.max_dev);
        report.note_transform("lhs", &inst.lhs);
        if !twist.pass {
            report.errors.push(format!(
                "seed {seed}: twisted and plain products differ by {:e}",
                twist.max_dev
            ));
        }
        report.seeds.push(seed);
    }
    Ok(())
}

fn run_counterexample(cfg: &ScenarioConfig, report: &mut Report) -> Result<()> {
    let alg = Algebra::create(&cfg.algebra)?;
    if alg.is_commutative() {
        return Err(Error::precondition(format!(
            "{} is commutative; the twist cannot show",
            cfg.algebra
        )));
    }
    check_order(cfg)?;
    let mut twisted_ok = true;
    for seed in instance_seeds(cfg) {
        report.seeds.push(seed);
        let (x, y) = instance_data(cfg, &alg, seed, cfg.order - 1)?;
        let inst = match s_instance(&x, &y, cfg.order, cfg.tol) {
            Ok(inst) => inst,
            Err(e) => {
                report.errors.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let plain = jet_equal(&inst.lhs.jet, &inst.plain, cfg.tol)?;
        report.absorb(&inst.twisted);
        report.note("plain_dev", plain.max_dev);
        twisted_ok &= inst.twisted.pass;
        if inst.twisted.pass && plain.max_dev > WITNESS_GAP && report.witness.is_none() {
            report.witness = Some(seed);
            report.note("witness_plain_dev", plain.max_dev);
        }
    }
    report.pass = report.witness.is_some() && twisted_ok;
    Ok(())
}

#[cfg(test)]
mod tests;
