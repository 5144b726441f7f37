//! The full invariant catalog, one [`CheckReport`] per suite.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{generate_models, Report, ScenarioConfig, ScenarioKind};
use crate::algebra::{random_element, Algebra, Element, AXIOM_TOL};
use crate::error::Result;
use crate::fock::{
    bimodularity_check, freeness_check, geometric_state_check, model_moments, relation_checks, rho_commutation_check,
    CheckReport, FockConfig,
};
use crate::series::{compositions, jet_equal, Jet, MultilinearMap};
use crate::transforms::{locality_check, r_transform, s_transform, TransformKind};

/// Series identities are checked on the diagonal to this tolerance.
const SERIES_TOL: f64 = 1e-10;
const CLOSED_FORM_S_TOL: f64 = 1e-7;
const CLOSED_FORM_R_TOL: f64 = 1e-8;
/// Degree of the random models used by the Fock and transform suites.
const MODEL_DEGREE: usize = 2;
const TRIALS: usize = 5;

type Stage<'a> = &'a dyn Fn() -> Result<Vec<CheckReport>>;

/// Worst associativity or unit-law residual over basis elements.
fn axiom_residual(alg: &Algebra) -> f64 {
    let d = alg.dim();
    let mut worst: f64 = 0.0;
    for p in 0..d {
        let ep = alg.basis(p);
        for q in 0..d {
            let pq = alg.mul(&ep, &alg.basis(q));
            for s in 0..d {
                let es = alg.basis(s);
                let rhs = alg.mul(&ep, &alg.mul(&alg.basis(q), &es));
                worst = worst.max(alg.mul(&pq, &es).dist(&rhs));
            }
        }
        let u = alg.unit();
        worst = worst.max(alg.mul(u, &ep).dist(&ep)).max(alg.mul(&ep, u).dist(&ep));
    }
    worst
}

fn random_jet(alg: &Algebra, rng: &mut ChaCha8Rng, degree: usize, constant: Element) -> Jet {
    let mut terms = vec![MultilinearMap::constant(&constant)];
    for n in 1..=degree {
        terms.push(MultilinearMap::random(rng, alg.dim(), n, 0.5));
    }
    Jet::new(alg, terms).expect("consecutive orders")
}

/// Degree-`n` part of `F(H(b))` computed from the diagonal values `H_p(b)`.
fn composed_term(f: &Jet, h_diag: &[Element], n: usize) -> Result<Element> {
    let mut acc = Element::zeros(h_diag[0].dim());
    for k in 1..=n {
        let fk = f.term(k).symmetrize()?;
        for parts in compositions(n, k) {
            let args: Vec<&Element> = parts.iter().map(|&p| &h_diag[p]).collect();
            acc = &acc + &fk.eval(&args)?;
        }
    }
    Ok(acc)
}

/// Jet products, reciprocals, compositions and compositional inverses against
/// their homogeneous parts on the diagonal.
fn series_suite(alg: &Algebra, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = alg.dim();
    let degree = 4;
    let mut worst: f64 = 0.0;
    for _ in 0..TRIALS {
        let b = random_element(&mut rng, d, 1.0);
        let f0 = alg.unit() + &random_element(&mut rng, d, 0.3);
        let f = random_jet(alg, &mut rng, degree, f0);
        let g0 = random_element(&mut rng, d, 1.0);
        let g = random_jet(alg, &mut rng, degree, g0);
        let fg = f.mul(&g)?;
        let f_inv = f.reciprocal()?;
        for n in 0..=degree {
            let prod = (0..=n).fold(alg.zero(), |acc, k| {
                &acc + &alg.mul(&f.term(k).eval_diag(&b), &g.term(n - k).eval_diag(&b))
            });
            worst = worst.max(fg.term(n).eval_diag(&b).dist(&prod));
            let unit = (0..=n).fold(alg.zero(), |acc, k| {
                &acc + &alg.mul(&f.term(k).eval_diag(&b), &f_inv.term(n - k).eval_diag(&b))
            });
            let want = if n == 0 { alg.unit().clone() } else { alg.zero() };
            worst = worst.max(unit.dist(&want));
        }

        // Inner series with H_0 = 0 and an invertible linear part.
        let mut terms = vec![MultilinearMap::zeros(d, 0), MultilinearMap::identity(d)];
        terms[1] = terms[1].add(&MultilinearMap::random(&mut rng, d, 1, 0.2));
        for n in 2..=degree {
            terms.push(MultilinearMap::random(&mut rng, d, n, 0.5));
        }
        let h = Jet::new(alg, terms)?;
        let h_diag: Vec<Element> = h.terms().iter().map(|t| t.eval_diag(&b)).collect();
        let fh = f.compose(&h)?;
        for n in 1..=degree {
            worst = worst.max(fh.term(n).eval_diag(&b).dist(&composed_term(&f, &h_diag, n)?));
        }
        let h_inv = h.comp_inverse()?;
        let round = h.compose(&h_inv)?;
        worst = worst.max(jet_equal(&round, &Jet::identity(alg, degree), SERIES_TOL)?.max_dev);
    }
    Ok(CheckReport::new("series diagonal consistency", worst, SERIES_TOL))
}

/// `S` of an S-model is `F^{-1}`; `R` of an R-model is `F`.
fn closed_form_suites(alg: &Algebra, seed: u64) -> Result<Vec<CheckReport>> {
    let cfg = FockConfig::strict(alg, MODEL_DEGREE + 3);
    let (mut s_dev, mut r_dev): (f64, f64) = (0.0, 0.0);
    for t in 0..TRIALS as u64 {
        let (x, _) = generate_models(ScenarioKind::VerifyS, alg, MODEL_DEGREE, seed.wrapping_add(t))?;
        let s = s_transform(&model_moments(&cfg, &x, MODEL_DEGREE + 1)?)?.jet;
        s_dev = s_dev.max(jet_equal(&s, &x.series(alg).reciprocal()?, CLOSED_FORM_S_TOL)?.max_dev);
        let (x, _) = generate_models(ScenarioKind::VerifyR, alg, MODEL_DEGREE, seed.wrapping_add(t))?;
        let r = r_transform(&model_moments(&cfg, &x, MODEL_DEGREE + 1)?)?.jet;
        r_dev = r_dev.max(jet_equal(&r, &x.series(alg), CLOSED_FORM_R_TOL)?.max_dev);
    }
    Ok(vec![
        CheckReport::new("S-model closed form", s_dev, CLOSED_FORM_S_TOL),
        CheckReport::new("R-model closed form", r_dev, CLOSED_FORM_R_TOL),
    ])
}

/// Term `n` of either transform ignores `μ_{n+2}` and beyond.
fn locality_suite(alg: &Algebra, seed: u64) -> Result<CheckReport> {
    let order = MODEL_DEGREE + 2;
    let cfg = FockConfig::strict(alg, order + 1);
    let mut worst: f64 = 0.0;
    for (kind, flavor) in [
        (TransformKind::S, ScenarioKind::VerifyS),
        (TransformKind::R, ScenarioKind::VerifyR),
    ] {
        let (x, _) = generate_models(flavor, alg, MODEL_DEGREE, seed)?;
        let m = model_moments(&cfg, &x, order)?;
        for n in 0..order - 1 {
            let rep = locality_check(&m, kind, n + 2, n, seed.wrapping_add(n as u64))?;
            worst = worst.max(rep.max_change);
        }
    }
    Ok(CheckReport::new(
        "transform dependence locality",
        worst,
        crate::transforms::DEPENDENCE_TOL,
    ))
}

fn fock_suites(alg: &Algebra, seed: u64) -> Result<Vec<CheckReport>> {
    let mut out = relation_checks(&FockConfig::strict(alg, 4), TRIALS, seed)?;

    let (xs, ys) = generate_models(ScenarioKind::VerifyS, alg, MODEL_DEGREE, seed)?;
    let (_, yr) = generate_models(ScenarioKind::VerifyR, alg, MODEL_DEGREE, seed)?;
    let mixed = [xs.clone(), yr];
    let cfg = FockConfig::strict(alg, 5);
    out.push(bimodularity_check(&cfg, &mixed, TRIALS, seed)?);
    out.push(rho_commutation_check(&cfg, &mixed, TRIALS, seed)?);
    out.push(freeness_check(&FockConfig::strict(alg, 11), &[xs, ys], TRIALS, seed)?);

    let (x1, y1) = generate_models(ScenarioKind::VerifyS, alg, 1, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = random_element(&mut rng, alg.dim(), 0.15);
    let cfg = FockConfig::strict(alg, 6);
    out.push(geometric_state_check(&cfg, &x1, None, &b)?);
    out.push(geometric_state_check(&cfg, &x1, Some(&y1), &b)?);
    Ok(out)
}

/// Runs every suite on `alg`. An algebra that fails its axioms stops the run
/// after the first suite, since nothing downstream is meaningful.
pub fn run_selftest(alg: &Algebra, seed: u64) -> Report {
    let start = Instant::now();
    let cfg = ScenarioConfig::new(ScenarioKind::Selftest, alg.spec(), MODEL_DEGREE + 1, seed)
        .with_trials(TRIALS)
        .with_tol(1.0);
    let mut report = Report::empty(&cfg);
    report.seeds.push(seed);
    let axioms = CheckReport::new("algebra associativity", axiom_residual(alg), AXIOM_TOL);
    let sound = axioms.pass;
    report.suites.push(axioms);
    if sound {
        let stages: [(&str, Stage); 4] = [
            ("series", &|| series_suite(alg, seed).map(|r| vec![r])),
            ("fock", &|| fock_suites(alg, seed)),
            ("closed forms", &|| closed_form_suites(alg, seed)),
            ("locality", &|| locality_suite(alg, seed).map(|r| vec![r])),
        ];
        for (name, stage) in stages {
            match stage() {
                Ok(reports) => report.suites.extend(reports),
                Err(e) => report.errors.push(format!("{name}: {e}")),
            }
        }
    }
    for s in &report.suites {
        // Each suite has its own tolerance, so the report tracks the worst ratio.
        report.max_abs_dev = report.max_abs_dev.max(s.max_dev / s.tol);
        report.diagnostics.insert(s.name.clone(), s.max_dev);
    }
    report.pass = report.errors.is_empty() && report.suites.iter().all(|s| s.pass);
    report.runtime_ms = start.elapsed().as_millis() as u64;
    report
}
