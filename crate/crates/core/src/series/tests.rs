// Index loops mirror the degree recursions they check.
#![allow(clippy::needless_range_loop)]

use super::*;
use crate::algebra::Algebra;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn scalar() -> Algebra {
    Algebra::matrix(1).unwrap()
}

fn scalar_jet(coeffs: &[f64]) -> Jet {
    let terms = coeffs
        .iter()
        .enumerate()
        .map(|(n, &v)| MultilinearMap::new(1, n, vec![c(v)]).unwrap())
        .collect();
    Jet::new(&scalar(), terms).unwrap()
}

fn scalar_coeffs(j: &Jet) -> Vec<C64> {
    j.terms().iter().map(|t| t.coeffs()[0]).collect()
}

fn assert_scalar(j: &Jet, want: &[f64], tol: f64) {
    let got = scalar_coeffs(j);
    assert_eq!(got.len(), want.len(), "degree mismatch: {got:?} vs {want:?}");
    for (n, (g, w)) in got.iter().zip(want).enumerate() {
        assert!((g - c(*w)).norm() <= tol, "term {n}: got {g}, want {w}");
    }
}

fn random_jet(alg: &Algebra, degree: usize, seed: u64, f0: Option<&Element>) -> Jet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = alg.dim();
    let mut terms: Vec<MultilinearMap> = (0..=degree)
        .map(|n| MultilinearMap::random(&mut rng, d, n, 0.5))
        .collect();
    if let Some(v) = f0 {
        terms[0] = MultilinearMap::constant(v);
    }
    Jet::new(alg, terms).unwrap()
}

/// Random jet with `F_0 = 0` and `F_1(h) = h·g` for an invertible `g`.
fn random_invertible_germ(alg: &Algebra, degree: usize, seed: u64) -> Jet {
    let mut j = random_jet(alg, degree, seed, Some(&alg.zero()));
    let g = alg.near_unit(seed ^ 0xabc, 0.3);
    j.terms[1] = MultilinearMap::identity(alg.dim()).right_mul(alg, &g);
    j
}

// Independent scalar power-series oracle over plain coefficient vectors.
mod oracle {
    use num_complex::Complex64 as C64;

    pub fn mul(a: &[C64], b: &[C64], n: usize) -> Vec<C64> {
        (0..=n)
            .map(|k| {
                (0..=k)
                    .map(|i| a.get(i).copied().unwrap_or_default() * b.get(k - i).copied().unwrap_or_default())
                    .sum()
            })
            .collect()
    }

    /// f(h(z)) via Horner, truncated at degree n.
    pub fn compose(f: &[C64], h: &[C64], n: usize) -> Vec<C64> {
        let mut acc = vec![C64::default(); n + 1];
        for &coef in f.iter().rev() {
            acc = mul(&acc, h, n);
            acc[0] += coef;
        }
        acc
    }

    /// Compositional inverse by fixed-point iteration g ← g + (z − f(g)).
    pub fn comp_inverse(f: &[C64], n: usize) -> Vec<C64> {
        let mut g = vec![C64::default(); n + 1];
        g[1] = C64::new(1.0, 0.0) / f[1];
        for _ in 0..=n + 2 {
            let fg = compose(f, &g, n);
            for k in 1..=n {
                let target = if k == 1 { C64::new(1.0, 0.0) } else { C64::default() };
                g[k] += (target - fg[k]) / f[1];
            }
        }
        g
    }
}

#[test]
fn compositions_enumerate() {
    assert_eq!(compositions(4, 2), vec![vec![1, 3], vec![2, 2], vec![3, 1]]);
    assert_eq!(compositions(3, 3), vec![vec![1, 1, 1]]);
    assert!(compositions(2, 3).is_empty());
    let total: usize = (1..=5).map(|k| compositions(5, k).len()).sum();
    assert_eq!(total, 16);
}

#[test]
fn scalar_product() {
    let p = scalar_jet(&[1.0, 1.0, 0.0])
        .mul(&scalar_jet(&[1.0, -1.0, 0.0]))
        .unwrap();
    assert_scalar(&p, &[1.0, 0.0, -1.0], 0.0);
}

#[test]
fn product_unit_law_and_truncation() {
    let alg = Algebra::matrix(2).unwrap();
    let f = random_jet(&alg, 3, 1, None);
    assert_eq!(f.mul(&Jet::unit(&alg, 3)).unwrap(), f);
    assert_eq!(f.mul(&Jet::unit(&alg, 2)).unwrap().degree(), 2);
}

#[test]
fn product_diagonal_matches_pointwise() {
    // Terms above degree 2 are zero, so the degree-4 product is exact.
    let alg = Algebra::matrix(2).unwrap();
    let mut f = random_jet(&alg, 4, 2, None);
    let mut g = random_jet(&alg, 4, 3, None);
    for n in 3..=4 {
        f.terms[n] = MultilinearMap::zeros(4, n);
        g.terms[n] = MultilinearMap::zeros(4, n);
    }
    let fg = f.mul(&g).unwrap();
    for s in 0..10 {
        let b = alg.random(100 + s, 0.7);
        let want = alg.mul(&f.diag_eval(&b), &g.diag_eval(&b));
        assert!(fg.diag_eval(&b).dist(&want) < 1e-12);
    }
}

#[test]
fn compose_with_identity() {
    let alg = Algebra::matrix(2).unwrap();
    let f = random_jet(&alg, 4, 4, None);
    let g = f.compose(&Jet::identity(&alg, 4)).unwrap();
    for n in 0..=4 {
        assert!(g.term(n).dist(f.term(n)) < 1e-12);
    }
}

#[test]
fn compose_scalar_hand_expansion() {
    let f = scalar_jet(&[0.0, 0.0, 1.0, 0.0, 0.0]);
    let h = scalar_jet(&[0.0, 1.0, 0.0, 1.0, 0.0]);
    assert_scalar(&f.compose(&h).unwrap(), &[0.0, 0.0, 1.0, 0.0, 2.0], 1e-15);
}

#[test]
fn compose_matches_scalar_oracle() {
    let alg = scalar();
    for seed in 0..10 {
        let f = random_jet(&alg, 5, seed, None);
        let mut h = random_jet(&alg, 5, seed + 50, None);
        h.terms[0] = MultilinearMap::zeros(1, 0);
        let want = oracle::compose(&scalar_coeffs(&f), &scalar_coeffs(&h), 5);
        let got = scalar_coeffs(&f.compose(&h).unwrap());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-12);
        }
        // Pointwise: F(H(z)) agrees up to the truncation error at tiny z.
        let z = Element::new(vec![C64::new(1e-3, 5e-4)]);
        let pointwise = f.diag_eval(&h.diag_eval(&z));
        assert!(f.compose(&h).unwrap().diag_eval(&z).dist(&pointwise) < 1e-14);
    }
}

#[test]
fn compose_rejects_nonzero_constant() {
    let err = scalar_jet(&[1.0, 1.0]).compose(&scalar_jet(&[0.5, 1.0])).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
}

#[test]
fn geometric_reciprocal() {
    let g = scalar_jet(&[1.0, -1.0, 0.0, 0.0, 0.0]).reciprocal().unwrap();
    assert_scalar(&g, &[1.0; 5], 1e-15);
}

#[test]
fn constant_reciprocal() {
    let alg = Algebra::matrix(2).unwrap();
    let f = Jet::constant(&alg, &Element::from_real(&[1.0, 0.0, 0.0, 2.0]), 3);
    let g = f.reciprocal().unwrap();
    assert!(g.constant_term().dist(&Element::from_real(&[1.0, 0.0, 0.0, 0.5])) < 1e-15);
    for n in 1..=3 {
        assert_eq!(g.term(n).max_abs(), 0.0);
    }
}

#[test]
fn reciprocal_needs_invertible_constant() {
    let alg = Algebra::matrix(2).unwrap();
    let f = Jet::constant(&alg, &alg.basis(1), 2);
    assert!(matches!(f.reciprocal(), Err(Error::NotInvertible { .. })));
}

#[test]
fn comp_inverse_scalar() {
    // Oracle: fixed-point series reversion of z + z², then F(H(z)) = z.
    let f = scalar_jet(&[0.0, 1.0, 1.0, 0.0, 0.0]);
    let h = f.comp_inverse().unwrap();
    let want = oracle::comp_inverse(&scalar_coeffs(&f), 4);
    for (g, w) in scalar_coeffs(&h).iter().zip(&want) {
        assert!((g - w).norm() < 1e-12);
    }
    assert_scalar(&h, &[0.0, 1.0, -1.0, 2.0, -5.0], 1e-12);
}

#[test]
fn comp_inverse_of_identity() {
    let alg = Algebra::matrix(2).unwrap();
    let id = Jet::identity(&alg, 4);
    assert_eq!(id.comp_inverse().unwrap(), id);
}

#[test]
fn comp_inverse_linear_part() {
    let alg = Algebra::matrix(2).unwrap();
    let ea = alg.near_unit(9, 0.3);
    let f = Jet::new(
        &alg,
        vec![
            MultilinearMap::zeros(4, 0),
            MultilinearMap::identity(4).right_mul(&alg, &ea),
        ],
    )
    .unwrap();
    let h = f.comp_inverse().unwrap();
    let want = MultilinearMap::identity(4).right_mul(&alg, &alg.inv(&ea).unwrap());
    assert!(h.term(1).dist(&want) < 1e-12);
}

#[test]
fn comp_inverse_errors() {
    let alg = Algebra::matrix(2).unwrap();
    assert!(matches!(Jet::unit(&alg, 2).comp_inverse(), Err(Error::Precondition(_))));
    let singular = Jet::new(
        &alg,
        vec![
            MultilinearMap::zeros(4, 0),
            MultilinearMap::identity(4).right_mul(&alg, &alg.basis(1)),
        ],
    )
    .unwrap();
    assert!(matches!(singular.comp_inverse(), Err(Error::NotInvertible { .. })));
}

/// `G_n(b_1..b_n) = E(b_1 a b_2 a .. b_n a)` in the trivial model `A = B`.
fn psi_like(alg: &Algebra, a: &Element, degree: usize) -> Jet {
    let d = alg.dim();
    let mut terms = vec![MultilinearMap::zeros(d, 0)];
    let xa = MultilinearMap::identity(d).right_mul(alg, a);
    let mut acc = xa.clone();
    for _ in 1..=degree {
        terms.push(acc.clone());
        acc = MultilinearMap::tensor_mul(alg, &acc, &xa);
    }
    Jet::new(alg, terms).unwrap()
}

#[test]
fn strip_psi_jet() {
    let alg = Algebra::matrix(2).unwrap();
    let a = alg.near_unit(3, 0.3);
    let g = psi_like(&alg, &a, 4);
    let h = g.strip(Side::Left).unwrap();
    assert_eq!(h.degree(), 3);
    let (b2, b3) = (alg.random(1, 1.0), alg.random(2, 1.0));
    let want = alg.product(&[&a, &b2, &a, &b3, &a]);
    assert!(h.term(2).eval(&[&b2, &b3]).unwrap().dist(&want) < 1e-13);
}

#[test]
fn strip_scalar() {
    let h = scalar_jet(&[0.0, 1.0, 1.0]).strip(Side::Left).unwrap();
    assert_scalar(&h, &[1.0, 1.0], 0.0);
    let h = scalar_jet(&[0.0, 1.0, 1.0]).strip(Side::Right).unwrap();
    assert_scalar(&h, &[1.0, 1.0], 0.0);
}

#[test]
fn strip_inverse_psi_gives_inverse_mean() {
    let alg = Algebra::matrix(2).unwrap();
    let a = alg.near_unit(5, 0.3);
    let h = psi_like(&alg, &a, 4).comp_inverse().unwrap().strip(Side::Left).unwrap();
    let one_plus_b = Jet::unit(&alg, 3).add(&Jet::identity(&alg, 3)).unwrap();
    let s = one_plus_b.mul(&h).unwrap();
    assert!(s.constant_term().dist(&alg.inv(&a).unwrap()) < 1e-12);
}

#[test]
fn strip_rejects_non_factorizable() {
    let alg = Algebra::matrix(2).unwrap();
    let mut g = random_jet(&alg, 3, 8, Some(&alg.zero()));
    g.terms[1] = MultilinearMap::identity(4).left_mul(&alg, &alg.random(3, 1.0));
    match g.strip(Side::Left) {
        Err(Error::FactorizationFailed { residual }) => assert!(residual > 1e-3),
        other => panic!("expected FactorizationFailed, got {other:?}"),
    }
}

#[test]
fn strip_then_remultiply() {
    let alg = Algebra::matrix(2).unwrap();
    let a = alg.near_unit(6, 0.3);
    let g = psi_like(&alg, &a, 4);
    let h = g.strip(Side::Left).unwrap();
    for s in 0..10 {
        let b = alg.random(40 + s, 0.5);
        let rebuilt = alg.mul(&b, &h.diag_eval(&b));
        assert!(rebuilt.dist(&g.diag_eval(&b)) < 1e-9);
    }
}

#[test]
fn diag_eval_cases() {
    let alg = Algebra::matrix(2).unwrap();
    let f = random_jet(&alg, 3, 12, None);
    assert_eq!(f.diag_eval(&alg.zero()), f.constant_term());
    let b = alg.random(1, 1.0);
    assert_eq!(Jet::unit(&alg, 3).diag_eval(&b), alg.unit().clone());
    let geo = scalar_jet(&[1.0; 5]);
    let v = geo.diag_eval(&Element::from_real(&[0.1]));
    assert!((v.coords()[0] - c(1.1111)).norm() < 1e-12);
}

#[test]
fn jet_equal_symmetrizes() {
    let alg = Algebra::matrix(2).unwrap();
    let f = random_jet(&alg, 3, 13, None);
    let same = jet_equal(&f, &f, 0.0).unwrap();
    assert_eq!(same.max_dev, 0.0);
    assert!(same.pass);
    let mut g = f.clone();
    g.terms[2] = f.term(2).permute_args(&[1, 0]);
    let cmp = jet_equal(&f, &g, 1e-14).unwrap();
    assert!(cmp.pass, "{cmp:?}");
    assert!(f.term(2).dist(g.term(2)) > 1e-3);
}

// Diagonal recursions evaluated from diagonals alone, with symmetrized terms
// wherever distinct arguments appear.
mod diagonal {
    use super::*;

    pub fn sym_terms(j: &Jet) -> Vec<MultilinearMap> {
        j.terms().iter().map(|t| t.symmetrize().unwrap()).collect()
    }

    pub fn product(alg: &Algebra, f: &Jet, g: &Jet, b: &Element) -> Vec<Element> {
        (0..=f.degree())
            .map(|n| {
                (0..=n).fold(alg.zero(), |acc, k| {
                    &acc + &alg.mul(&f.term(k).eval_diag(b), &g.term(n - k).eval_diag(b))
                })
            })
            .collect()
    }

    pub fn composition(f: &Jet, h_diag: &[Element], n: usize) -> Element {
        let fs = sym_terms(f);
        let d = h_diag[0].dim();
        let mut acc = Element::zeros(d);
        for k in 1..=n {
            for parts in compositions(n, k) {
                let args: Vec<&Element> = parts.iter().map(|&p| &h_diag[p]).collect();
                acc = &acc + &fs[k].eval(&args).unwrap();
            }
        }
        acc
    }

    pub fn reciprocal(alg: &Algebra, f: &Jet, b: &Element) -> Vec<Element> {
        let f0i = alg.inv(&f.constant_term()).unwrap();
        let mut g = vec![f0i.clone()];
        for n in 1..=f.degree() {
            let s = (1..=n).fold(alg.zero(), |acc, k| &acc + &alg.mul(&f.term(k).eval_diag(b), &g[n - k]));
            g.push(-&alg.mul(&f0i, &s));
        }
        g
    }

    pub fn comp_inverse(f: &Jet, b: &Element) -> Vec<Element> {
        let lin = f.term(1).as_matrix().try_inverse().unwrap();
        let lin = MultilinearMap::from_matrix(&lin);
        let mut h = vec![Element::zeros(b.dim()), lin.eval(&[b]).unwrap()];
        for n in 2..=f.degree() {
            let mut acc = Element::zeros(b.dim());
            let fs = sym_terms(f);
            for k in 2..=n {
                for parts in compositions(n, k) {
                    let args: Vec<&Element> = parts.iter().map(|&p| &h[p]).collect();
                    acc = &acc + &fs[k].eval(&args).unwrap();
                }
            }
            h.push(-&lin.eval(&[&acc]).unwrap());
        }
        h
    }
}

#[test]
fn diagonal_consistency() {
    for k in 1..=3 {
        let alg = Algebra::matrix(k).unwrap();
        let f0 = alg.near_unit(k as u64, 0.3);
        let f = random_jet(&alg, 4, 20 + k as u64, Some(&f0));
        let g = random_jet(&alg, 4, 30 + k as u64, None);
        let germ = random_invertible_germ(&alg, 4, 40 + k as u64);
        let mut h = random_jet(&alg, 4, 50 + k as u64, Some(&alg.zero()));
        h.terms[0] = MultilinearMap::zeros(alg.dim(), 0);

        let fg = f.mul(&g).unwrap();
        let fh = f.compose(&h).unwrap();
        let recip = f.reciprocal().unwrap();
        let inv = germ.comp_inverse().unwrap();
        for s in 0..10 {
            let b = alg.random(1000 + s, 1.0);
            let want = diagonal::product(&alg, &f, &g, &b);
            for n in 0..=4 {
                assert!(fg.term(n).eval_diag(&b).dist(&want[n]) < 1e-9);
            }
            let h_diag: Vec<Element> = (0..=4).map(|n| h.term(n).eval_diag(&b)).collect();
            for n in 1..=4 {
                let want = diagonal::composition(&f, &h_diag, n);
                assert!(fh.term(n).eval_diag(&b).dist(&want) < 1e-9);
            }
            let want = diagonal::reciprocal(&alg, &f, &b);
            for n in 0..=4 {
                assert!(recip.term(n).eval_diag(&b).dist(&want[n]) < 1e-9);
            }
            let want = diagonal::comp_inverse(&germ, &b);
            for n in 1..=4 {
                assert!(inv.term(n).eval_diag(&b).dist(&want[n]) < 1e-9, "k={k} n={n}");
            }
        }
    }
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn identity_dev(j: &Jet) -> f64 {
        let id = Jet::identity(j.algebra(), j.degree());
        jet_equal(j, &id, 0.0).unwrap().max_dev
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn comp_inverse_both_sides(k in 1usize..=3, degree in 1usize..=5, seed in any::<u64>()) {
            prop_assume!(k < 3 || degree <= 4);
            let alg = Algebra::matrix(k).unwrap();
            let f = random_invertible_germ(&alg, degree, seed);
            let h = f.comp_inverse().unwrap();
            prop_assert!(identity_dev(&f.compose(&h).unwrap()) < 1e-8);
            prop_assert!(identity_dev(&h.compose(&f).unwrap()) < 1e-8);
        }

        #[test]
        fn reciprocal_both_sides(k in 1usize..=3, degree in 0usize..=4, seed in any::<u64>()) {
            let alg = Algebra::matrix(k).unwrap();
            let f0 = alg.near_unit(seed, 0.3);
            let f = random_jet(&alg, degree, seed.wrapping_add(1), Some(&f0));
            let g = f.reciprocal().unwrap();
            let unit = Jet::unit(&alg, degree);
            prop_assert!(jet_equal(&f.mul(&g).unwrap(), &unit, 1e-9).unwrap().pass);
            prop_assert!(jet_equal(&g.mul(&f).unwrap(), &unit, 1e-9).unwrap().pass);
        }
    }
}
