//! Truncated full Fock space `BΩ ⊕ ⊕_{k≤J} D^{⊗k} ⊗ B` with `D = B^I`.
//!
//! A vector is stored by sector: the word `(i_1, .., i_k)` of index letters
//! keys a dense tensor with one `B`-coordinate per slot, slot 1 slowest, and
//! the tail coordinate fastest. Elementary tensors read
//! `b_1 δ_{i_1} ⊗ .. ⊗ b_k δ_{i_k} ⊗ b_0`.

mod checks;
mod model;

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Algebra, Element};
use crate::error::{Error, Result};
use crate::series::MultilinearMap;

pub use checks::{
    bimodularity_check, freeness_check, geometric_state_check, relation_checks, rho_commutation_check, CheckReport,
};
pub use model::{alternating_moment, fit_r_model, fit_s_model, model_moments, moment_map, ModelFlavor, RvModel};

/// Sectors whose coordinates all fall below this are dropped.
pub const PRUNE_TOL: f64 = 1e-15;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// What a creation at the top level does.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DepthMode {
    /// Fail with [`Error::DepthExceeded`].
    Strict,
    /// Drop the overflowing component.
    Lossy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockConfig {
    pub algebra: Algebra,
    /// Index letters are `1..=indices`.
    pub indices: usize,
    /// Longest stored word.
    pub depth: usize,
    pub mode: DepthMode,
}

impl FockConfig {
    pub fn new(algebra: &Algebra, indices: usize, depth: usize, mode: DepthMode) -> Self {
        assert!(indices >= 1, "at least one index letter");
        FockConfig {
            algebra: algebra.clone(),
            indices,
            depth,
            mode,
        }
    }

    /// Two letters, strict mode.
    pub fn strict(algebra: &Algebra, depth: usize) -> Self {
        FockConfig::new(algebra, 2, depth, DepthMode::Strict)
    }

    pub fn with_depth(&self, depth: usize) -> Self {
        FockConfig { depth, ..self.clone() }
    }

    pub fn with_mode(&self, mode: DepthMode) -> Self {
        FockConfig { mode, ..self.clone() }
    }

    fn sector_len(&self, level: usize) -> usize {
        self.algebra.dim().pow(level as u32 + 1)
    }
}

#[derive(Clone, Debug)]
pub struct FockVector {
    config: FockConfig,
    sectors: BTreeMap<Vec<usize>, Vec<C64>>,
}

impl FockVector {
    pub fn zero(config: &FockConfig) -> Self {
        FockVector {
            config: config.clone(),
            sectors: BTreeMap::new(),
        }
    }

    /// `Ω`: the unit in the level-0 sector.
    pub fn vacuum(config: &FockConfig) -> Self {
        let mut v = FockVector::zero(config);
        v.sectors.insert(Vec::new(), config.algebra.unit().coords().to_vec());
        v
    }

    /// Random coordinates of magnitude at most `radius` on every word up to `max_level`.
    pub fn random(config: &FockConfig, max_level: usize, radius: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = FockVector::zero(config);
        let mut words = vec![Vec::new()];
        for level in 0..=max_level.min(config.depth) {
            let len = config.sector_len(level);
            let mut next = Vec::new();
            for w in words {
                let t = (0..len)
                    .map(|_| C64::new(rng.random_range(-radius..radius), rng.random_range(-radius..radius)))
                    .collect();
                for i in 1..=config.indices {
                    let mut longer = vec![i];
                    longer.extend_from_slice(&w);
                    next.push(longer);
                }
                v.sectors.insert(w, t);
            }
            words = next;
        }
        v
    }

    pub fn config(&self) -> &FockConfig {
        &self.config
    }

    /// Inserts (or replaces) one sector.
    pub fn set_sector(&mut self, word: Vec<usize>, tensor: Vec<C64>) -> Result<()> {
        if word.len() > self.config.depth {
            return Err(Error::DepthExceeded {
                level: word.len(),
                depth: self.config.depth,
            });
        }
        if word.iter().any(|&i| i == 0 || i > self.config.indices) {
            return Err(Error::contract(format!(
                "word {word:?} uses a letter outside 1..={}",
                self.config.indices
            )));
        }
        if tensor.len() != self.config.sector_len(word.len()) {
            return Err(Error::contract(format!(
                "sector {word:?} needs {} coordinates, got {}",
                self.config.sector_len(word.len()),
                tensor.len()
            )));
        }
        self.sectors.insert(word, tensor);
        Ok(())
    }

    pub fn sector(&self, word: &[usize]) -> Option<&[C64]> {
        self.sectors.get(word).map(|t| t.as_slice())
    }

    pub fn sectors(&self) -> impl Iterator<Item = (&[usize], &[C64])> {
        self.sectors.iter().map(|(w, t)| (w.as_slice(), t.as_slice()))
    }

    pub fn sector_count(&self) -> usize {
        self.sectors.len()
    }

    /// Highest level holding a stored sector.
    pub fn max_level(&self) -> Option<usize> {
        self.sectors.keys().map(|w| w.len()).max()
    }

    /// `P(v)`: the level-0 tail.
    pub fn expectation(&self) -> Element {
        match self.sectors.get(&Vec::new()) {
            Some(t) => Element::new(t.clone()),
            None => self.config.algebra.zero(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.sectors
            .values()
            .flat_map(|t| t.iter())
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Max-coordinate distance over sectors of level at most `max_level`.
    pub fn dist_up_to(&self, other: &FockVector, max_level: usize) -> f64 {
        let mut worst: f64 = 0.0;
        let mut visit = |a: &BTreeMap<Vec<usize>, Vec<C64>>, b: &BTreeMap<Vec<usize>, Vec<C64>>| {
            for (w, t) in a.iter().filter(|(w, _)| w.len() <= max_level) {
                match b.get(w) {
                    Some(s) => {
                        for (x, y) in t.iter().zip(s) {
                            worst = worst.max((x - y).norm());
                        }
                    }
                    None => worst = worst.max(t.iter().fold(0.0, |m, z| m.max(z.norm()))),
                }
            }
        };
        visit(&self.sectors, &other.sectors);
        visit(&other.sectors, &self.sectors);
        worst
    }

    pub fn dist(&self, other: &FockVector) -> f64 {
        self.dist_up_to(other, usize::MAX)
    }

    pub fn add(&self, other: &FockVector) -> FockVector {
        let mut out = self.clone();
        out.accumulate(other, C64::new(1.0, 0.0));
        out.prune();
        out
    }

    pub fn sub(&self, other: &FockVector) -> FockVector {
        let mut out = self.clone();
        out.accumulate(other, C64::new(-1.0, 0.0));
        out.prune();
        out
    }

    pub fn scale(&self, c: C64) -> FockVector {
        let mut out = self.clone();
        for t in out.sectors.values_mut() {
            t.iter_mut().for_each(|z| *z *= c);
        }
        out.prune();
        out
    }

    fn accumulate(&mut self, other: &FockVector, coef: C64) {
        for (w, t) in &other.sectors {
            self.add_sector(w.clone(), t, coef);
        }
    }

    fn add_sector(&mut self, word: Vec<usize>, tensor: &[C64], coef: C64) {
        let dst = self.sectors.entry(word).or_insert_with(|| vec![ZERO; tensor.len()]);
        for (d, s) in dst.iter_mut().zip(tensor) {
            *d += coef * s;
        }
    }

    fn prune(&mut self) {
        self.sectors.retain(|_, t| t.iter().any(|z| z.norm() > PRUNE_TOL));
    }
}

/// Symbolic operator on the truncated Fock space.
#[derive(Clone, Debug)]
pub enum Operator {
    /// `λ(b)`: left multiplication on the first slot (the tail at level 0).
    Lambda(Element),
    /// `ρ(b)`: right multiplication on the tail.
    Rho(Element),
    /// `L_i`: prepends `δ_i ⊗` with slot `1`.
    L(usize),
    /// `V_{i,n}(α)` with `n = α.order()`.
    V(usize, MultilinearMap),
    /// `W_{i,n}(α)` with `n = α.order()`.
    W(usize, MultilinearMap),
    Sum(Vec<Operator>),
    Scaled(C64, Box<Operator>),
    /// Composition; the last factor acts first.
    Product(Vec<Operator>),
}

impl Operator {
    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        let mut out = FockVector::zero(&v.config);
        self.apply_into(v, C64::new(1.0, 0.0), &mut out)?;
        out.prune();
        Ok(out)
    }

    fn apply_into(&self, v: &FockVector, coef: C64, out: &mut FockVector) -> Result<()> {
        let cfg = &v.config;
        let alg = &cfg.algebra;
        let d = alg.dim();
        match self {
            Operator::Lambda(b) => {
                let m = alg.left_mult_matrix(b);
                for (w, t) in &v.sectors {
                    let block = t.len() / d;
                    let mut res = vec![ZERO; t.len()];
                    for a in 0..d {
                        for c in 0..d {
                            let x = m[(a, c)];
                            if x == ZERO {
                                continue;
                            }
                            let src = &t[c * block..(c + 1) * block];
                            for (r, s) in res[a * block..(a + 1) * block].iter_mut().zip(src) {
                                *r += x * s;
                            }
                        }
                    }
                    out.add_sector(w.clone(), &res, coef);
                }
            }
            Operator::Rho(b) => {
                let m = alg.right_mult_matrix(b);
                for (w, t) in &v.sectors {
                    let mut res = vec![ZERO; t.len()];
                    for (dst, src) in res.chunks_mut(d).zip(t.chunks(d)) {
                        for a in 0..d {
                            dst[a] = (0..d).map(|c| m[(a, c)] * src[c]).sum();
                        }
                    }
                    out.add_sector(w.clone(), &res, coef);
                }
            }
            Operator::L(i) => {
                check_letter(cfg, *i)?;
                let u = alg.unit().coords();
                for (w, t) in &v.sectors {
                    if w.len() == cfg.depth {
                        match cfg.mode {
                            DepthMode::Strict => {
                                return Err(Error::DepthExceeded {
                                    level: w.len(),
                                    depth: cfg.depth,
                                })
                            }
                            DepthMode::Lossy => continue,
                        }
                    }
                    let mut res = Vec::with_capacity(d * t.len());
                    for &ua in u {
                        res.extend(t.iter().map(|z| ua * z));
                    }
                    let mut word = vec![*i];
                    word.extend_from_slice(w);
                    out.add_sector(word, &res, coef);
                }
            }
            Operator::V(i, alpha) | Operator::W(i, alpha) if alpha.order() == 0 => {
                let lam = Operator::Lambda(alpha.as_element());
                if matches!(self, Operator::V(..)) {
                    lam.apply_into(v, coef, out)?;
                } else {
                    let created = Operator::L(*i).apply(v)?;
                    lam.apply_into(&created, coef, out)?;
                }
            }
            Operator::V(i, alpha) | Operator::W(i, alpha) => {
                check_letter(cfg, *i)?;
                let creates = matches!(self, Operator::W(..));
                let n = alpha.order();
                let an = d.pow(n as u32);
                for (w, t) in &v.sectors {
                    if w.len() < n || w[..n].iter().any(|l| l != i) {
                        continue;
                    }
                    // res[o][rest] = Σ_C α[o][C] t[C][rest]
                    let rest = t.len() / an;
                    let mut res = vec![ZERO; d * rest];
                    for o in 0..d {
                        let row = &alpha.coeffs()[o * an..(o + 1) * an];
                        let dst = &mut res[o * rest..(o + 1) * rest];
                        for (ci, &a) in row.iter().enumerate() {
                            if a == ZERO {
                                continue;
                            }
                            for (r, s) in dst.iter_mut().zip(&t[ci * rest..(ci + 1) * rest]) {
                                *r += a * s;
                            }
                        }
                    }
                    if creates {
                        let mut word = vec![*i];
                        word.extend_from_slice(&w[n..]);
                        out.add_sector(word, &res, coef);
                    } else {
                        // Multiply the contracted element onto the next component.
                        let rest2 = rest / d;
                        let mut merged = vec![ZERO; rest];
                        for term in alg.terms() {
                            let src = &res[(term.p * d + term.q) * rest2..(term.p * d + term.q + 1) * rest2];
                            for (m, s) in merged[term.r * rest2..(term.r + 1) * rest2].iter_mut().zip(src) {
                                *m += term.c * s;
                            }
                        }
                        out.add_sector(w[n..].to_vec(), &merged, coef);
                    }
                }
            }
            Operator::Sum(ops) => {
                for op in ops {
                    op.apply_into(v, coef, out)?;
                }
            }
            Operator::Scaled(c, op) => op.apply_into(v, coef * c, out)?,
            Operator::Product(ops) => match ops.split_first() {
                None => out.accumulate(v, coef),
                Some((first, rest)) => {
                    let mut cur = v.clone();
                    for op in rest.iter().rev() {
                        cur = op.apply(&cur)?;
                    }
                    first.apply_into(&cur, coef, out)?;
                }
            },
        }
        Ok(())
    }
}

fn check_letter(cfg: &FockConfig, i: usize) -> Result<()> {
    if i == 0 || i > cfg.indices {
        return Err(Error::contract(format!("index {i} outside 1..={}", cfg.indices)));
    }
    Ok(())
}
