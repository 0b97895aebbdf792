//! Seeded test-function corpora.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Rescaling;
use crate::operators::expr::{lit, w1, w2, z1, z2};
use crate::operators::Expr;

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusEntry {
    pub expr: Expr,
    /// Known CR part, for members built as sums.
    pub cr_part: Option<Expr>,
    pub member: bool,
}

fn coefficient(rng: &mut impl Rng) -> Complex64 {
    loop {
        let re = (rng.random_range(-1.0..1.0) * 100.0f64).round() / 100.0;
        let im = (rng.random_range(-1.0..1.0) * 100.0f64).round() / 100.0;
        let c = Complex64::new(re, im);
        if c.norm() > 0.1 {
            return c;
        }
    }
}

fn monomial(a: &Expr, b: &Expr, i: u32, j: u32) -> Expr {
    let pow = |e: &Expr, n: u32| e.clone().pow(n as i32);
    match (i, j) {
        (0, 0) => Expr::Num(1.0),
        (i, 0) => pow(a, i),
        (0, j) => pow(b, j),
        (i, j) => pow(a, i) * pow(b, j),
    }
}

/// `Σ c_k a^{i_k} b^{j_k}` with `terms` distinct exponent pairs of total degree ≤ `max_degree`.
pub fn random_polynomial(rng: &mut impl Rng, a: &Expr, b: &Expr, max_degree: u32, terms: usize) -> Expr {
    let mut seen = Vec::new();
    let mut out: Option<Expr> = None;
    while seen.len() < terms {
        let i = rng.random_range(0..=max_degree);
        let j = rng.random_range(0..=max_degree - i);
        if seen.contains(&(i, j)) {
            continue;
        }
        seen.push((i, j));
        let t = lit(coefficient(rng)) * monomial(a, b, i, j);
        out = Some(match out {
            None => t,
            Some(acc) => acc + t,
        });
    }
    out.expect("terms > 0")
}

pub fn holomorphic(rng: &mut impl Rng) -> Expr {
    let n = rng.random_range(2..=4);
    random_polynomial(rng, &z1(), &z2(), 4, n)
}

pub fn dual_holomorphic(rng: &mut impl Rng) -> Expr {
    let n = rng.random_range(2..=4);
    random_polynomial(rng, &w1(), &w2(), 4, n)
}

/// `f(z) + g(w)` with f, g polynomials of degree ≤ 4.
pub fn sum_members(n: usize, seed: u64) -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let f = holomorphic(&mut rng);
            let g = dual_holomorphic(&mut rng);
            CorpusEntry { expr: f.clone() + g, cr_part: Some(f), member: true }
        })
        .collect()
}

/// `f(z) + conj(g(z))`.
pub fn plh_members(n: usize, seed: u64) -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let f = holomorphic(&mut rng);
            let g = holomorphic(&mut rng);
            CorpusEntry { expr: f.clone() + g.conj(), cr_part: Some(f), member: true }
        })
        .collect()
}

/// `c z^a z̄^b + p(z)` with `|a|, |b| ≥ 1`, `|a| + |b| ≤ 4`.
///
/// On a complex-linear image of the sphere these are neither CR + dual-CR nor
/// pluriharmonic: the bidegree-(|a|,|b|) harmonic component of `z^a z̄^b` is
/// nonzero, while members only have components of bidegree (p,0) and (0,q).
pub fn non_members(n: usize, seed: u64) -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars = [z1(), z2(), z1().conj(), z2().conj()];
    (0..n)
        .map(|_| {
            let (a, b) = loop {
                let a = [rng.random_range(0..=2u32), rng.random_range(0..=2u32)];
                let b = [rng.random_range(0..=2u32), rng.random_range(0..=2u32)];
                let (da, db) = (a[0] + a[1], b[0] + b[1]);
                if da >= 1 && db >= 1 && da + db <= 4 {
                    break (a, b);
                }
            };
            let exps = [a[0], a[1], b[0], b[1]];
            let mut m = lit(coefficient(&mut rng));
            for (v, &k) in vars.iter().zip(&exps) {
                if k > 0 {
                    m = m * v.clone().pow(k as i32);
                }
            }
            let expr = if rng.random_bool(0.5) { m + holomorphic(&mut rng) } else { m };
            CorpusEntry { expr, cr_part: None, member: false }
        })
        .collect()
}

/// Functions with `XXTu = 0`: sums plus the quotient family `p(z₁)/w₂`.
pub fn dual_kernel_corpus(n: usize, seed: u64) -> Vec<CorpusEntry> {
    quotient_mix(sum_members(n, seed), seed)
}

/// Functions with `XXYu = 0` on hermitian quadrics: pluriharmonic sums plus `p(z₁)/w₂`.
pub fn plh_kernel_corpus(n: usize, seed: u64) -> Vec<CorpusEntry> {
    quotient_mix(plh_members(n, seed), seed)
}

fn quotient_mix(mut base: Vec<CorpusEntry>, seed: u64) -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    for (k, entry) in base.iter_mut().enumerate() {
        if k % 2 == 1 {
            let deg = rng.random_range(1..=3);
            let p = random_polynomial(&mut rng, &z1(), &Expr::Num(1.0), deg, 2);
            entry.expr = entry.expr.clone() + p / w2();
            entry.cr_part = None;
        }
    }
    base
}

/// CR triples `(f₁, f₂, f₃)` with `f₁w₁ + f₂w₂` and `f₃` bounded away from 0:
/// `f_j = a z_j + ε p_j`, `f₃ = b + ε p₃`.
pub fn cr_triples(n: usize, seed: u64) -> Vec<Rescaling> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let small = |rng: &mut ChaCha8Rng| lit(Complex64::new(0.05, 0.0)) * random_polynomial(rng, &z1(), &z2(), 2, 2);
    (0..n)
        .map(|_| {
            let a = lit(Complex64::from_polar(1.0, rng.random_range(0.0..6.0f64)));
            let b = lit(Complex64::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..6.0f64)));
            Rescaling {
                f1: a.clone() * z1() + small(&mut rng),
                f2: a * z2() + small(&mut rng),
                f3: b + small(&mut rng),
            }
        })
        .collect()
}

/// Half pluriharmonic members, half non-members.
pub fn classical_corpus(n: usize, seed: u64) -> Vec<CorpusEntry> {
    let mut out = plh_members(n / 2, seed);
    out.extend(non_members(n - n / 2, seed ^ 0x5151));
    out
}
