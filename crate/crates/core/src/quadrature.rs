//! Gauss–Hermite and Gauss–Legendre rules used by the Bayes and mmse oracles.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Nodes and weights of an interpolatory quadrature rule.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

type Cache = Mutex<HashMap<usize, Arc<QuadratureRule>>>;

fn cached(cache: &'static OnceLock<Cache>, n: usize, build: fn(usize) -> QuadratureRule) -> Arc<QuadratureRule> {
    let map = cache.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = map.lock().unwrap_or_else(|e| e.into_inner());
    map.entry(n).or_insert_with(|| Arc::new(build(n))).clone()
}

/// Gauss–Hermite rule for the weight `exp(-x^2)`.
pub fn gauss_hermite(n: usize) -> Arc<QuadratureRule> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    cached(&CACHE, n, build_hermite)
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Arc<QuadratureRule> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    cached(&CACHE, n, build_legendre)
}

/// Golub–Welsch: nodes are the eigenvalues of the Jacobi matrix, weights come
/// from the first eigenvector components.
fn build_hermite(n: usize) -> QuadratureRule {
    assert!(n >= 1);
    let mut d = vec![0.0; n];
    let mut e: Vec<f64> = (1..=n).map(|k| if k < n { (k as f64 / 2.0).sqrt() } else { 0.0 }).collect();
    let mut q = vec![0.0; n];
    q[0] = 1.0;
    tridiagonal_ql(&mut d, &mut e, &mut q);
    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(q).map(|(x, v)| (x, PI.sqrt() * v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Symmetrize to remove rounding asymmetry.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-x, w);
        pairs[j] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let (nodes, weights) = pairs.into_iter().unzip();
    QuadratureRule { nodes, weights }
}

/// Implicit QL on a symmetric tridiagonal matrix (diagonal `d`, off-diagonal
/// `e[i]` between rows `i` and `i + 1`), tracking only the first row of the
/// eigenvector matrix in `q`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], q: &mut [f64]) {
    let n = d.len();
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            assert!(iterations < 100, "QL iteration did not converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let qi1 = q[i + 1];
                q[i + 1] = s * q[i] + c * qi1;
                q[i] = c * q[i] - s * qi1;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

fn build_legendre(n: usize) -> QuadratureRule {
    assert!(n >= 1);
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 1..=n.div_ceil(2) {
        let mut z = (PI * (i as f64 - 0.25) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i - 1] = -z;
        x[n - i] = z;
        w[i - 1] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - i] = w[i - 1];
    }
    QuadratureRule { nodes: x, weights: w }
}

/// `E[f(Z)]` for standard normal `Z` with an `n`-node Hermite rule.
pub fn normal_expectation(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_hermite(n);
    let scale = 2f64.sqrt();
    let norm = PI.sqrt();
    rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * f(scale * x)).sum::<f64>() / norm
}

/// Smallest and largest Hermite orders tried by [`adaptive_normal_expectation`].
pub const HERMITE_START: usize = 16;
pub const HERMITE_CAP: usize = 512;

/// `E[f(Z)]`, doubling the order until successive values differ by less
/// than `tol` (relative to `max(1, |E|)`). If the cap is reached, falls back
/// to adaptive Gauss–Kronrod panels.
pub fn adaptive_normal_expectation(tol: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let mut n = HERMITE_START;
    let mut prev = normal_expectation(n, &f);
    while n < HERMITE_CAP {
        n *= 2;
        let next = normal_expectation(n, &f);
        if !next.is_finite() {
            return Err(Error::NonFinite("quadrature"));
        }
        if (next - prev).abs() < tol * next.abs().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    normal_expectation_by_panels(tol, &f)
}

/// Spatially adaptive fallback for integrands with features narrower than
/// the Hermite node spacing.
fn normal_expectation_by_panels(tol: f64, f: &impl Fn(f64) -> f64) -> Result<f64> {
    let density = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt() * f(z);
    let mut edges = vec![-NORMAL_TAIL];
    edges.extend((0..=CORE_PANELS).map(|i| -CORE_HALF_WIDTH + 2.0 * CORE_HALF_WIDTH * i as f64 / CORE_PANELS as f64));
    edges.push(NORMAL_TAIL);
    panel_integral(&edges, tol, &density)
}

const NORMAL_TAIL: f64 = 38.5;
const CORE_HALF_WIDTH: f64 = 10.0;
const CORE_PANELS: usize = 200;
const MAX_DEPTH: u32 = 40;

// Gauss–Kronrod 7/15 abscissae and weights on [-1, 1] (non-negative half).
const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for KRONROD_NODES[1], [3], [5], [7].
const GAUSS7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and `|Kronrod - Gauss|` on `[a, b]`.
fn kronrod(a: f64, b: f64, f: &impl Fn(f64) -> f64) -> (f64, f64) {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let (mut k, mut g) = (0.0, 0.0);
    for (i, (&x, &w)) in KRONROD_NODES.iter().zip(&KRONROD_WEIGHTS).enumerate() {
        let fx = if x == 0.0 { f(mid) } else { f(mid - half * x) + f(mid + half * x) };
        k += w * fx;
        if i % 2 == 1 {
            g += GAUSS7_WEIGHTS[i / 2] * fx;
        }
    }
    (half * k, half * (k - g).abs())
}

fn refine(a: f64, b: f64, whole: (f64, f64), tol: f64, depth: u32, f: &impl Fn(f64) -> f64) -> Result<f64> {
    let (value, err) = whole;
    if !value.is_finite() {
        return Err(Error::NonFinite("quadrature"));
    }
    if err <= tol {
        return Ok(value);
    }
    if depth == MAX_DEPTH {
        return Err(Error::QuadratureNotConverged { nodes: 15 << MAX_DEPTH.min(20) });
    }
    let m = 0.5 * (a + b);
    let left = kronrod(a, m, f);
    let right = kronrod(m, b, f);
    Ok(refine(a, m, left, 0.5 * tol, depth + 1, f)? + refine(m, b, right, 0.5 * tol, depth + 1, f)?)
}

/// Adaptive Gauss–Kronrod over consecutive panels; `tol` is relative to `max(1, |I|)`.
fn panel_integral(edges: &[f64], tol: f64, f: &impl Fn(f64) -> f64) -> Result<f64> {
    let first: Vec<(f64, f64)> = edges.windows(2).map(|w| kronrod(w[0], w[1], f)).collect();
    let rough: f64 = first.iter().map(|p| p.0).sum();
    let budget = tol * rough.abs().max(1.0) / first.len() as f64;
    edges.windows(2).zip(first).map(|(w, est)| refine(w[0], w[1], est, budget, 0, f)).sum()
}

/// `int_a^b f` with an `n`-node Legendre rule.
pub fn integrate(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_legendre(n);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * rule.nodes.iter().zip(&rule.weights).map(|(&x, &w)| w * f(mid + half * x)).sum::<f64>()
}

/// `int_a^b f`, doubling the Legendre order from 16 up to 512 until stable,
/// then falling back to adaptive Gauss–Kronrod panels.
pub fn adaptive_integrate(a: f64, b: f64, tol: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let mut n = 16;
    let mut prev = integrate(a, b, n, &f);
    while n < 512 {
        n *= 2;
        let next = integrate(a, b, n, &f);
        if !next.is_finite() {
            return Err(Error::NonFinite("quadrature"));
        }
        if (next - prev).abs() < tol * next.abs().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    let edges: Vec<f64> = (0..=FALLBACK_PANELS).map(|i| a + (b - a) * i as f64 / FALLBACK_PANELS as f64).collect();
    panel_integral(&edges, tol, &f)
}

const FALLBACK_PANELS: usize = 16;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        for n in [16, 32, 64, 128, 256, 512] {
            let r = gauss_hermite(n);
            let total: f64 = r.weights.iter().sum();
            assert!((total - PI.sqrt()).abs() < 1e-12, "n={n} total={total}");
            assert!(normal_expectation(n, |z| z).abs() < 1e-12);
            assert!((normal_expectation(n, |z| z * z) - 1.0).abs() < 1e-12, "n={n}");
            assert!((normal_expectation(n, |z| z.powi(4)) - 3.0).abs() < 1e-11, "n={n}");
        }
    }

    #[test]
    fn hermite_nonpolynomial() {
        // E[cos Z] = exp(-1/2).
        let v = adaptive_normal_expectation(1e-12, f64::cos).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn legendre_integrals() {
        assert!((integrate(0.0, 1.0, 8, |x| x.powi(7)) - 0.125).abs() < 1e-14);
        let v = adaptive_integrate(0.0, 1.0, 1e-13, |g| 1.0 / (1.0 + g)).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-13);
        let r = gauss_legendre(64);
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn kronrod_rule_is_exact_for_polynomials() {
        let (two, _) = kronrod(-1.0, 1.0, &|_| 1.0);
        assert!((two - 2.0).abs() < 1e-15);
        let (v, err) = kronrod(0.0, 2.0, &|x: f64| x.powi(13));
        assert!((v - 2f64.powi(14) / 14.0).abs() < 1e-10 && err < 1e-9);
        let (v, _) = kronrod(0.0, 1.0, &|x: f64| x.powi(22));
        assert!((v - 1.0 / 23.0).abs() < 1e-14);
    }

    #[test]
    fn narrow_features_fall_back_to_panels() {
        let bump = |z: f64| 1.0 / (60.0 * (z - 1.3)).cosh().powi(2);
        let v = adaptive_normal_expectation(1e-10, bump).unwrap();
        // Trapezoid oracle on a fine grid around the bump.
        let h = 1e-5;
        let oracle: f64 = (0..200_000)
            .map(|i| {
                let z = 0.3 + i as f64 * h;
                h * (-0.5 * z * z).exp() / (2.0 * PI).sqrt() * bump(z)
            })
            .sum();
        assert!((v - oracle).abs() < 1e-10, "{v} vs {oracle}");
    }
}
