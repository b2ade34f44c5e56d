//! Special functions and quadrature used across the crate.
//!
//! Only what the rate computations need: the exponential integral `E1`
//! (the upper incomplete gamma function at order zero), its inverse,
//! Poisson/binomial masses, Gauss-Laguerre nodes and an adaptive
//! Gauss-Kronrod integrator.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E1(x) = ∫_x^∞ e^{-u}/u du` for `x > 0`.
///
/// Power series below 1, Lentz continued fraction above.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::domain(format!("E1 requires x > 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(if x < 1.0 { e1_series(x) } else { e1_continued_fraction(x) })
}

fn e1_series(x: f64) -> f64 {
    // E1(x) = -γ - ln x - Σ_{k≥1} (-x)^k / (k·k!)
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -x / kf;
        let contrib = term / kf;
        sum += contrib;
        if contrib.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

fn e1_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x).exp()
}

/// Inverse of `E1` on `(0, ∞)`: returns `x` with `E1(x) = y`.
pub fn exp_integral_e1_inv(y: f64) -> Result<f64> {
    if y.is_nan() || y <= 0.0 {
        return Err(Error::domain(format!("E1 inverse requires y > 0, got {y}")));
    }
    if y.is_infinite() {
        return Ok(0.0);
    }
    // Bisection on ln x; E1 is strictly decreasing.
    let (mut lo, mut hi) = (-745.0_f64, 6.6_f64);
    let e1 = |s: f64| e1_unchecked(s.exp());
    if e1(lo) < y {
        // Beyond the smallest positive double.
        return Ok(0.0);
    }
    while e1(hi) > y {
        hi += 1.0;
        if hi > 7.0 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if e1(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * (1.0 + mid.abs()) {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

fn e1_unchecked(x: f64) -> f64 {
    if x <= 0.0 {
        f64::INFINITY
    } else if x < 1.0 {
        e1_series(x)
    } else {
        e1_continued_fraction(x)
    }
}

/// `ln k!` for `k = 0..=n`.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Poisson masses `Pr(N = k)` for `k = 0..=n_max`, computed in log space.
pub fn poisson_pmf(mean: f64, n_max: usize) -> Vec<f64> {
    if mean <= 0.0 {
        let mut v = vec![0.0; n_max + 1];
        v[0] = 1.0;
        return v;
    }
    let lnf = ln_factorials(n_max);
    let ln_mean = mean.ln();
    (0..=n_max)
        .map(|k| (k as f64 * ln_mean - mean - lnf[k]).exp())
        .collect()
}

/// Smallest `n` such that `Pr(Poisson(mean) > n) < tail`.
pub fn poisson_upper_index(mean: f64, tail: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let mut n = 0usize;
    let mut ln_pmf = -mean;
    let mut cdf = ln_pmf.exp();
    let mode = mean.floor() as usize;
    // Walk upward; past the mode the remaining mass is bounded by a
    // geometric series with ratio mean/(n+1).
    loop {
        if n > mode {
            let ratio = mean / (n as f64 + 1.0);
            let rest = ln_pmf.exp() * ratio / (1.0 - ratio);
            if rest < tail && 1.0 - cdf < tail.max(1e-15) {
                return n;
            }
            if rest < tail * 1e-3 {
                return n;
            }
        }
        n += 1;
        ln_pmf += mean.ln() - (n as f64).ln();
        cdf += ln_pmf.exp();
        if n > 10_000_000 {
            return n;
        }
    }
}

/// Binomial masses `Pr(S = k)` for `S ~ Bin(trials, p)`.
pub fn binomial_pmf(trials: usize, p: f64) -> Vec<f64> {
    let lnf = ln_factorials(trials);
    (0..=trials)
        .map(|k| {
            let ln_choose = lnf[trials] - lnf[k] - lnf[trials - k];
            let a = if k == 0 { 0.0 } else { k as f64 * p.ln() };
            let b = if k == trials {
                0.0
            } else {
                (trials - k) as f64 * (-p).ln_1p()
            };
            (ln_choose + a + b).exp()
        })
        .collect()
}

/// Gauss-Laguerre rule (weight `e^{-x}` on `[0, ∞)`).
#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLaguerre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Gauss-Laguerre needs at least two nodes");
        let nf = n as f64;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let mut z = 0.0_f64;
        for i in 0..n {
            z = match i {
                0 => 3.0 / (1.0 + 2.4 * nf),
                1 => z + 15.0 / (1.0 + 2.5 * nf),
                _ => {
                    let ai = (i - 1) as f64;
                    z + ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - nodes[i - 2])
                }
            };
            let (mut p1, mut p2, mut pp);
            let mut iter = 0;
            loop {
                p1 = 1.0;
                p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf - 1.0 - z) * p2 - (jf - 1.0) * p3) / jf;
                }
                pp = (nf * p1 - nf * p2) / z;
                let z1 = z;
                z = z1 - p1 / pp;
                iter += 1;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) || iter > 100 {
                    break;
                }
            }
            nodes[i] = z;
            weights[i] = -1.0 / (pp * nf * p2);
        }
        GaussLaguerre { nodes, weights }
    }

    /// `∫_0^∞ e^{-x} f(x) dx`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

pub(crate) fn laguerre_64() -> &'static GaussLaguerre {
    static RULE: OnceLock<GaussLaguerre> = OnceLock::new();
    RULE.get_or_init(|| GaussLaguerre::new(64))
}

pub(crate) fn laguerre_128() -> &'static GaussLaguerre {
    static RULE: OnceLock<GaussLaguerre> = OnceLock::new();
    RULE.get_or_init(|| GaussLaguerre::new(128))
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WEIGHTS_G: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod_15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * GK_WEIGHTS_K[7];
    let mut gauss = fc * GK_WEIGHTS_G[3];
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        kronrod += GK_WEIGHTS_K[i] * s;
        if i % 2 == 1 {
            gauss += GK_WEIGHTS_G[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature of `f` on `[a, b]`.
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let (whole, err) = gauss_kronrod_15(&f, a, b);
    let mut total = whole;
    let mut stack = vec![(a, b, whole, err)];
    let mut accepted = 0.0;
    let mut budget = 20_000;
    while let Some((lo, hi, est, err)) = stack.pop() {
        let tol = rel_tol * total.abs().max(f64::MIN_POSITIVE);
        if err <= tol * (hi - lo) / (b - a) || budget == 0 || hi - lo < 1e-15 * (b - a) {
            accepted += est;
            continue;
        }
        budget -= 1;
        let mid = 0.5 * (lo + hi);
        let (l, el) = gauss_kronrod_15(&f, lo, mid);
        let (r, er) = gauss_kronrod_15(&f, mid, hi);
        total += l + r - est;
        stack.push((lo, mid, l, el));
        stack.push((mid, hi, r, er));
    }
    accepted
}
