//! Independent numerical quadrature and sampling.
//!
//! Everything here works on `f64` samples of a [`PiecewiseFn`] and never
//! decides divergence: callers must already know the integral converges,
//! and the entry points re-check the exponent conditions and refuse
//! otherwise. The panel rule is Gauss-Kronrod 7/15, generic over the float
//! type; the reported error is `|K15 - G7|` summed over panels, which
//! over-estimates the error of the returned Kronrod value.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_traits::{Float, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{rational_to_f64, Coeff, Extended, Rational};
use crate::symfunc::{Endpoint, Piece, PiecewiseFn};

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const MAX_PANELS: usize = 1 << 14;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss-Kronrod 7/15 panel: `(kronrod value, |kronrod - gauss|)`.
pub fn gauss_kronrod_15<F: Float>(g: &impl Fn(F) -> F, a: F, b: F) -> (F, F) {
    let c = |v: f64| F::from(v).expect("float constant");
    let half = (b - a) * c(0.5);
    let mid = (a + b) * c(0.5);
    let fc = g(mid);
    let mut k = fc * c(WGK[7]);
    let mut gs = fc * c(WG[3]);
    for i in 0..7 {
        let dx = half * c(XGK[i]);
        let s = g(mid - dx) + g(mid + dx);
        k = k + s * c(WGK[i]);
        if i % 2 == 1 {
            gs = gs + s * c(WG[i / 2]);
        }
    }
    (k * half, ((k - gs) * half).abs())
}

#[derive(Clone, Copy)]
struct Panel<F> {
    a: F,
    b: F,
    value: F,
    err: F,
}

impl<F: Float> PartialEq for Panel<F> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<F: Float> Eq for Panel<F> {}
impl<F: Float> PartialOrd for Panel<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<F: Float> Ord for Panel<F> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

fn pairwise_sum<F: Float>(v: &[F]) -> F {
    match v.len() {
        0 => F::zero(),
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Adaptive bisection of the panel with the largest error estimate until
/// the summed estimate drops below `rel_tol * |value|` (or `abs_tol`) or
/// `max_panels` is reached. Returns `(value, error, panels)`.
pub fn integrate_adaptive<F: Float>(
    g: impl Fn(F) -> F,
    a: F,
    b: F,
    rel_tol: F,
    abs_tol: F,
    max_panels: usize,
) -> (F, F, usize) {
    let g = |x: F| {
        let v = g(x);
        if v.is_finite() {
            v
        } else {
            F::zero()
        }
    };
    let (v, e) = gauss_kronrod_15(&g, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, err: e });
    let mut total_v = v;
    let mut total_e = e;
    let two = F::one() + F::one();
    while heap.len() < max_panels && total_e > abs_tol.max(rel_tol * total_v.abs()) {
        let Some(worst) = heap.pop() else { break };
        let m = (worst.a + worst.b) / two;
        if !(m > worst.a && m < worst.b) {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gauss_kronrod_15(&g, worst.a, m);
        let (v2, e2) = gauss_kronrod_15(&g, m, worst.b);
        total_v = total_v - worst.value + v1 + v2;
        total_e = total_e - worst.err + e1 + e2;
        heap.push(Panel {
            a: worst.a,
            b: m,
            value: v1,
            err: e1,
        });
        heap.push(Panel {
            a: m,
            b: worst.b,
            value: v2,
            err: e2,
        });
    }
    let mut panels = heap.into_vec();
    panels.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap_or(Ordering::Equal));
    let values: Vec<F> = panels.iter().map(|p| p.value).collect();
    let errs: Vec<F> = panels.iter().map(|p| p.err).collect();
    (pairwise_sum(&values), pairwise_sum(&errs), panels.len())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Truncation {
    pub used_cutoff: f64,
    pub tail_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub subdivisions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<Truncation>,
}

impl QuadratureResult {
    fn zero() -> Self {
        QuadratureResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            subdivisions: 0,
            truncation: None,
        }
    }

    fn absorb(&mut self, other: QuadratureResult) {
        self.value += other.value;
        self.abs_error_estimate += other.abs_error_estimate;
        self.subdivisions += other.subdivisions;
        if let Some(t) = other.truncation {
            let mine = self.truncation.get_or_insert(Truncation {
                used_cutoff: 0.0,
                tail_bound: 0.0,
            });
            mine.used_cutoff = mine.used_cutoff.max(t.used_cutoff);
            mine.tail_bound += t.tail_bound;
        }
    }

    /// `abs_error_estimate` plus the recorded tail bound.
    pub fn total_error(&self) -> f64 {
        self.abs_error_estimate + self.truncation.map_or(0.0, |t| t.tail_bound)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: DEFAULT_REL_TOL,
            max_panels: MAX_PANELS,
        }
    }
}

impl QuadConfig {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        QuadConfig {
            rel_tol,
            ..Self::default()
        }
    }
}

/// What is integrated over a piece: the signed terms or `|terms|^p`.
#[derive(Clone, Debug)]
enum Integrand {
    Signed,
    AbsPow(Rational, f64),
}

impl Integrand {
    fn abs_pow(p: &Rational) -> Self {
        Integrand::AbsPow(p.clone(), rational_to_f64(p))
    }

    fn power(&self) -> Rational {
        match self {
            Integrand::Signed => Rational::from_integer(1.into()),
            Integrand::AbsPow(p, _) => p.clone(),
        }
    }

    fn apply(&self, v: f64) -> f64 {
        match self {
            Integrand::Signed => v,
            Integrand::AbsPow(_, p) if *p == 1.0 => v.abs(),
            Integrand::AbsPow(_, p) => v.abs().powf(*p),
        }
    }
}

/// Leading integrand behaviour `c * x^sigma * |ln x|^lambda` at one end.
#[derive(Clone, Copy, Debug)]
struct Asymptote {
    coeff: f64,
    sigma: f64,
    lambda: f64,
}

fn asymptote<C: Coeff>(piece: &Piece<C>, end: Endpoint, how: &Integrand) -> Option<(Asymptote, Rational)> {
    let t = piece.leading(end)?;
    let p = how.power();
    let pf = rational_to_f64(&p);
    let sigma_exact = &t.exp * &p;
    Some((
        Asymptote {
            coeff: t.coeff.to_f64().abs().powf(pf),
            sigma: rational_to_f64(&sigma_exact),
            lambda: t.log_power as f64 * pf,
        },
        sigma_exact,
    ))
}

/// Points in `(lo, hi)` where the terms of `piece` change sign.
///
/// Sign changes are bracketed on a fixed sample grid (log-spaced when the
/// interval spans decades, unbounded ends clipped at a 1e12 ratio) and then
/// refined by bisection.
pub fn sign_changes<C: Coeff>(piece: &Piece<C>, lo: f64, hi: f64) -> Vec<f64> {
    if piece.terms.len() < 2 {
        return Vec::new();
    }
    let f = |x: f64| piece.eval(x);
    sign_changes_of(&f, lo, hi)
}

pub(crate) fn sign_changes_of(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<f64> {
    const N: usize = 256;
    let (a, b) = match (lo > 0.0, hi.is_finite()) {
        (true, true) => (lo, hi),
        (false, true) => (hi * 1e-12, hi),
        (true, false) => (lo, lo * 1e12),
        (false, false) => (1e-12, 1e12),
    };
    let log_grid = b / a > 100.0;
    let point = |i: usize| {
        let s = i as f64 / N as f64;
        if log_grid {
            (a.ln() + s * (b.ln() - a.ln())).exp()
        } else {
            a + s * (b - a)
        }
    };
    let mut roots = Vec::new();
    let mut x0 = point(0);
    let mut y0 = f(x0);
    for i in 1..=N {
        let x1 = point(i);
        let y1 = f(x1);
        if y0 == 0.0 && x0 > lo && x0 < hi {
            roots.push(x0);
        } else if y0 * y1 < 0.0 {
            let (mut l, mut r, mut fl) = (x0, x1, y0);
            for _ in 0..200 {
                let m = 0.5 * (l + r);
                if m <= l || m >= r {
                    break;
                }
                let fm = f(m);
                if fm == 0.0 {
                    l = m;
                    r = m;
                    break;
                }
                if (fm < 0.0) == (fl < 0.0) {
                    l = m;
                    fl = fm;
                } else {
                    r = m;
                }
            }
            let root = 0.5 * (l + r);
            if root > lo && root < hi {
                roots.push(root);
            }
        }
        x0 = x1;
        y0 = y1;
    }
    roots.dedup();
    roots
}

fn check_convergence<C: Coeff>(piece: &Piece<C>, how: &Integrand, at_zero: bool, at_inf: bool) -> Result<()> {
    let one = Rational::from_integer(1.into());
    if at_zero {
        if let Some((_, s)) = asymptote(piece, Endpoint::ZeroPlus, how) {
            if s <= -one.clone() {
                return Err(Error::ConvergenceNotCertified(format!(
                    "integrand exponent {s} at 0+ is not > -1"
                )));
            }
        }
    }
    if at_inf {
        if let Some((_, s)) = asymptote(piece, Endpoint::Infinity, how) {
            if s >= -one {
                return Err(Error::ConvergenceNotCertified(format!(
                    "integrand exponent {s} at inf is not < -1"
                )));
            }
        }
    }
    Ok(())
}

/// Integral over `[0, t]` with `x = t * w^m`, `m` chosen so the transformed
/// integrand vanishes at `w = 0`.
fn integrate_from_zero(g: &impl Fn(f64) -> f64, t: f64, asym: Option<Asymptote>, cfg: &QuadConfig) -> QuadratureResult {
    let m = match asym {
        Some(a) => (2.0 / (a.sigma + 1.0)).ceil().max(1.0),
        None => 1.0,
    };
    let h = |w: f64| {
        let x = t * w.powf(m);
        if x <= 0.0 {
            return 0.0;
        }
        (g(x) * x) * (m / w)
    };
    let (value, err, n) = integrate_adaptive(h, 0.0, 1.0, cfg.rel_tol * 0.1, 1e-300, cfg.max_panels);
    QuadratureResult {
        value,
        abs_error_estimate: err,
        subdivisions: n,
        truncation: None,
    }
}

/// Upper bound on `int_T^inf c x^sigma (ln x)^lambda dx` (sigma < -1), valid
/// when `ln T > lambda / (-sigma - 1)`.
fn tail_integral_bound(a: &Asymptote, ln_t: f64) -> f64 {
    let s = -a.sigma - 1.0;
    let denom = s - a.lambda / ln_t;
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    a.coeff * ((-s) * ln_t).exp() * ln_t.powf(a.lambda) / denom
}

/// Integral over `[s, inf)` via `x = s * w^-m`, truncated at a cutoff `T`
/// chosen so that twice the leading-term tail bound is below the tolerance.
fn integrate_to_infinity(g: &impl Fn(f64) -> f64, s: f64, asym: Asymptote, cfg: &QuadConfig) -> QuadratureResult {
    let m = (2.0 / (-asym.sigma - 1.0)).ceil().max(1.0);
    let run = |cutoff: f64| {
        let w_lo = (s / cutoff).powf(1.0 / m);
        let h = |w: f64| {
            let x = s * w.powf(-m);
            if !x.is_finite() {
                return 0.0;
            }
            (g(x) * x) * (m / w)
        };
        integrate_adaptive(h, w_lo, 1.0, cfg.rel_tol * 0.1, 1e-300, cfg.max_panels)
    };
    let (rough, _, _) = run(s * 1e6);
    let target = 0.1 * cfg.rel_tol * rough.abs().max(f64::MIN_POSITIVE);
    let lambda_floor = if asym.lambda > 0.0 {
        2.0 * asym.lambda / (-asym.sigma - 1.0) + 1.0
    } else {
        1.0
    };
    let mut ln_t = (s.ln() + 6.0 * std::f64::consts::LN_10).max(lambda_floor);
    const LN_MAX: f64 = 690.0;
    loop {
        let bound = 2.0 * tail_integral_bound(&asym, ln_t);
        // the factor 2 assumes the full integrand is within twice its leading term
        let x = ln_t.exp();
        let lead = asym.coeff * x.powf(asym.sigma) * ln_t.powf(asym.lambda);
        let ratio_ok = [1.0, 10.0, 100.0].iter().all(|k| {
            g(x * k) <= 2.0 * lead * k.powf(asym.sigma) * ((ln_t + k.ln()) / ln_t).powf(asym.lambda) + f64::MIN_POSITIVE
        });
        if (bound <= target && ratio_ok) || ln_t >= LN_MAX {
            break;
        }
        ln_t = (ln_t + 1.0).min(LN_MAX);
    }
    let cutoff = ln_t.exp();
    let (value, err, n) = run(cutoff);
    QuadratureResult {
        value,
        abs_error_estimate: err,
        subdivisions: n,
        truncation: Some(Truncation {
            used_cutoff: cutoff,
            tail_bound: 2.0 * tail_integral_bound(&asym, ln_t),
        }),
    }
}

fn integrate_piece<C: Coeff>(
    piece: &Piece<C>,
    lo: f64,
    hi: f64,
    how: &Integrand,
    cfg: &QuadConfig,
) -> Result<QuadratureResult> {
    if piece.is_zero() || lo >= hi {
        return Ok(QuadratureResult::zero());
    }
    check_convergence(piece, how, lo == 0.0, hi.is_infinite())?;
    let g = |x: f64| how.apply(piece.eval(x));
    let mut cuts = vec![lo];
    if matches!(how, Integrand::AbsPow(..)) {
        cuts.extend(sign_changes(piece, lo, hi));
    }
    if cuts.len() == 1 && lo == 0.0 && hi.is_infinite() {
        cuts.push(1.0);
    }
    cuts.push(hi);
    let mut total = QuadratureResult::zero();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let part = if a == 0.0 {
            integrate_from_zero(&g, b, asymptote(piece, Endpoint::ZeroPlus, how).map(|x| x.0), cfg)
        } else if b.is_infinite() {
            let asym = asymptote(piece, Endpoint::Infinity, how)
                .map(|x| x.0)
                .expect("nonzero piece has a leading term");
            integrate_to_infinity(&g, a, asym, cfg)
        } else {
            let (value, err, n) = integrate_adaptive(g, a, b, cfg.rel_tol * 0.1, 1e-300, cfg.max_panels);
            QuadratureResult {
                value,
                abs_error_estimate: err,
                subdivisions: n,
                truncation: None,
            }
        };
        total.absorb(part);
    }
    Ok(total)
}

fn integrate_fn<C: Coeff>(
    f: &PiecewiseFn<C>,
    lo: &Rational,
    hi: &Extended,
    how: &Integrand,
    cfg: &QuadConfig,
) -> Result<QuadratureResult> {
    let mut total = QuadratureResult::zero();
    for piece in f.pieces() {
        let a = std::cmp::max(&piece.lo, lo);
        let b = std::cmp::min(&piece.hi, hi);
        if Extended::Finite(a.clone()) >= *b {
            continue;
        }
        let part = integrate_piece(piece, rational_to_f64(a), b.to_f64(), how, cfg)?;
        total.absorb(part);
    }
    Ok(total)
}

/// `int_lo^hi f(x) dx` for an integral whose convergence follows from the
/// exponent conditions (checked here; divergent input is an error).
pub fn quad_integral<C: Coeff>(
    f: &PiecewiseFn<C>,
    lo: &Rational,
    hi: &Extended,
    cfg: &QuadConfig,
) -> Result<QuadratureResult> {
    integrate_fn(f, lo, hi, &Integrand::Signed, cfg)
}

/// `int_lo^hi |f(x)|^p dx` without the p-th root.
pub fn quad_abs_pow_integral<C: Coeff>(
    f: &PiecewiseFn<C>,
    p: &Rational,
    lo: &Rational,
    hi: &Extended,
    cfg: &QuadConfig,
) -> Result<QuadratureResult> {
    integrate_fn(f, lo, hi, &Integrand::abs_pow(p), cfg)
}

/// `||f||_p` for finite `p`, by quadrature of `|f|^p` over the sign-resolved
/// partition. `value` is the norm; the error estimates are propagated
/// through the p-th root.
pub fn quad_lp_norm<C: Coeff>(f: &PiecewiseFn<C>, p: &Extended, cfg: &QuadConfig) -> Result<QuadratureResult> {
    let Extended::Finite(pq) = p else {
        return Err(Error::InvalidParameter("quadrature L_p norm needs finite p".into()));
    };
    let raw = quad_abs_pow_integral(f, pq, &Rational::zero(), &Extended::Infinity, cfg)?;
    let pf = rational_to_f64(pq);
    if raw.value.is_zero() {
        return Ok(raw);
    }
    let value = raw.value.powf(1.0 / pf);
    let scale = value / (pf * raw.value);
    Ok(QuadratureResult {
        value,
        abs_error_estimate: raw.abs_error_estimate * scale,
        subdivisions: raw.subdivisions,
        truncation: raw.truncation.map(|t| Truncation {
            used_cutoff: t.used_cutoff,
            tail_bound: t.tail_bound * scale,
        }),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleReport {
    pub samples: usize,
    pub max_rel_deviation: f64,
    pub worst_x: f64,
    pub within_tol: bool,
}

/// Compares `f` and `g` at `n` log-uniform points in `(1e-6, 1e6)` that are
/// not within `1e-9` (relative) of a breakpoint of either function.
pub fn sample_compare<C: Coeff, D: Coeff>(
    f: &PiecewiseFn<C>,
    g: &PiecewiseFn<D>,
    n: usize,
    rel_tol: f64,
) -> SampleReport {
    let bps: Vec<f64> = f
        .breakpoints()
        .iter()
        .chain(g.breakpoints().iter())
        .map(rational_to_f64)
        .collect();
    let (lo, hi) = (1e-6f64.ln(), 1e6f64.ln());
    let mut worst = 0.0f64;
    let mut worst_x = f64::NAN;
    let mut used = 0;
    for i in 0..n {
        // golden-ratio offsets keep the points off simple rationals
        let s = ((i as f64 + 0.5) / n as f64 + 0.381_966_011_250_105_1 * 1e-3).min(1.0);
        let x = (lo + s * (hi - lo)).exp();
        if bps.iter().any(|b| (x - b).abs() <= 1e-9 * b.abs()) {
            continue;
        }
        used += 1;
        let (a, b) = (f.evaluate(x), g.evaluate(x));
        let scale = a.abs().max(b.abs());
        let dev = if scale == 0.0 { 0.0 } else { (a - b).abs() / scale };
        if dev > worst || worst_x.is_nan() {
            worst = worst.max(dev);
            worst_x = x;
        }
    }
    SampleReport {
        samples: used,
        max_rel_deviation: worst,
        worst_x,
        within_tol: worst <= rel_tol,
    }
}
