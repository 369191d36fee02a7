//! Numerical machinery for the bound evaluators: adaptive Gauss–Kronrod
//! integration, Erlang-kernel integrals in incomplete-gamma form, and
//! truncated Poisson series.
//!
//! The Erlang integrals
//!
//! ```text
//! lower(k, c, a) = ∫_0^a  z^(k-1)/(k-1)! e^(-c z) dz
//! upper(k, c, a) = ∫_a^∞  z^(k-1)/(k-1)! e^(-c z) dz
//! ```
//!
//! are the inner z-integrals of all three bound theorems. For `c > 0` they are
//! `c^-k P(k, c a)` and `c^-k Q(k, c a)`. Everything is carried in log space
//! because the Poisson index reaches several hundred at large radii.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DiscPpp;
use crate::special::{gamma_p, gamma_q, ln_factorial, ln_gamma_pq, log_add_exp};

/// Tolerances shared by every analytic evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Poisson mass that a truncated series must retain.
    pub series_mass: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            max_subdivisions: 200,
            series_mass: 1.0 - 1e-8,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Domain("quadrature tolerances must be positive".into()));
        }
        if !(self.series_mass > 0.0 && self.series_mass < 1.0) {
            return Err(Error::Domain("series_mass must lie in (0, 1)".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Domain("max_subdivisions must be >= 1".into()));
        }
        Ok(())
    }
}

/// One instance of the Erlang kernel integral. `a` may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErlangIntegral {
    pub k: u32,
    pub c: f64,
    pub a: f64,
}

impl ErlangIntegral {
    pub fn new(k: u32, c: f64, a: f64) -> Self {
        ErlangIntegral { k, c, a }
    }

    /// Integral over `[0, a]`.
    pub fn lower(&self) -> Result<f64> {
        erlang_lower(self.k, self.c, self.a)
    }

    /// Integral over `[a, ∞)`.
    pub fn upper(&self) -> Result<f64> {
        erlang_upper(self.k, self.c, self.a)
    }

    /// Integrand `z^(k-1)/(k-1)! e^(-c z)`.
    pub fn kernel(&self, z: f64) -> f64 {
        ln_kernel(self.k, self.c, z).exp()
    }
}

fn ln_kernel(k: u32, c: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if k == 1 { 0.0 } else { f64::NEG_INFINITY };
    }
    (k as f64 - 1.0) * z.ln() - ln_factorial(k as u64 - 1) - c * z
}

fn check_args(k: u32, a: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("Erlang shape k must be >= 1".into()));
    }
    if a.is_nan() || a < 0.0 {
        return Err(Error::Domain(format!("Erlang limit must be >= 0, got {a}")));
    }
    Ok(())
}

/// `ln ∫_0^a z^(k-1)/(k-1)! e^(-c z) dz`.
pub fn ln_erlang_lower(k: u32, c: f64, a: f64) -> Result<f64> {
    check_args(k, a)?;
    if a == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let kf = k as f64;
    if c > 0.0 {
        let (ln_p, _) = ln_gamma_pq(kf, c * a);
        Ok(ln_p - kf * c.ln())
    } else if c == 0.0 {
        if a.is_infinite() {
            return Err(Error::DivergentIntegral(format!("lower(k={k}, c=0, a=inf)")));
        }
        Ok(kf * a.ln() - ln_factorial(k as u64))
    } else {
        if a.is_infinite() {
            return Err(Error::DivergentIntegral(format!("lower(k={k}, c={c}, a=inf)")));
        }
        // Integrand is increasing on [0, a]; its value at `a` bounds the result.
        let ln_peak = ln_kernel(k, c, a) + a.ln();
        if ln_peak > 700.0 {
            return Err(Error::Overflow(format!(
                "lower(k={k}, c={c}, a={a}) exceeds f64 range"
            )));
        }
        let res = integrate_adaptive(
            |z| ln_kernel(k, c, z).exp(),
            0.0,
            a,
            &QuadratureSpec {
                rel_tol: 1e-12,
                abs_tol: 1e-300,
                max_subdivisions: 2000,
                ..QuadratureSpec::default()
            },
        );
        Ok(res.value.ln())
    }
}

/// `∫_0^a z^(k-1)/(k-1)! e^(-c z) dz`.
pub fn erlang_lower(k: u32, c: f64, a: f64) -> Result<f64> {
    let v = ln_erlang_lower(k, c, a)?.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!("lower(k={k}, c={c}, a={a})")))
    }
}

/// `ln ∫_a^∞ z^(k-1)/(k-1)! e^(-c z) dz`; requires `c > 0`.
pub fn ln_erlang_upper(k: u32, c: f64, a: f64) -> Result<f64> {
    check_args(k, a)?;
    if !(c > 0.0) {
        return Err(Error::DivergentIntegral(format!(
            "upper tail needs a positive rate, got c = {c}"
        )));
    }
    let kf = k as f64;
    let (_, ln_q) = ln_gamma_pq(kf, c * a);
    Ok(ln_q - kf * c.ln())
}

/// `∫_a^∞ z^(k-1)/(k-1)! e^(-c z) dz`; requires `c > 0`.
pub fn erlang_upper(k: u32, c: f64, a: f64) -> Result<f64> {
    let v = ln_erlang_upper(k, c, a)?.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!("upper(k={k}, c={c}, a={a})")))
    }
}

// ---------------------------------------------------------------------------
// Adaptive Gauss–Kronrod (10/21)
// ---------------------------------------------------------------------------

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

/// Gauss weights for the odd Kronrod nodes `XGK[1], XGK[3], ..., XGK[9]`.
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut fv = [0.0; 21];
    fv[10] = f(center);
    for j in 0..10 {
        let dx = half * XGK[j];
        fv[j] = f(center - dx);
        fv[20 - j] = f(center + dx);
    }
    let mut res_k = WGK[10] * fv[10];
    let mut res_g = 0.0;
    let mut res_abs = WGK[10] * fv[10].abs();
    for j in 0..10 {
        let pair = fv[j] + fv[20 - j];
        res_k += WGK[j] * pair;
        res_abs += WGK[j] * (fv[j].abs() + fv[20 - j].abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * pair;
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fv[10] - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[20 - j] - mean).abs());
    }
    res_asc *= half;
    res_abs *= half;
    let value = res_k * half;
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment { lo, hi, value, error }
}

/// Globally adaptive 21-point Gauss–Kronrod integration of `f` over `[lo, hi]`.
///
/// Stops once the summed error estimate is below
/// `max(abs_tol, rel_tol * |value|)`. When `max_subdivisions` is exhausted the
/// best estimate is returned with `converged = false`.
pub fn integrate_adaptive<F>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> QuadResult
where
    F: Fn(f64) -> f64,
{
    if lo == hi {
        return QuadResult {
            value: 0.0,
            abs_error: 0.0,
            converged: true,
            evaluations: 0,
        };
    }
    let first = kronrod21(&f, lo, hi);
    let mut heap = BinaryHeap::new();
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    let mut evaluations = 21;
    let mut converged = false;
    loop {
        if error <= spec.abs_tol.max(spec.rel_tol * value.abs()) {
            converged = true;
            break;
        }
        if heap.len() >= spec.max_subdivisions {
            break;
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Interval collapsed to machine resolution.
            heap.push(worst);
            break;
        }
        let left = kronrod21(&f, worst.lo, mid);
        let right = kronrod21(&f, mid, worst.hi);
        evaluations += 42;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    QuadResult {
        value,
        abs_error: error,
        converged,
        evaluations,
    }
}

// ---------------------------------------------------------------------------
// Poisson series
// ---------------------------------------------------------------------------

/// Truncation window `k = k_min..=k_max` of a Poisson series over `k >= 2`,
/// with cached log-PMF. Each tail holds at most half of `1 - series_mass`.
#[derive(Debug, Clone)]
pub struct PoissonWindow {
    pub mean: f64,
    pub k_min: u64,
    pub k_max: u64,
    /// Mass of `k >= 2` outside the window.
    pub truncated_mass: f64,
    /// Mass beyond `k_max`.
    pub upper_tail_mass: f64,
    ln_pmf: Vec<f64>,
    ln_fact: Vec<f64>,
}

impl PoissonWindow {
    pub fn new(mean: f64, series_mass: f64) -> Self {
        let tail_budget = 0.5 * (1.0 - series_mass);
        // P[K < n] = Q(n, mean) with Q the regularized upper gamma.
        let mut k_min = 2u64;
        while gamma_q(k_min as f64 + 1.0, mean) <= tail_budget {
            k_min += 1;
        }
        // P[K > n] = P(n + 1, mean) with P the regularized lower gamma.
        let mut n = (mean.floor() as u64).max(k_min);
        while gamma_p(n as f64 + 1.0, mean) > tail_budget {
            n += 1 + (mean.sqrt() as u64) / 8;
        }
        while n > k_min && gamma_p(n as f64, mean) <= tail_budget {
            n -= 1;
        }
        let k_max = n;
        let ln_fact: Vec<f64> = (0..=k_max + 1).map(ln_factorial).collect();
        let ln_mean = mean.ln();
        let ln_pmf = (0..=k_max)
            .map(|k| k as f64 * ln_mean - mean - ln_fact[k as usize])
            .collect();
        let upper_tail_mass = gamma_p(k_max as f64 + 1.0, mean);
        let lower_tail_mass = (gamma_q(k_min as f64, mean) - gamma_q(2.0, mean)).max(0.0);
        PoissonWindow {
            mean,
            k_min,
            k_max,
            truncated_mass: lower_tail_mass + upper_tail_mass,
            upper_tail_mass,
            ln_pmf,
            ln_fact,
        }
    }

    pub fn ln_pmf(&self, k: u64) -> f64 {
        self.ln_pmf[k as usize]
    }

    /// `ln lower(k, c, a)` at index `k` for `k in k_min..=k_max`; other entries
    /// are `-inf`.
    ///
    /// For `c > 0` this runs the stable downward recurrence
    /// `P(k, x) = P(k + 1, x) + e^-x x^k / k!` from one direct evaluation.
    pub fn ln_erlang_lower_seq(&self, c: f64, a: f64, out: &mut Vec<f64>) -> Result<()> {
        let (k_min, k_max) = (self.k_min as usize, self.k_max as usize);
        out.clear();
        out.resize(k_max + 1, f64::NEG_INFINITY);
        if a == 0.0 {
            return Ok(());
        }
        if c == 0.0 {
            let ln_a = a.ln();
            for k in k_min..=k_max {
                out[k] = k as f64 * ln_a - self.ln_fact[k];
            }
        } else if c > 0.0 {
            let ln_c = c.ln();
            if a.is_infinite() {
                for k in k_min..=k_max {
                    out[k] = -(k as f64) * ln_c;
                }
                return Ok(());
            }
            let x = c * a;
            let ln_x = x.ln();
            let (mut ln_p, _) = ln_gamma_pq(k_max as f64, x);
            out[k_max] = ln_p - k_max as f64 * ln_c;
            for k in (k_min..k_max).rev() {
                let ln_term = k as f64 * ln_x - x - self.ln_fact[k];
                ln_p = log_add_exp(ln_p, ln_term);
                out[k] = ln_p - k as f64 * ln_c;
            }
        } else {
            for (k, slot) in out.iter_mut().enumerate().skip(k_min) {
                *slot = ln_erlang_lower(k as u32, c, a)?;
            }
        }
        Ok(())
    }

    /// `ln upper(k, c, a)` for `k in k_min..=k_max`, via the upward recurrence
    /// `Q(k + 1, x) = Q(k, x) + e^-x x^k / k!`.
    pub fn ln_erlang_upper_seq(&self, c: f64, a: f64, out: &mut Vec<f64>) -> Result<()> {
        if !(c > 0.0) {
            return Err(Error::DivergentIntegral(format!(
                "upper tail needs a positive rate, got c = {c}"
            )));
        }
        let (k_min, k_max) = (self.k_min as usize, self.k_max as usize);
        out.clear();
        out.resize(k_max + 1, f64::NEG_INFINITY);
        let ln_c = c.ln();
        if a.is_infinite() {
            return Ok(());
        }
        let x = c * a;
        if x == 0.0 {
            for k in k_min..=k_max {
                out[k] = -(k as f64) * ln_c;
            }
            return Ok(());
        }
        let ln_x = x.ln();
        let (_, mut ln_q) = ln_gamma_pq(k_min as f64, x);
        out[k_min] = ln_q - k_min as f64 * ln_c;
        for k in k_min..k_max {
            let ln_term = k as f64 * ln_x - x - self.ln_fact[k];
            ln_q = log_add_exp(ln_q, ln_term);
            out[k + 1] = ln_q - (k + 1) as f64 * ln_c;
        }
        Ok(())
    }
}

/// Scratch buffers for [`PoissonWindow::erlang_mix`].
#[derive(Debug, Default)]
pub struct MixScratch {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Parameters of one two-term bound integrand at fixed distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErlangMix {
    /// Rate and limit of the `[0, a]` term.
    pub lower_c: f64,
    pub lower_a: f64,
    /// Log of the multiplier on the `[0, a]` term.
    pub lower_ln_scale: f64,
    /// Rate and limit of the `[a, ∞)` term.
    pub upper_c: f64,
    pub upper_a: f64,
}

impl PoissonWindow {
    /// `sum_{k=k_min}^{k_max} pmf(k) [ e^s lower(k, c_l, a_l) + upper(k, c_u, a_u) ]`.
    pub fn erlang_mix(&self, mix: &ErlangMix, scratch: &mut MixScratch) -> Result<f64> {
        self.ln_erlang_lower_seq(mix.lower_c, mix.lower_a, &mut scratch.lower)?;
        self.ln_erlang_upper_seq(mix.upper_c, mix.upper_a, &mut scratch.upper)?;
        let mut sum = 0.0;
        for k in self.k_min as usize..=self.k_max as usize {
            let lp = self.ln_pmf[k];
            sum += (lp + mix.lower_ln_scale + scratch.lower[k]).exp() + (lp + scratch.upper[k]).exp();
        }
        Ok(sum)
    }
}

/// A truncated series value plus what was left out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub k_max: u64,
    pub truncated_mass: f64,
}

/// `sum_{k=2}^{k_max} term(k)` with `k_max` the smallest index whose Poisson
/// CDF reaches `spec.series_mass`.
pub fn poisson_series<F>(term: F, ppp: &DiscPpp, spec: &QuadratureSpec) -> SeriesSum
where
    F: Fn(u64) -> f64,
{
    let window = PoissonWindow::new(ppp.mean_count, spec.series_mass);
    SeriesSum {
        value: (2..=window.k_max).map(term).sum(),
        k_max: window.k_max,
        truncated_mass: window.upper_tail_mass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tight() -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: 1e-13,
            abs_tol: 1e-300,
            max_subdivisions: 5000,
            ..QuadratureSpec::default()
        }
    }

    #[test]
    fn erlang_examples() {
        assert_relative_eq!(erlang_lower(1, 1.0, f64::INFINITY).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(erlang_lower(1, 1.0, 1.0).unwrap(), 1.0 - (-1.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(erlang_lower(2, 0.0, 2.0).unwrap(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(erlang_upper(1, 1.0, 0.0).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn erlang_upper_rejects_non_positive_rate() {
        assert!(matches!(erlang_upper(3, 0.0, 1.0), Err(Error::DivergentIntegral(_))));
        assert!(matches!(erlang_upper(3, -0.5, 1.0), Err(Error::DivergentIntegral(_))));
        assert!(matches!(erlang_lower(0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(erlang_lower(2, 1.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn erlang_negative_rate_and_overflow_guard() {
        // ∫_0^1 z e^{z} dz = 1.
        assert_relative_eq!(erlang_lower(2, -1.0, 1.0).unwrap(), 1.0, max_relative = 1e-11);
        assert!(matches!(erlang_lower(2, -5.0, 1e4), Err(Error::Overflow(_))));
    }

    #[test]
    fn erlang_matches_quadrature() {
        let e = ErlangIntegral::new(3, 2.0, 0.5);
        let q = integrate_adaptive(|z| e.kernel(z), 0.0, 0.5, &tight());
        assert_relative_eq!(e.lower().unwrap(), q.value, max_relative = 1e-8);
        // Upper tail through a finite cutoff far in the tail.
        let q = integrate_adaptive(|z| e.kernel(z), 0.5, 60.0, &tight());
        assert_relative_eq!(e.upper().unwrap(), q.value, max_relative = 1e-8);
    }

    #[test]
    fn adaptive_examples() {
        let spec = QuadratureSpec::default();
        let r = integrate_adaptive(|_| 1.0, 0.0, 1.0, &spec);
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-15);
        let r = integrate_adaptive(f64::sin, 0.0, std::f64::consts::PI, &spec);
        assert!((r.value - 2.0).abs() <= spec.rel_tol * 2.0);
        assert!(r.converged);
    }

    #[test]
    fn adaptive_error_estimate_bounds_true_error() {
        let spec = QuadratureSpec { rel_tol: 1e-10, ..QuadratureSpec::default() };
        let cases: Vec<(Box<dyn Fn(f64) -> f64>, f64, f64, f64)> = vec![
            (Box::new(|x: f64| x.exp()), 0.0, 3.0, 3f64.exp() - 1.0),
            (Box::new(|x: f64| 1.0 / (1.0 + x * x)), -5.0, 5.0, 2.0 * 5f64.atan()),
            (Box::new(|x: f64| x.sqrt()), 0.0, 1.0, 2.0 / 3.0),
            (Box::new(|x: f64| (-x * x).exp()), 0.0, 10.0, 0.886_226_925_452_758),
            (Box::new(|x: f64| x.ln()), 1e-12, 1.0, -1.0 + 1e-12 - 1e-12 * 1e-12f64.ln()),
            (Box::new(|x: f64| (50.0 * x).cos()), 0.0, 1.0, 50f64.sin() / 50.0),
        ];
        for (f, lo, hi, exact) in cases {
            let r = integrate_adaptive(f, lo, hi, &spec);
            assert!(
                (r.value - exact).abs() <= r.abs_error.max(1e-15),
                "{} vs {} (est {})",
                r.value,
                exact,
                r.abs_error
            );
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let spec = QuadratureSpec { max_subdivisions: 3, rel_tol: 1e-14, ..QuadratureSpec::default() };
        let r = integrate_adaptive(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &spec);
        assert!(!r.converged);
        assert!(r.value.is_finite());
    }

    #[test]
    fn sequences_match_direct_evaluation() {
        for &mean in &[3.0, 33.93, 377.0] {
            let w = PoissonWindow::new(mean, 1.0 - 1e-8);
            let mut buf = Vec::new();
            for &(c, a) in &[(0.3, 2.0), (1.0011, 40.0), (2.0, 500.0), (1e-6, 10.0), (0.0, 3.0), (5.0, 1e-3)] {
                w.ln_erlang_lower_seq(c, a, &mut buf).unwrap();
                for k in [w.k_min, w.k_min + 1, (w.k_min + w.k_max) / 2, w.k_max - 1, w.k_max] {
                    let direct = ln_erlang_lower(k as u32, c, a).unwrap();
                    assert_relative_eq!(buf[k as usize], direct, max_relative = 1e-11, epsilon = 1e-11);
                }
                if c > 0.0 {
                    w.ln_erlang_upper_seq(c, a, &mut buf).unwrap();
                    for k in [w.k_min, w.k_min + 1, (w.k_min + w.k_max) / 2, w.k_max - 1, w.k_max] {
                        let direct = ln_erlang_upper(k as u32, c, a).unwrap();
                        assert_relative_eq!(buf[k as usize], direct, max_relative = 1e-11, epsilon = 1e-11);
                    }
                }
            }
        }
    }

    #[test]
    fn poisson_series_examples() {
        let spec = QuadratureSpec::default();
        let ppp = DiscPpp::new(0.003, 60.0).unwrap();
        let m = ppp.mean_count;
        let s = poisson_series(|k| ppp.pmf_count(k as i64).unwrap(), &ppp, &spec);
        assert!((s.value - ppp.prob_at_least_two()).abs() < 1e-8);
        assert!(s.k_max < 120, "k_max = {}", s.k_max);
        assert!(s.truncated_mass <= 1e-8);
        let s = poisson_series(|k| k as f64 * ppp.pmf_count(k as i64).unwrap(), &ppp, &spec);
        // E[K] minus the k = 1 contribution (k = 0 contributes nothing).
        let expected = m - m * (-m).exp();
        assert!((s.value - expected).abs() < 1e-6 * m, "{} vs {}", s.value, expected);
    }

    #[test]
    fn window_is_minimal() {
        for &mean in &[0.5, 3.77, 33.93, 377.0] {
            let w = PoissonWindow::new(mean, 1.0 - 1e-8);
            assert!(w.truncated_mass <= 1e-8);
            assert!(w.k_min <= w.k_max);
            if w.k_max > w.k_min {
                assert!(gamma_p(w.k_max as f64, mean) > 0.5e-8);
            }
            if w.k_min > 2 {
                assert!(gamma_q(w.k_min as f64 + 1.0, mean) > 0.5e-8);
            }
        }
    }
}
