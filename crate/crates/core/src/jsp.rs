//! Joint success probability: Monte Carlo estimate and the analytic lower and
//! upper bounds for each harvester regime.

use std::cell::{Cell, RefCell};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{stream_rng, DiscPpp};
use crate::model::{energy_from_power, sir_threshold, HarvesterModel, NetworkConfig};
use crate::quadrature::{integrate_adaptive, ErlangMix, MixScratch, PoissonWindow, QuadratureSpec};

/// Trials per independent RNG stream. Fixed so results do not depend on the
/// number of worker threads.
pub const MC_CHUNK: u64 = 8192;

const Z_95: f64 = 1.959_963_984_540_054;

/// Trials used by [`select_regime`] to estimate the typical received power.
pub const REGIME_TRIALS: u64 = 4001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Received power below the activation threshold.
    CaseA,
    /// Between activation and saturation.
    CaseB,
    /// Above saturation.
    CaseC,
    LinearModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    MonteCarlo {
        trials: u64,
        successes: u64,
        /// Largest distance from the point estimate to a Wilson 95% limit.
        ci_halfwidth: f64,
        ci_low: f64,
        ci_high: f64,
    },
    AnalyticLower,
    AnalyticUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JspEstimate {
    pub value: f64,
    pub method: Method,
    pub regime: Regime,
    /// Absolute error bound of an analytic value; 0 for Monte Carlo.
    pub quadrature_error: f64,
    /// False when an adaptive integration ran out of subdivisions.
    pub converged: bool,
}

impl JspEstimate {
    /// CI halfwidth for Monte Carlo, quadrature error for bounds.
    pub fn uncertainty(&self) -> f64 {
        match self.method {
            Method::MonteCarlo { ci_halfwidth, .. } => ci_halfwidth,
            _ => self.quadrature_error,
        }
    }
}

/// Wilson score interval `(low, high)` at 95%.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

fn count_successes(cfg: &NetworkConfig, ppp: &DiscPpp, beta: f64, seed: u64, chunk: u64, n: u64) -> u64 {
    let mut rng = stream_rng(seed, chunk);
    let mut d = Vec::new();
    let mut g = Vec::new();
    let mut hits = 0;
    for _ in 0..n {
        ppp.sample_into(&mut rng, &mut d, &mut g);
        let serving = g[0] * d[0].powf(-cfg.alpha);
        let interference: f64 = d[1..]
            .iter()
            .zip(&g[1..])
            .map(|(&dk, &gk)| gk * dk.powf(-cfg.alpha))
            .sum();
        let energy = energy_from_power(cfg.p_t * (serving + interference), cfg);
        if energy > cfg.e_th && serving > beta * interference {
            hits += 1;
        }
    }
    hits
}

/// Fraction of conditioned realizations (`K >= 2`) where harvested energy
/// exceeds `e_th` and SIR exceeds `beta`.
///
/// Trials are split into chunks of [`MC_CHUNK`]; chunk `i` uses stream `i` of
/// `seed`, so the result is identical for any thread count and two configs
/// that differ only in power or thresholds see the same realizations.
pub fn jsp_monte_carlo(cfg: &NetworkConfig, trials: u64, seed: u64) -> Result<JspEstimate> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::Domain("trials must be >= 1".into()));
    }
    let ppp = DiscPpp::from_config(cfg)?;
    let beta = sir_threshold(cfg)?;
    let chunks = trials.div_ceil(MC_CHUNK);
    let successes: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = MC_CHUNK.min(trials - c * MC_CHUNK);
            count_successes(cfg, &ppp, beta, seed, c, n)
        })
        .sum();
    let value = successes as f64 / trials as f64;
    let (ci_low, ci_high) = wilson_interval(successes, trials);
    Ok(JspEstimate {
        value,
        method: Method::MonteCarlo {
            trials,
            successes,
            ci_halfwidth: (value - ci_low).max(ci_high - value),
            ci_low,
            ci_high,
        },
        regime: select_regime(cfg, seed)?,
        quadrature_error: 0.0,
        converged: true,
    })
}

/// Harvester regime from the median total received power of a short,
/// seeded Monte Carlo run.
pub fn select_regime(cfg: &NetworkConfig, seed: u64) -> Result<Regime> {
    let (pr_min, pr_max) = match cfg.eh_model {
        HarvesterModel::Linear => return Ok(Regime::LinearModel),
        HarvesterModel::NonLinear { pr_min, pr_max } => (pr_min, pr_max),
    };
    let ppp = DiscPpp::from_config(cfg)?;
    let mut rng = stream_rng(seed, u64::MAX);
    let mut powers: Vec<f64> = (0..REGIME_TRIALS)
        .map(|_| ppp.sample_realization(&mut rng).received_power(cfg))
        .collect();
    powers.sort_unstable_by(f64::total_cmp);
    let median = powers[powers.len() / 2];
    Ok(if median < pr_min {
        Regime::CaseA
    } else if median > pr_max {
        Regime::CaseC
    } else {
        Regime::CaseB
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Construction {
    /// Interferers at the farthest distance in energy, SIR with the nearest.
    Lower,
    /// Interferers at the nearest distance in energy, SIR with the farthest.
    Upper,
    /// Saturated-regime lower bound; depends on the nearest distance only.
    Saturated,
}

/// The `(d1, dK)` integrand of a bound, without distance densities.
#[derive(Debug, Clone)]
pub struct BoundIntegrand {
    construction: Construction,
    /// `eta * xi * tau * p_t`.
    scale: f64,
    e_th: f64,
    alpha: f64,
    beta: f64,
    window: PoissonWindow,
}

impl BoundIntegrand {
    fn new(cfg: &NetworkConfig, construction: Construction, series_mass: f64) -> Result<Self> {
        let ppp = DiscPpp::from_config(cfg)?;
        Ok(BoundIntegrand {
            construction,
            scale: cfg.harvest_scale(),
            e_th: cfg.e_th,
            alpha: cfg.alpha,
            beta: sir_threshold(cfg)?,
            window: PoissonWindow::new(ppp.mean_count, series_mass),
        })
    }

    /// Lower-bound integrand for the linear / non-saturated regimes.
    pub fn lower(cfg: &NetworkConfig, series_mass: f64) -> Result<Self> {
        Self::new(cfg, Construction::Lower, series_mass)
    }

    pub fn upper(cfg: &NetworkConfig, series_mass: f64) -> Result<Self> {
        Self::new(cfg, Construction::Upper, series_mass)
    }

    /// Saturated-regime lower-bound integrand; ignores `dk`.
    pub fn saturated(cfg: &NetworkConfig, series_mass: f64) -> Result<Self> {
        Self::new(cfg, Construction::Saturated, series_mass)
    }

    pub fn window(&self) -> &PoissonWindow {
        &self.window
    }

    fn mix(&self, d1: f64, dk: f64) -> ErlangMix {
        let a = self.alpha;
        let e_prime = self.e_th * d1.powf(a) / self.scale;
        let ratio = (d1 / dk).powf(a);
        match self.construction {
            Construction::Lower => {
                let z = self.e_th / (self.scale * (self.beta * d1.powf(-a) + dk.powf(-a)));
                ErlangMix {
                    lower_c: (1.0 - ratio).max(0.0),
                    lower_a: z,
                    lower_ln_scale: -e_prime,
                    upper_c: self.beta + 1.0,
                    upper_a: z,
                }
            }
            Construction::Upper => {
                let z = self.e_th / (self.scale * (self.beta * dk.powf(-a) + d1.powf(-a)));
                ErlangMix {
                    lower_c: 0.0,
                    lower_a: z,
                    lower_ln_scale: -e_prime,
                    upper_c: self.beta * ratio + 1.0,
                    upper_a: z,
                }
            }
            Construction::Saturated => {
                let z = e_prime / (1.0 + self.beta);
                ErlangMix {
                    lower_c: 0.0,
                    lower_a: z,
                    lower_ln_scale: -e_prime,
                    upper_c: self.beta + 1.0,
                    upper_a: z,
                }
            }
        }
    }

    /// `sum_{k=2}^{k_max} f_K(k) [first term + second term]` at `(d1, dk)`.
    pub fn eval(&self, d1: f64, dk: f64) -> Result<f64> {
        self.eval_with(d1, dk, &mut MixScratch::default())
    }

    pub fn eval_with(&self, d1: f64, dk: f64, scratch: &mut MixScratch) -> Result<f64> {
        if !(d1 > 0.0) || !(dk > 0.0) {
            return Ok(0.0);
        }
        self.window.erlang_mix(&self.mix(d1, dk), scratch)
    }
}

struct Integration {
    value: f64,
    error: f64,
    converged: bool,
}

fn integrate_bound(cfg: &NetworkConfig, integrand: &BoundIntegrand, spec: &QuadratureSpec) -> Result<Integration> {
    spec.validate()?;
    let ppp = DiscPpp::from_config(cfg)?;
    let r = cfg.radius_r;
    let scratch = RefCell::new(MixScratch::default());
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner_err = Cell::new(0.0f64);
    let inner_ok = Cell::new(true);
    let eval = |d1: f64, dk: f64| -> f64 {
        match integrand.eval_with(d1, dk, &mut scratch.borrow_mut()) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    // Both distance densities are negligible over most of [0, R]; integrate
    // only where each keeps all but `cut_mass` of its weight. Every bracket is
    // at most 1, so the dropped pieces are bounded by the dropped mass.
    let cut_mass = 1e-3 * spec.abs_tol;
    let lp = cfg.lambda * std::f64::consts::PI;
    let floor = cut_mass * ppp.prob_at_least_two() + (-ppp.mean_count).exp();
    let (d1_hi, dk_lo) = if floor < 1.0 {
        let span = -floor.ln() / lp;
        (span.sqrt().min(r), (r * r - span).max(0.0).sqrt())
    } else {
        (r, 0.0)
    };
    let inner_spec = QuadratureSpec {
        rel_tol: spec.rel_tol * 0.1,
        abs_tol: spec.abs_tol * 0.1 / r,
        ..*spec
    };
    let outer = integrate_adaptive(
        |d1| {
            if d1 <= 0.0 {
                return 0.0;
            }
            let f1 = ppp.pdf_nearest_unchecked(d1);
            if integrand.construction == Construction::Saturated {
                return f1 * eval(d1, d1);
            }
            let lo = d1.max(dk_lo);
            let inner = integrate_adaptive(|dk| ppp.pdf_farthest_unchecked(dk) * eval(d1, dk), lo, r, &inner_spec);
            inner_err.set(inner_err.get().max(f1 * inner.abs_error));
            if !inner.converged {
                inner_ok.set(false);
            }
            f1 * inner.value
        },
        0.0,
        d1_hi,
        spec,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let mass = ppp.lemma_mass();
    let density_mass = if integrand.construction == Construction::Saturated {
        mass
    } else {
        mass * mass
    };
    let tail = integrand.window.truncated_mass * 2.0 * density_mass + 2.0 * cut_mass * mass;
    Ok(Integration {
        value: outer.value,
        error: outer.abs_error + r * inner_err.get() + tail,
        converged: outer.converged && inner_ok.get(),
    })
}

fn analytic(value: Integration, method: Method, regime: Regime) -> JspEstimate {
    JspEstimate {
        value: value.value.clamp(0.0, 1.0),
        method,
        regime,
        quadrature_error: value.error,
        converged: value.converged,
    }
}

fn zero(method: Method, regime: Regime) -> JspEstimate {
    JspEstimate {
        value: 0.0,
        method,
        regime,
        quadrature_error: 0.0,
        converged: true,
    }
}

/// Analytic lower bound. Case A is 0; Case C uses the saturated 1-D form;
/// Case B and the linear model use the 2-D nearest/farthest form.
pub fn jsp_lower_bound(cfg: &NetworkConfig, regime: Regime, spec: &QuadratureSpec) -> Result<JspEstimate> {
    cfg.validate()?;
    let integrand = match regime {
        Regime::CaseA => return Ok(zero(Method::AnalyticLower, regime)),
        Regime::CaseC => BoundIntegrand::saturated(cfg, spec.series_mass)?,
        Regime::CaseB | Regime::LinearModel => BoundIntegrand::lower(cfg, spec.series_mass)?,
    };
    let res = integrate_bound(cfg, &integrand, spec)?;
    Ok(analytic(res, Method::AnalyticLower, regime))
}

/// Analytic upper bound. Case A is 0; every other regime uses the 2-D form
/// with all interferers at the nearest distance.
pub fn jsp_upper_bound(cfg: &NetworkConfig, regime: Regime, spec: &QuadratureSpec) -> Result<JspEstimate> {
    cfg.validate()?;
    if regime == Regime::CaseA {
        return Ok(zero(Method::AnalyticUpper, regime));
    }
    let integrand = BoundIntegrand::upper(cfg, spec.series_mass)?;
    let res = integrate_bound(cfg, &integrand, spec)?;
    Ok(analytic(res, Method::AnalyticUpper, regime))
}
