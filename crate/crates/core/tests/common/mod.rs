//! Independent Monte Carlo oracles shared by the integration tests.
//!
//! These deliberately avoid the library's sampler: they draw from `StdRng`,
//! place points by rejection in the bounding square, and draw the count with
//! `rand_distr::Poisson`.

#![allow(dead_code)]

use aoi_eh::model::{sir_threshold, NetworkConfig};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp1, Gamma, Poisson};

pub const Z95: f64 = 1.959_963_984_540_054;

/// Estimate with a symmetric 95% halfwidth.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub halfwidth: f64,
}

impl Estimate {
    pub fn from_counts(hits: u64, n: u64, weight: f64) -> Self {
        let p = hits as f64 / n as f64;
        // Wald width with a floor of one success so p = 0 or 1 still gets a width.
        let pw = p.clamp(1.0 / n as f64, 1.0 - 1.0 / n as f64);
        Estimate {
            value: weight * p,
            halfwidth: weight * Z95 * (pw * (1.0 - pw) / n as f64).sqrt(),
        }
    }
}

/// One realization as `(d sorted ascending, gains aligned with d)`.
pub struct Draw {
    pub d: Vec<f64>,
    pub g: Vec<f64>,
}

/// Conditioned (`K >= 2`) PPP draw in the disc, by rejection in both steps.
pub fn draw(rng: &mut StdRng, cfg: &NetworkConfig) -> Draw {
    let m = cfg.mean_count();
    let poisson = Poisson::new(m).unwrap();
    let k = loop {
        let k: f64 = poisson.sample(rng);
        if k >= 2.0 {
            break k as usize;
        }
    };
    let r = cfg.radius_r;
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(k);
    while pts.len() < k {
        let x = rng.random_range(-r..r);
        let y = rng.random_range(-r..r);
        let dist = x.hypot(y);
        if dist <= r && dist > 0.0 {
            pts.push((dist, rng.sample::<f64, _>(Exp1)));
        }
    }
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Draw {
        d: pts.iter().map(|p| p.0).collect(),
        g: pts.iter().map(|p| p.1).collect(),
    }
}

/// Brute-force JSP under the linear harvester.
pub fn brute_force_jsp(cfg: &NetworkConfig, trials: u64, seed: u64) -> Estimate {
    let mut rng = StdRng::seed_from_u64(seed);
    let beta = sir_threshold(cfg).unwrap();
    let mut hits = 0;
    for _ in 0..trials {
        let w = draw(&mut rng, cfg);
        let path: Vec<f64> = w.d.iter().zip(&w.g).map(|(d, g)| g * d.powf(-cfg.alpha)).collect();
        let signal = path[0];
        let interference: f64 = path[1..].iter().sum();
        let energy = cfg.eta * cfg.xi * cfg.tau * cfg.p_t * (signal + interference);
        if energy > cfg.e_th && signal / interference > beta {
            hits += 1;
        }
    }
    Estimate::from_counts(hits, trials, 1.0)
}

/// Which bound construction to rebuild.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Construction {
    /// Energy with interferers at the farthest distance, SIR with them at the nearest.
    Lower,
    /// Energy with interferers at the nearest distance, SIR with them at the farthest.
    Upper,
    /// Saturated-regime lower bound: energy and SIR both with interferers at the nearest distance.
    Saturated,
}

fn construction_event(c: Construction, cfg: &NetworkConfig, beta: f64, d1: f64, dk: f64, g1: f64, z: f64) -> bool {
    let s = cfg.eta * cfg.xi * cfg.tau * cfg.p_t;
    let a = cfg.alpha;
    let (energy, sir) = match c {
        Construction::Lower => (s * (g1 * d1.powf(-a) + dk.powf(-a) * z), g1 / z),
        Construction::Upper => (s * d1.powf(-a) * (g1 + z), g1 * d1.powf(-a) / (dk.powf(-a) * z)),
        Construction::Saturated => (s * d1.powf(-a) * (g1 + z), g1 / z),
    };
    energy > cfg.e_th && sir > beta
}

/// The bound's defining event evaluated on genuine PPP realizations: the
/// interferers keep their gains but are moved to the nearest or farthest
/// distance.
pub fn modified_geometry(c: Construction, cfg: &NetworkConfig, trials: u64, seed: u64) -> Estimate {
    let mut rng = StdRng::seed_from_u64(seed);
    let beta = sir_threshold(cfg).unwrap();
    let mut hits = 0;
    for _ in 0..trials {
        let w = draw(&mut rng, cfg);
        let z: f64 = w.g[1..].iter().sum();
        if construction_event(c, cfg, beta, w.d[0], *w.d.last().unwrap(), w.g[0], z) {
            hits += 1;
        }
    }
    Estimate::from_counts(hits, trials, 1.0)
}

/// The bound's defining event under the probability model the bound formulas
/// integrate: unconditioned Poisson count (zero for `k < 2`), nearest and
/// farthest distances drawn independently from the two distance densities on
/// `d1 <= dK`, interference sum `Erlang(k)`, serving gain `Exp(1)`.
pub fn formula_model(c: Construction, cfg: &NetworkConfig, trials: u64, seed: u64) -> Estimate {
    let mut rng = StdRng::seed_from_u64(seed);
    let beta = sir_threshold(cfg).unwrap();
    let m = cfg.mean_count();
    let lp = cfg.lambda * std::f64::consts::PI;
    let r = cfg.radius_r;
    let p2 = 1.0 - (1.0 + m) * (-m).exp();
    // Each distance density has total mass (1 - e^-m) / P[K >= 2].
    let mass = -(-m).exp_m1() / p2;
    let weight = match c {
        Construction::Saturated => mass,
        _ => mass * mass,
    };
    let poisson = Poisson::new(m).unwrap();
    let mut hits = 0;
    for _ in 0..trials {
        let k: f64 = poisson.sample(&mut rng);
        let u1: f64 = rng.random();
        let uk: f64 = rng.random();
        let d1 = (-(1.0 - u1 * -(-m).exp_m1()).ln() / lp).sqrt();
        let dk = (r * r + (uk * -(-m).exp_m1() + (-m).exp()).ln() / lp).max(0.0).sqrt();
        if k < 2.0 || (c != Construction::Saturated && dk < d1) {
            continue;
        }
        let z: f64 = Gamma::new(k, 1.0).unwrap().sample(&mut rng);
        let g1: f64 = rng.sample(Exp1);
        if construction_event(c, cfg, beta, d1, dk, g1, z) {
            hits += 1;
        }
    }
    Estimate::from_counts(hits, trials, weight)
}

/// Kolmogorov–Smirnov distance between a sample and a CDF.
pub fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Pearson chi-square statistic and degrees of freedom for counts over
/// `1..`, pooling the tail so every expected count is at least 5.
pub fn chi_square_geometric(samples: &[u64], q: f64) -> (f64, usize) {
    let n = samples.len() as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut m = 1u64;
    let mut tail_prob = 1.0;
    loop {
        let p = q * (1.0 - q).powi(m as i32 - 1);
        if n * (tail_prob - p) < 5.0 {
            break;
        }
        let obs = samples.iter().filter(|&&s| s == m).count() as f64;
        bins.push((obs, n * p));
        tail_prob -= p;
        m += 1;
    }
    let obs_tail = samples.iter().filter(|&&s| s >= m).count() as f64;
    bins.push((obs_tail, n * tail_prob));
    let stat = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    (stat, bins.len() - 1)
}
