//! Poisson point process in a disc, conditioned on at least two points, and the
//! nearest/farthest distance densities used by the analytic bounds.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{invalid, Error, Result};
use crate::model::{NetworkConfig, NetworkRealization};
use crate::special::{gamma_p, ln_factorial};

/// Independent, reproducible RNG stream `stream` of seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Homogeneous PPP of intensity `lambda` in a disc of radius `radius_r`.
#[derive(Debug, Clone)]
pub struct DiscPpp {
    pub lambda: f64,
    pub radius_r: f64,
    /// `lambda * pi * R^2`.
    pub mean_count: f64,
    /// CDF of `K | K >= 2`; entry `i` is `P[K <= i + 2 | K >= 2]`.
    count_cdf: Vec<f64>,
}

impl DiscPpp {
    pub fn new(lambda: f64, radius_r: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid("lambda", format!("must be > 0, got {lambda}")));
        }
        if !(radius_r.is_finite() && radius_r > 0.0) {
            return Err(invalid("radius_r", format!("must be > 0, got {radius_r}")));
        }
        let mean_count = lambda * PI * radius_r * radius_r;
        let p2 = gamma_p(2.0, mean_count);
        if !(p2 > 0.0) {
            return Err(invalid(
                "lambda",
                format!("P[K >= 2] underflows for mean count {mean_count}"),
            ));
        }
        let ln_mean = mean_count.ln();
        let mut count_cdf = Vec::new();
        let mut acc = 0.0;
        let mut k = 2u64;
        loop {
            acc += (k as f64 * ln_mean - mean_count - ln_factorial(k)).exp() / p2;
            count_cdf.push(acc.min(1.0));
            if (k as f64) > mean_count && (1.0 - acc) < 1e-17 {
                break;
            }
            if k as f64 > mean_count + 40.0 * mean_count.sqrt() + 100.0 {
                break;
            }
            k += 1;
        }
        if let Some(last) = count_cdf.last_mut() {
            *last = 1.0;
        }
        Ok(DiscPpp {
            lambda,
            radius_r,
            mean_count,
            count_cdf,
        })
    }

    pub fn from_config(cfg: &NetworkConfig) -> Result<Self> {
        DiscPpp::new(cfg.lambda, cfg.radius_r)
    }

    /// `P[K >= 2] = 1 - (1 + m) e^-m`.
    pub fn prob_at_least_two(&self) -> f64 {
        gamma_p(2.0, self.mean_count)
    }

    /// Total mass of either distance density over `[0, R]`:
    /// `(1 - e^-m) / P[K >= 2]`.
    pub fn lemma_mass(&self) -> f64 {
        -(-self.mean_count).exp_m1() / self.prob_at_least_two()
    }

    /// Poisson PMF of the transmitter count, in log space.
    pub fn ln_pmf_count(&self, k: i64) -> Result<f64> {
        if k < 0 {
            return Err(Error::Domain(format!("count must be >= 0, got {k}")));
        }
        let m = self.mean_count;
        Ok(k as f64 * m.ln() - m - ln_factorial(k as u64))
    }

    pub fn pmf_count(&self, k: i64) -> Result<f64> {
        Ok(self.ln_pmf_count(k)?.exp())
    }

    /// Mean of `K | K >= 2`.
    pub fn conditioned_mean_count(&self) -> f64 {
        let m = self.mean_count;
        (m - m * (-m).exp()) / self.prob_at_least_two()
    }

    fn check_r(&self, r: f64) -> Result<()> {
        if !(r >= 0.0 && r <= self.radius_r) {
            return Err(Error::Domain(format!(
                "distance {r} outside [0, {}]",
                self.radius_r
            )));
        }
        Ok(())
    }

    /// Nearest-point density `2 lambda pi r e^(-lambda pi r^2) / P[K >= 2]`.
    pub fn pdf_nearest(&self, r: f64) -> Result<f64> {
        self.check_r(r)?;
        Ok(self.pdf_nearest_unchecked(r))
    }

    /// Farthest-point density `2 lambda pi r e^(-lambda pi (R^2 - r^2)) / P[K >= 2]`.
    pub fn pdf_farthest(&self, r: f64) -> Result<f64> {
        self.check_r(r)?;
        Ok(self.pdf_farthest_unchecked(r))
    }

    pub(crate) fn pdf_nearest_unchecked(&self, r: f64) -> f64 {
        let lp = self.lambda * PI;
        2.0 * lp * r * (-lp * r * r).exp() / self.prob_at_least_two()
    }

    pub(crate) fn pdf_farthest_unchecked(&self, r: f64) -> f64 {
        let lp = self.lambda * PI;
        let rr = self.radius_r;
        2.0 * lp * r * (-lp * (rr * rr - r * r)).exp() / self.prob_at_least_two()
    }

    /// [`pdf_nearest`](Self::pdf_nearest) rescaled to unit mass.
    pub fn pdf_nearest_normalized(&self, r: f64) -> Result<f64> {
        Ok(self.pdf_nearest(r)? / self.lemma_mass())
    }

    /// [`pdf_farthest`](Self::pdf_farthest) rescaled to unit mass.
    pub fn pdf_farthest_normalized(&self, r: f64) -> Result<f64> {
        Ok(self.pdf_farthest(r)? / self.lemma_mass())
    }

    /// CDF of the normalized nearest density.
    pub fn cdf_nearest_normalized(&self, r: f64) -> Result<f64> {
        self.check_r(r)?;
        let lp = self.lambda * PI;
        Ok((-lp * r * r).exp_m1() / (-self.mean_count).exp_m1())
    }

    /// CDF of the normalized farthest density.
    pub fn cdf_farthest_normalized(&self, r: f64) -> Result<f64> {
        self.check_r(r)?;
        let lp = self.lambda * PI;
        let rr = self.radius_r;
        let m = self.mean_count;
        Ok(((-lp * (rr * rr - r * r)).exp() - (-m).exp()) / -(-m).exp_m1())
    }

    /// Draws `K | K >= 2` by inverse CDF over the truncated PMF.
    pub fn sample_count<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let idx = self.count_cdf.partition_point(|&c| c <= u);
        idx.min(self.count_cdf.len() - 1) + 2
    }

    /// Fills `d` (sorted ascending) and `g` with one conditioned draw.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, d: &mut Vec<f64>, g: &mut Vec<f64>) {
        let k = self.sample_count(rng);
        d.clear();
        g.clear();
        for _ in 0..k {
            // 1 - U lies in (0, 1], so distances stay strictly positive.
            let u: f64 = 1.0 - rng.random::<f64>();
            d.push(self.radius_r * u.sqrt());
        }
        for _ in 0..k {
            g.push(rng.sample::<f64, _>(Exp1).max(f64::MIN_POSITIVE));
        }
        d.sort_unstable_by(f64::total_cmp);
    }

    pub fn sample_realization<R: Rng + ?Sized>(&self, rng: &mut R) -> NetworkRealization {
        let mut d = Vec::new();
        let mut g = Vec::new();
        self.sample_into(rng, &mut d, &mut g);
        NetworkRealization { d, g }
    }
}
