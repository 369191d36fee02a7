//! Slot-level Geo/Geo/1 simulation of the age of information under
//! non-preemptive and preemptive service, and the closed-form peak-age means.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::stream_rng;

const Z_95: f64 = 1.959_963_984_540_054;
/// Batches used for the peak-age confidence interval.
pub const PAOI_BATCHES: usize = 32;
/// Student t quantile 0.975 with `PAOI_BATCHES - 1` degrees of freedom.
const T_975_31: f64 = 2.039_513_446_396_408;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discipline {
    /// Arrivals during service are dropped.
    NonPreemptive,
    /// Arrivals replace the packet in service.
    Preemptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueParams {
    pub p_a: f64,
    pub mu: f64,
    pub discipline: Discipline,
    pub n_slots: u64,
    pub seed: u64,
}

impl QueueParams {
    pub fn validate(&self) -> Result<()> {
        check_probabilities(self.mu, self.p_a)?;
        if self.n_slots == 0 {
            return Err(Error::Domain("n_slots must be >= 1".into()));
        }
        Ok(())
    }
}

fn check_probabilities(mu: f64, p_a: f64) -> Result<()> {
    if mu.is_nan() || p_a.is_nan() || mu > 1.0 || p_a > 1.0 {
        return Err(Error::Domain(format!(
            "probabilities must lie in (0, 1], got mu = {mu}, p_a = {p_a}"
        )));
    }
    if !(mu > 0.0 && p_a > 0.0) {
        return Err(Error::InfiniteAge { mu, p_a });
    }
    Ok(())
}

/// Sample path and per-packet components of one simulation run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueueTrace {
    /// AoI during each slot.
    pub aoi_path: Vec<u64>,
    /// Peak age `A_i` at each delivery.
    pub paoi_samples: Vec<u64>,
    /// `W_i`: slots from the start of service to delivery.
    pub service_times: Vec<u64>,
    /// `Ŵ_i`: slots the delivered packet spent in service (preemptive only).
    pub residuals: Vec<u64>,
    /// `V_i`: idle slots before service `i` starts (may be 0).
    pub interarrivals: Vec<u64>,
    /// `N_i`: replacements during service `i` (preemptive only).
    pub replacement_counts: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaoiStats {
    pub mean_paoi: f64,
    /// 95% batch-means halfwidth of `mean_paoi`.
    pub ci_halfwidth: f64,
    pub count: u64,
    pub mean_service: f64,
    pub service_ci_halfwidth: f64,
    pub mean_interarrival: f64,
    pub interarrival_ci_halfwidth: f64,
    /// Preemptive only.
    pub mean_residual: Option<f64>,
}

fn mean_and_iid_halfwidth(xs: &[u64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::INFINITY);
    }
    let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z_95 * (var / n).sqrt())
}

fn batch_means_halfwidth(xs: &[u64]) -> f64 {
    let per = xs.len() / PAOI_BATCHES;
    if per == 0 {
        return f64::INFINITY;
    }
    let means: Vec<f64> = xs
        .chunks_exact(per)
        .take(PAOI_BATCHES)
        .map(|c| c.iter().map(|&x| x as f64).sum::<f64>() / per as f64)
        .collect();
    let b = means.len() as f64;
    let grand = means.iter().sum::<f64>() / b;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (b - 1.0);
    T_975_31 * (var / b).sqrt()
}

impl PaoiStats {
    pub fn from_trace(trace: &QueueTrace, discipline: Discipline) -> Self {
        let (mean_paoi, _) = mean_and_iid_halfwidth(&trace.paoi_samples);
        let (mean_service, service_ci_halfwidth) = mean_and_iid_halfwidth(&trace.service_times);
        let (mean_interarrival, interarrival_ci_halfwidth) = mean_and_iid_halfwidth(&trace.interarrivals);
        let mean_residual = match discipline {
            Discipline::Preemptive => Some(mean_and_iid_halfwidth(&trace.residuals).0),
            Discipline::NonPreemptive => None,
        };
        PaoiStats {
            mean_paoi,
            ci_halfwidth: batch_means_halfwidth(&trace.paoi_samples),
            count: trace.paoi_samples.len() as u64,
            mean_service,
            service_ci_halfwidth,
            mean_interarrival,
            interarrival_ci_halfwidth,
            mean_residual,
        }
    }
}

/// Runs the queue for `n_slots` slots.
///
/// Within a slot the arrival is handled first, then the transmission attempt.
/// Both uniforms are drawn every slot, so runs with the same seed are coupled
/// across disciplines. The horizon starts just after a delivery of a packet
/// with age 1, so `AoI(0) = 2`.
pub fn simulate_queue(params: &QueueParams) -> Result<(QueueTrace, PaoiStats)> {
    simulate_queue_with(params, true)
}

/// As [`simulate_queue`]; `record_path = false` leaves `aoi_path` empty.
pub fn simulate_queue_with(params: &QueueParams, record_path: bool) -> Result<(QueueTrace, PaoiStats)> {
    params.validate()?;
    let preemptive = params.discipline == Discipline::Preemptive;
    let mut rng = stream_rng(params.seed, 0);
    let mut trace = QueueTrace::default();
    if record_path {
        trace.aoi_path.reserve(params.n_slots as usize);
    }
    let mut aoi: u64 = 2;
    let mut prev_delivered_age: u64 = 1;
    let mut busy = false;
    let mut idle: u64 = 0;
    let mut service: u64 = 0;
    let mut residual: u64 = 0;
    let mut replacements: u64 = 0;
    for _ in 0..params.n_slots {
        if record_path {
            trace.aoi_path.push(aoi);
        }
        let arrival = rng.random::<f64>() < params.p_a;
        let success = rng.random::<f64>() < params.mu;
        if busy {
            if arrival && preemptive {
                residual = 0;
                replacements += 1;
            }
        } else if arrival {
            busy = true;
            service = 0;
            residual = 0;
            replacements = 0;
            trace.interarrivals.push(idle);
        } else {
            idle += 1;
        }
        if busy {
            service += 1;
            residual += 1;
            if success {
                let delivered_age = if preemptive { residual } else { service };
                assert_eq!(aoi, prev_delivered_age + idle + service, "peak age decomposition");
                trace.paoi_samples.push(aoi);
                trace.service_times.push(service);
                if preemptive {
                    trace.residuals.push(residual);
                    trace.replacement_counts.push(replacements);
                }
                prev_delivered_age = delivered_age;
                busy = false;
                idle = 0;
                aoi = delivered_age + 1;
                continue;
            }
        }
        aoi += 1;
    }
    // A service still open at the horizon has no delivery; drop its idle record.
    if busy {
        trace.interarrivals.pop();
    }
    let stats = PaoiStats::from_trace(&trace, params.discipline);
    Ok((trace, stats))
}

/// Mean waiting cycle `1/p_a - 1`.
pub fn arrival_term(p_a: f64) -> f64 {
    1.0 / p_a - 1.0
}

/// `q_s = mu + p_a (1 - mu)`.
pub fn residual_rate(mu: f64, p_a: f64) -> f64 {
    mu + p_a * (1.0 - mu)
}

/// Non-preemptive mean peak age `(1/p_a - 1) + 2/mu`.
pub fn paoi_np_closed_form(mu: f64, p_a: f64) -> Result<f64> {
    check_probabilities(mu, p_a)?;
    Ok(arrival_term(p_a) + 2.0 / mu)
}

/// Preemptive mean peak age `(1/p_a - 1) + 1/mu + 1/q_s`.
pub fn paoi_p_closed_form(mu: f64, p_a: f64) -> Result<f64> {
    check_probabilities(mu, p_a)?;
    Ok(arrival_term(p_a) + 1.0 / mu + 1.0 / residual_rate(mu, p_a))
}

/// `P[Ŵ = m] = q_s (1 - q_s)^(m - 1)`.
pub fn residual_pmf(m: u64, mu: f64, p_a: f64) -> Result<f64> {
    if m < 1 {
        return Err(Error::Domain("residual service time must be >= 1 slot".into()));
    }
    check_probabilities(mu, p_a)?;
    let q = residual_rate(mu, p_a);
    Ok(q * (1.0 - q).powf(m as f64 - 1.0))
}
