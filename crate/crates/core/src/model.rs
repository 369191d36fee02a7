//! System-model parameters and the per-realization physics.
//!
//! Everything here is SI: watts, joules, seconds, metres. Decibels only
//! appear at the config/CLI boundary (see [`db_to_watts`]).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default non-linear harvester activation power (W).
pub const DEFAULT_PR_MIN: f64 = 0.05;
/// Default non-linear harvester saturation power (W).
pub const DEFAULT_PR_MAX: f64 = 1.0;

/// Converts a power in dB (relative to 1 W) to watts.
pub fn db_to_watts(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn watts_to_db(w: f64) -> f64 {
    10.0 * w.log10()
}

/// RF-to-DC conversion model of the device's harvesting circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum HarvesterModel {
    /// Unbounded conversion: output is proportional to received power.
    Linear,
    /// Circuit with an activation power `pr_min` and a saturation power
    /// `pr_max`, both fixed constants in watts.
    NonLinear { pr_min: f64, pr_max: f64 },
}

impl HarvesterModel {
    pub fn default_non_linear() -> Self {
        HarvesterModel::NonLinear {
            pr_min: DEFAULT_PR_MIN,
            pr_max: DEFAULT_PR_MAX,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, HarvesterModel::Linear)
    }

    pub fn validate(&self) -> Result<()> {
        if let HarvesterModel::NonLinear { pr_min, pr_max } = *self {
            if !(pr_min.is_finite() && pr_min >= 0.0) {
                return Err(invalid("pr_min", format!("must be >= 0, got {pr_min}")));
            }
            if !(pr_max.is_finite() && pr_max > pr_min) {
                return Err(invalid(
                    "pr_max",
                    format!("must exceed pr_min ({pr_min}), got {pr_max}"),
                ));
            }
        }
        Ok(())
    }
}

/// All scalar parameters of the downlink model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Transmitter density (m^-2).
    pub lambda: f64,
    /// Disc radius (m).
    pub radius_r: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Transmit power times path-loss constant (W).
    pub p_t: f64,
    /// Energy-conversion efficiency.
    pub eta: f64,
    /// Slot partitioning factor: fraction of the slot spent harvesting.
    pub xi: f64,
    /// Slot duration (s).
    pub tau: f64,
    /// Payload per slot (bits).
    pub sigma_bits: f64,
    /// Channel bandwidth (Hz).
    pub bandwidth_b: f64,
    /// Energy threshold (J).
    pub e_th: f64,
    /// Per-slot packet arrival probability.
    pub p_a: f64,
    pub eh_model: HarvesterModel,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            lambda: 0.003,
            radius_r: 60.0,
            alpha: 3.0,
            p_t: db_to_watts(10.0),
            eta: 0.9,
            xi: 0.4,
            tau: 1.0,
            sigma_bits: 10.0,
            bandwidth_b: 10e3,
            e_th: 10e-3,
            p_a: 0.5,
            eh_model: HarvesterModel::Linear,
        }
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        positive("lambda", self.lambda)?;
        positive("radius_r", self.radius_r)?;
        if !(self.alpha.is_finite() && self.alpha > 2.0) {
            return Err(invalid("alpha", format!("must be > 2, got {}", self.alpha)));
        }
        positive("p_t", self.p_t)?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid("eta", format!("must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(invalid("xi", format!("must lie in (0, 1), got {}", self.xi)));
        }
        positive("tau", self.tau)?;
        if !(self.sigma_bits.is_finite() && self.sigma_bits >= 0.0) {
            return Err(invalid("sigma_bits", format!("must be >= 0, got {}", self.sigma_bits)));
        }
        positive("bandwidth_b", self.bandwidth_b)?;
        if !(self.e_th.is_finite() && self.e_th >= 0.0) {
            return Err(invalid("e_th", format!("must be >= 0, got {}", self.e_th)));
        }
        if !(self.p_a > 0.0 && self.p_a <= 1.0) {
            return Err(invalid("p_a", format!("must lie in (0, 1], got {}", self.p_a)));
        }
        self.eh_model.validate()
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = xi;
        self
    }

    pub fn with_p_t(mut self, p_t: f64) -> Self {
        self.p_t = p_t;
        self
    }

    pub fn with_radius(mut self, radius_r: f64) -> Self {
        self.radius_r = radius_r;
        self
    }

    pub fn with_eh_model(mut self, eh_model: HarvesterModel) -> Self {
        self.eh_model = eh_model;
        self
    }

    /// `eta * xi * tau * p_t`, the factor mapping path gains to harvested joules.
    pub fn harvest_scale(&self) -> f64 {
        self.eta * self.xi * self.tau * self.p_t
    }

    /// Mean number of transmitters in the disc, `lambda * pi * R^2`.
    pub fn mean_count(&self) -> f64 {
        self.lambda * std::f64::consts::PI * self.radius_r * self.radius_r
    }
}

/// One draw of the transmitter process as seen from the typical device.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkRealization {
    /// Distances in ascending order; `d[0]` is the serving transmitter.
    pub d: Vec<f64>,
    /// Unit-mean fading power gains, aligned with `d`.
    pub g: Vec<f64>,
}

impl NetworkRealization {
    pub fn new(d: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::Domain("realization needs at least one transmitter".into()));
        }
        if d.len() != g.len() {
            return Err(Error::Domain(format!(
                "{} distances but {} gains",
                d.len(),
                g.len()
            )));
        }
        if d.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::Domain("distances must be finite and > 0".into()));
        }
        if d.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Domain("distances must be sorted ascending".into()));
        }
        if g.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::Domain("gains must be finite and > 0".into()));
        }
        Ok(NetworkRealization { d, g })
    }

    /// Number of transmitters, serving one included.
    pub fn k(&self) -> usize {
        self.d.len()
    }

    pub fn nearest(&self) -> f64 {
        self.d[0]
    }

    pub fn farthest(&self) -> f64 {
        self.d[self.d.len() - 1]
    }

    /// Path gain of the serving link, `g1 * d1^-alpha`.
    pub fn serving_gain(&self, alpha: f64) -> f64 {
        self.g[0] * self.d[0].powf(-alpha)
    }

    /// Aggregate interferer path gain, `sum_{k>=2} g_k d_k^-alpha`.
    pub fn interference_gain(&self, alpha: f64) -> f64 {
        self.d[1..]
            .iter()
            .zip(&self.g[1..])
            .map(|(&d, &g)| g * d.powf(-alpha))
            .sum()
    }

    /// Total received power `Pr` in watts.
    pub fn received_power(&self, cfg: &NetworkConfig) -> f64 {
        cfg.p_t * (self.serving_gain(cfg.alpha) + self.interference_gain(cfg.alpha))
    }
}

/// Energy harvested during the EH phase of one slot (J).
pub fn harvested_energy(realization: &NetworkRealization, cfg: &NetworkConfig) -> f64 {
    energy_from_power(realization.received_power(cfg), cfg)
}

/// Harvester output for a total received power `pr` (W).
pub fn energy_from_power(pr: f64, cfg: &NetworkConfig) -> f64 {
    let time_eff = cfg.eta * cfg.xi * cfg.tau;
    match cfg.eh_model {
        HarvesterModel::Linear => time_eff * pr,
        HarvesterModel::NonLinear { pr_min, pr_max } => {
            if pr < pr_min {
                0.0
            } else if pr > pr_max {
                time_eff * pr_max
            } else {
                time_eff * pr
            }
        }
    }
}

/// Signal-to-interference ratio at the typical device. No noise term.
pub fn sir(realization: &NetworkRealization, cfg: &NetworkConfig) -> Result<f64> {
    if realization.k() < 2 {
        return Err(Error::NoInterferer);
    }
    Ok(realization.serving_gain(cfg.alpha) / realization.interference_gain(cfg.alpha))
}

/// Minimum SIR for the payload to fit in the data phase:
/// `beta = 2^(sigma / ((1 - xi) tau B)) - 1`.
pub fn sir_threshold(cfg: &NetworkConfig) -> Result<f64> {
    if !(cfg.xi < 1.0) {
        return Err(invalid("xi", format!("must be < 1 for a data phase, got {}", cfg.xi)));
    }
    let rate_over_b = cfg.sigma_bits / ((1.0 - cfg.xi) * cfg.tau * cfg.bandwidth_b);
    Ok((rate_over_b * std::f64::consts::LN_2).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single(d: f64, g: f64) -> NetworkRealization {
        NetworkRealization::new(vec![d], vec![g]).unwrap()
    }

    fn cfg_unit_power() -> NetworkConfig {
        NetworkConfig {
            p_t: 1.0,
            ..NetworkConfig::default()
        }
    }

    #[test]
    fn defaults_are_valid() {
        let cfg = NetworkConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.e_th, 0.01);
        assert_eq!(cfg.alpha, 3.0);
        assert_eq!(cfg.sigma_bits, 10.0);
        assert_eq!(cfg.eta, 0.9);
        assert_eq!(cfg.xi, 0.4);
        assert_eq!(cfg.tau, 1.0);
        assert_eq!(cfg.lambda, 0.003);
        assert_eq!(cfg.radius_r, 60.0);
        assert_eq!(cfg.bandwidth_b, 1e4);
    }

    #[test]
    fn zero_harvest_phase_gives_zero_energy() {
        let cfg = NetworkConfig { xi: 0.0, ..cfg_unit_power() };
        let r = NetworkRealization::new(vec![1.0, 3.0], vec![1.2, 0.7]).unwrap();
        assert_eq!(harvested_energy(&r, &cfg), 0.0);
    }

    #[test]
    fn linear_energy_hand_value() {
        let e = harvested_energy(&single(2.0, 1.0), &cfg_unit_power());
        assert_relative_eq!(e, 0.045, max_relative = 1e-14);
    }

    #[test]
    fn non_linear_branches() {
        let nl = cfg_unit_power().with_eh_model(HarvesterModel::NonLinear {
            pr_min: 1.0,
            pr_max: 2.0,
        });
        // Pr = 0.5 W: below activation.
        assert_eq!(harvested_energy(&single(1.0, 0.5), &nl), 0.0);
        let nl = cfg_unit_power().with_eh_model(HarvesterModel::NonLinear {
            pr_min: 0.0,
            pr_max: 1.0,
        });
        // Pr = 5 W: saturated at eta xi tau pr_max.
        assert_relative_eq!(harvested_energy(&single(1.0, 5.0), &nl), 0.36, max_relative = 1e-14);
        // In range: identical to linear.
        let lin = cfg_unit_power();
        let r = single(1.0, 0.7);
        assert_eq!(harvested_energy(&r, &nl), harvested_energy(&r, &lin));
    }

    #[test]
    fn sir_examples() {
        let cfg = NetworkConfig::default();
        let r = NetworkRealization::new(vec![4.0, 4.0], vec![1.0, 1.0]).unwrap();
        assert_relative_eq!(sir(&r, &cfg).unwrap(), 1.0);
        let r = NetworkRealization::new(vec![1.0, 1.0, 1.0], vec![2.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(sir(&r, &cfg).unwrap(), 1.0);
        assert_eq!(sir(&single(1.0, 1.0), &cfg), Err(Error::NoInterferer));
    }

    #[test]
    fn sir_ignores_transmit_power() {
        let r = NetworkRealization::new(vec![3.0, 7.5, 20.0], vec![0.3, 1.9, 0.8]).unwrap();
        let a = NetworkConfig::default();
        let b = a.with_p_t(2.0 * a.p_t);
        assert_eq!(sir(&r, &a).unwrap(), sir(&r, &b).unwrap());
    }

    #[test]
    fn sir_threshold_examples() {
        let cfg = NetworkConfig { sigma_bits: 0.0, ..NetworkConfig::default() };
        assert_eq!(sir_threshold(&cfg).unwrap(), 0.0);
        let beta = sir_threshold(&NetworkConfig::default()).unwrap();
        assert_relative_eq!(beta, 2f64.powf(10.0 / 6000.0) - 1.0, max_relative = 1e-12);
        assert_relative_eq!(beta, 1.155_912_853_8e-3, max_relative = 1e-9);
        let cfg = NetworkConfig { sigma_bits: 6000.0, ..NetworkConfig::default() };
        assert_relative_eq!(sir_threshold(&cfg).unwrap(), 1.0, max_relative = 1e-14);
        let cfg = NetworkConfig::default().with_xi(1.0);
        assert!(matches!(sir_threshold(&cfg), Err(Error::InvalidConfig { field: "xi", .. })));
    }

    #[test]
    fn validation_rejects_out_of_range() {
        let bad = NetworkConfig::default().with_xi(1.5);
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig { field: "xi", .. })));
        let bad = NetworkConfig { alpha: 2.0, ..NetworkConfig::default() };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig { field: "alpha", .. })));
        let bad = NetworkConfig::default().with_eh_model(HarvesterModel::NonLinear {
            pr_min: 1.0,
            pr_max: 1.0,
        });
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig { field: "pr_max", .. })));
        assert!(NetworkRealization::new(vec![2.0, 1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn db_conversion() {
        assert_relative_eq!(db_to_watts(10.0), 10.0, max_relative = 1e-15);
        assert_relative_eq!(watts_to_db(db_to_watts(7.3)), 7.3, max_relative = 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn realization() -> impl Strategy<Value = NetworkRealization> {
            prop::collection::vec((0.5f64..60.0, 0.01f64..5.0), 1..20).prop_map(|mut v| {
                v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let (d, g) = v.into_iter().unzip();
                NetworkRealization::new(d, g).unwrap()
            })
        }

        proptest! {
            #[test]
            fn linear_energy_is_homogeneous(r in realization(), c in 0.1f64..10.0) {
                let cfg = NetworkConfig { xi: 0.3, eta: 0.5, ..NetworkConfig::default() };
                let base = harvested_energy(&r, &cfg);
                for scaled in [
                    NetworkConfig { xi: cfg.xi * c, ..cfg },
                    NetworkConfig { tau: cfg.tau * c, ..cfg },
                    NetworkConfig { eta: cfg.eta * c, ..cfg },
                    NetworkConfig { p_t: cfg.p_t * c, ..cfg },
                ] {
                    let e = harvested_energy(&r, &scaled);
                    prop_assert!((e - c * base).abs() <= 1e-12 * e.abs().max(1e-300));
                }
            }

            #[test]
            fn non_linear_takes_one_of_three_values(
                r in realization(), lo in 0.0f64..0.05, span in 1e-4f64..1.0, p_t in 0.1f64..100.0,
            ) {
                let lin = NetworkConfig { p_t, ..NetworkConfig::default() };
                let nl = lin.with_eh_model(HarvesterModel::NonLinear { pr_min: lo, pr_max: lo + span });
                let l = harvested_energy(&r, &lin);
                let cap = nl.eta * nl.xi * nl.tau * (lo + span);
                let e = harvested_energy(&r, &nl);
                prop_assert!(e == 0.0 || e == l || e == cap);
                prop_assert!(e <= l.max(cap));
            }

            #[test]
            fn sir_scale_free(r in realization(), c in 0.01f64..100.0) {
                prop_assume!(r.k() >= 2);
                let cfg = NetworkConfig::default();
                let scaled = NetworkRealization::new(r.d.clone(), r.g.iter().map(|g| g * c).collect()).unwrap();
                let a = sir(&r, &cfg).unwrap();
                let b = sir(&scaled, &cfg).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a);
            }

            #[test]
            fn beta_monotone(x1 in 0.01f64..0.98, dx in 1e-3f64..0.01, s in 1.0f64..1e4) {
                let base = NetworkConfig { sigma_bits: s, ..NetworkConfig::default() };
                let b1 = sir_threshold(&base.with_xi(x1)).unwrap();
                let b2 = sir_threshold(&base.with_xi(x1 + dx)).unwrap();
                prop_assert!(b1 > 0.0);
                prop_assert!(b2 > b1);
                let b3 = sir_threshold(&NetworkConfig { sigma_bits: s * 1.5, ..base }.with_xi(x1)).unwrap();
                prop_assert!(b3 > b1);
            }
        }
    }
}
