//! Named experiments: parameter sweeps written as CSV with a JSON sidecar.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::aoi::{paoi_np_closed_form, paoi_p_closed_form, simulate_queue_with, Discipline, QueueParams};
use crate::config::{ExperimentName, ExperimentSpec, Sweep};
use crate::error::Error;
use crate::jsp::{jsp_lower_bound, jsp_monte_carlo, jsp_upper_bound, select_regime, Regime};
use crate::model::{HarvesterModel, NetworkConfig};
use crate::optimizer::{optimize_scalar, REGIME_SEED};
use crate::quadrature::QuadratureSpec;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Model(#[from] Error),
    #[error("cannot write {path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("experiment {0} needs a sweep axis")]
    MissingSweep(ExperimentName),
}

/// Tabular output of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub experiment: ExperimentName,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SweepResult {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> Result<String, ExperimentError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| ExperimentError::Io {
            path: PathBuf::from("<csv>"),
            reason: e.to_string(),
        };
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| ExperimentError::Io {
            path: PathBuf::from("<csv>"),
            reason: e.to_string(),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Metadata sidecar written next to each CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata<'a> {
    pub experiment: ExperimentName,
    pub code_version: &'static str,
    pub seed: u64,
    pub trials: u64,
    pub config: &'a NetworkConfig,
    pub spec: &'a ExperimentSpec,
    pub quadrature: QuadratureSpec,
    pub columns: &'a [String],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv: PathBuf,
    pub meta: PathBuf,
    pub plot: Option<PathBuf>,
}

/// Non-linear harvester used for the `_nl` series: the configured one, or
/// the default thresholds when the config is linear.
pub fn non_linear_variant(cfg: &NetworkConfig) -> NetworkConfig {
    match cfg.eh_model {
        HarvesterModel::NonLinear { .. } => *cfg,
        HarvesterModel::Linear => (*cfg).with_eh_model(HarvesterModel::default_non_linear()),
    }
}

fn sweep_of(spec: &ExperimentSpec) -> Result<Sweep, ExperimentError> {
    spec.sweep.ok_or(ExperimentError::MissingSweep(spec.name))
}

/// `[mc, lower, upper]` at `cfg` with its own regime.
fn jsp_triplet(cfg: &NetworkConfig, spec: &ExperimentSpec, quad: &QuadratureSpec) -> Result<[f64; 3], Error> {
    let regime = select_regime(cfg, REGIME_SEED)?;
    Ok([
        jsp_monte_carlo(cfg, spec.trials, spec.seed)?.value,
        jsp_lower_bound(cfg, regime, quad)?.value,
        jsp_upper_bound(cfg, regime, quad)?.value,
    ])
}

fn jsp_sweep<F>(
    base: &NetworkConfig,
    spec: &ExperimentSpec,
    axis: &str,
    apply: F,
) -> Result<SweepResult, ExperimentError>
where
    F: Fn(&NetworkConfig, f64) -> NetworkConfig + Sync,
{
    let sweep = sweep_of(spec)?;
    let quad = QuadratureSpec::default();
    let linear = (*base).with_eh_model(HarvesterModel::Linear);
    let non_linear = non_linear_variant(base);
    let rows = sweep
        .values()
        .par_iter()
        .map(|&v| -> Result<Vec<f64>, Error> {
            let x = sweep.to_si(v);
            let l = jsp_triplet(&apply(&linear, x), spec, &quad)?;
            let nl = jsp_triplet(&apply(&non_linear, x), spec, &quad)?;
            Ok(vec![v, l[0], l[1], l[2], nl[0], nl[1], nl[2]])
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult {
        experiment: spec.name,
        columns: [axis, "mc", "lower", "upper", "mc_nl", "lower_nl", "upper_nl"]
            .map(String::from)
            .to_vec(),
        rows,
    })
}

fn jsp_vs_xi(cfg: &NetworkConfig, spec: &ExperimentSpec) -> Result<SweepResult, ExperimentError> {
    let sweep = sweep_of(spec)?;
    let quad = QuadratureSpec::default();
    let rows = sweep
        .values()
        .par_iter()
        .map(|&xi| -> Result<Vec<f64>, Error> {
            let t = jsp_triplet(&(*cfg).with_xi(xi), spec, &quad)?;
            Ok(vec![xi, t[0], t[1], t[2]])
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult {
        experiment: spec.name,
        columns: ["xi", "mc", "lower", "upper"].map(String::from).to_vec(),
        rows,
    })
}

fn age_or_inf(r: Result<f64, Error>) -> Result<f64, Error> {
    match r {
        Err(Error::InfiniteAge { .. }) => Ok(f64::INFINITY),
        other => other,
    }
}

fn paoi_vs_xi(cfg: &NetworkConfig, spec: &ExperimentSpec) -> Result<SweepResult, ExperimentError> {
    let sweep = sweep_of(spec)?;
    let quad = QuadratureSpec::default();
    let rows = sweep
        .values()
        .par_iter()
        .map(|&xi| -> Result<Vec<f64>, Error> {
            let c = (*cfg).with_xi(xi);
            let regime = select_regime(&c, REGIME_SEED)?;
            let mu_lower = jsp_lower_bound(&c, regime, &quad)?.value;
            let mu_mc = jsp_monte_carlo(&c, spec.trials, spec.seed)?.value;
            let mut row = vec![
                xi,
                mu_lower,
                mu_mc,
                age_or_inf(paoi_np_closed_form(mu_lower, c.p_a))?,
                age_or_inf(paoi_p_closed_form(mu_lower, c.p_a))?,
            ];
            for discipline in [Discipline::NonPreemptive, Discipline::Preemptive] {
                if mu_mc > 0.0 {
                    let params = QueueParams {
                        p_a: c.p_a,
                        mu: mu_mc,
                        discipline,
                        n_slots: spec.queue.n_slots,
                        seed: spec.seed,
                    };
                    let (_, stats) = simulate_queue_with(&params, false)?;
                    row.extend([stats.mean_paoi, stats.ci_halfwidth]);
                } else {
                    row.extend([f64::INFINITY, f64::NAN]);
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult {
        experiment: spec.name,
        columns: [
            "xi",
            "mu_lower",
            "mu_mc",
            "paoi_np_upper",
            "paoi_p_upper",
            "paoi_np_sim",
            "paoi_np_sim_ci",
            "paoi_p_sim",
            "paoi_p_sim_ci",
        ]
        .map(String::from)
        .to_vec(),
        rows,
    })
}

/// Optimal xi for the lower bound and both peak-age objectives at `cfg`,
/// sharing lower-bound evaluations between the three searches.
///
/// Returns `[xi_jsp, jsp_at_xi, xi_np, xi_p]`; NaN when the lower bound is
/// identically zero.
pub fn xi_star_triplet(cfg: &NetworkConfig, spec: &ExperimentSpec) -> Result<[f64; 4], Error> {
    let quad = QuadratureSpec::default();
    let regime = select_regime(cfg, REGIME_SEED)?;
    if regime == Regime::CaseA {
        return Ok([f64::NAN; 4]);
    }
    let cache: Mutex<HashMap<u64, f64>> = Mutex::new(HashMap::new());
    let mu_lower = |xi: f64| -> Result<f64, Error> {
        if let Some(&v) = cache.lock().expect("cache lock").get(&xi.to_bits()) {
            return Ok(v);
        }
        let v = jsp_lower_bound(&(*cfg).with_xi(xi), regime, &quad)?.value;
        cache.lock().expect("cache lock").insert(xi.to_bits(), v);
        Ok(v)
    };
    let p_a = cfg.p_a;
    let neg_age = |age: Result<f64, Error>| match age {
        Ok(a) => Ok(-a),
        Err(Error::InfiniteAge { .. }) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    };
    let jsp = match optimize_scalar(mu_lower, spec.grid_step, spec.refine_tol) {
        Ok(o) => o,
        Err(Error::DegenerateObjective(_)) => return Ok([f64::NAN; 4]),
        Err(e) => return Err(e),
    };
    let np = optimize_scalar(|xi| neg_age(paoi_np_closed_form(mu_lower(xi)?, p_a)), spec.grid_step, spec.refine_tol)?;
    let p = optimize_scalar(|xi| neg_age(paoi_p_closed_form(mu_lower(xi)?, p_a)), spec.grid_step, spec.refine_tol)?;
    Ok([jsp.x, jsp.score, np.x, p.x])
}

fn xi_star_sweep<F>(
    base: &NetworkConfig,
    spec: &ExperimentSpec,
    axis: &str,
    apply: F,
) -> Result<SweepResult, ExperimentError>
where
    F: Fn(&NetworkConfig, f64) -> NetworkConfig + Sync,
{
    let sweep = sweep_of(spec)?;
    let linear = (*base).with_eh_model(HarvesterModel::Linear);
    let non_linear = non_linear_variant(base);
    let rows = sweep
        .values()
        .par_iter()
        .map(|&v| -> Result<Vec<f64>, Error> {
            let x = sweep.to_si(v);
            let l = xi_star_triplet(&apply(&linear, x), spec)?;
            let nl = xi_star_triplet(&apply(&non_linear, x), spec)?;
            Ok(vec![v, l[0], l[1], l[2], l[3], nl[0], nl[1]])
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult {
        experiment: spec.name,
        columns: [
            axis,
            "xi_star",
            "jsp_lower_at_xi_star",
            "xi_star_paoi_np",
            "xi_star_paoi_p",
            "xi_star_nl",
            "jsp_lower_nl_at_xi_star",
        ]
        .map(String::from)
        .to_vec(),
        rows,
    })
}

fn queue_path(cfg: &NetworkConfig, spec: &ExperimentSpec) -> Result<SweepResult, ExperimentError> {
    let mu = match spec.queue.mu {
        Some(mu) => mu,
        None => jsp_lower_bound(cfg, select_regime(cfg, REGIME_SEED)?, &QuadratureSpec::default())?.value,
    };
    let mut paths = Vec::new();
    for discipline in [Discipline::NonPreemptive, Discipline::Preemptive] {
        let params = QueueParams {
            p_a: cfg.p_a,
            mu,
            discipline,
            n_slots: spec.queue.n_slots,
            seed: spec.seed,
        };
        paths.push(simulate_queue_with(&params, true)?.0.aoi_path);
    }
    let rows = (0..spec.queue.n_slots as usize)
        .map(|t| vec![t as f64, paths[0][t] as f64, paths[1][t] as f64])
        .collect();
    Ok(SweepResult {
        experiment: spec.name,
        columns: ["slot", "aoi_np", "aoi_p"].map(String::from).to_vec(),
        rows,
    })
}

/// Computes an experiment's table without writing anything.
pub fn compute_experiment(cfg: &NetworkConfig, spec: &ExperimentSpec) -> Result<SweepResult, ExperimentError> {
    cfg.validate()?;
    match spec.name {
        ExperimentName::JspVsPower => jsp_sweep(cfg, spec, "p_t", |c, x| (*c).with_p_t(x)),
        ExperimentName::JspVsRadius => jsp_sweep(cfg, spec, "radius_r", |c, x| (*c).with_radius(x)),
        ExperimentName::JspVsXi => jsp_vs_xi(cfg, spec),
        ExperimentName::PaoiVsXi => paoi_vs_xi(cfg, spec),
        ExperimentName::XistarVsPower => xi_star_sweep(cfg, spec, "p_t", |c, x| (*c).with_p_t(x)),
        ExperimentName::XistarVsRadius => xi_star_sweep(cfg, spec, "radius_r", |c, x| (*c).with_radius(x)),
        ExperimentName::QueuePath => queue_path(cfg, spec),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    std::fs::write(path, contents).map_err(|e| ExperimentError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Runs an experiment and writes `<name>.csv`, `<name>.meta.json` and,
/// if requested, `<name>.svg` into `spec.output_dir`.
pub fn run_experiment(cfg: &NetworkConfig, spec: &ExperimentSpec) -> Result<RunOutput, ExperimentError> {
    let result = compute_experiment(cfg, spec)?;
    let dir = &spec.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| ExperimentError::Io {
        path: dir.clone(),
        reason: e.to_string(),
    })?;
    let name = spec.name.as_str();
    let csv_path = dir.join(format!("{name}.csv"));
    write_file(&csv_path, &result.to_csv()?)?;
    let meta = RunMetadata {
        experiment: spec.name,
        code_version: env!("CARGO_PKG_VERSION"),
        seed: spec.seed,
        trials: spec.trials,
        config: cfg,
        spec,
        quadrature: QuadratureSpec::default(),
        columns: &result.columns,
    };
    let meta_path = dir.join(format!("{name}.meta.json"));
    let json = serde_json::to_string_pretty(&meta).map_err(|e| ExperimentError::Io {
        path: meta_path.clone(),
        reason: e.to_string(),
    })?;
    write_file(&meta_path, &json)?;
    let plot = if spec.plot {
        let path = dir.join(format!("{name}.svg"));
        write_file(&path, &render_svg(&result))?;
        Some(path)
    } else {
        None
    };
    Ok(RunOutput {
        csv: csv_path,
        meta: meta_path,
        plot,
    })
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

/// Line chart of every column against the first one.
pub fn render_svg(result: &SweepResult) -> String {
    let (w, h, pad) = (720.0, 440.0, 60.0);
    let xs: Vec<f64> = result.rows.iter().map(|r| r[0]).collect();
    let finite = |v: &f64| v.is_finite();
    let ys = result.rows.iter().flat_map(|r| r[1..].iter().copied()).filter(finite);
    let (x_lo, x_hi) = xs.iter().copied().filter(finite).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (y_lo, y_hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let px = |x: f64| pad + (x - x_lo) / span(x_lo, x_hi) * (w - 2.0 * pad);
    let py = |y: f64| h - pad - (y - y_lo) / span(y_lo, y_hi) * (h - 2.0 * pad);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{pad} {} H{} M{pad} {} V{pad}" stroke="black" fill="none"/>"#,
        h - pad,
        w - pad,
        h - pad
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 20.0, result.columns[0]);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{:.4}</text>"#, pad - 4.0, h - pad, y_lo);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{:.4}</text>"#, pad - 4.0, pad + 4.0, y_hi);
    let _ = writeln!(svg, r#"<text x="{pad}" y="{}" text-anchor="middle">{}</text>"#, h - pad + 16.0, x_lo);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w - pad, h - pad + 16.0, x_hi);
    for (j, name) in result.columns.iter().enumerate().skip(1) {
        let color = PALETTE[(j - 1) % PALETTE.len()];
        let mut d = String::new();
        let mut pen_down = false;
        for row in &result.rows {
            let (x, y) = (row[0], row[j]);
            if x.is_finite() && y.is_finite() {
                let _ = write!(d, "{}{:.2} {:.2} ", if pen_down { "L" } else { "M" }, px(x), py(y));
                pen_down = true;
            } else {
                pen_down = false;
            }
        }
        let _ = writeln!(svg, r#"<path d="{}" stroke="{color}" stroke-width="1.5" fill="none"/>"#, d.trim_end());
        let ly = pad + 16.0 * j as f64;
        let _ = writeln!(svg, r#"<text x="{}" y="{ly}" fill="{color}">{name}</text>"#, w - pad - 110.0);
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: ExperimentName) -> ExperimentSpec {
        ExperimentSpec {
            name,
            sweep: name.default_sweep(),
            trials: 2000,
            ..ExperimentSpec::default()
        }
    }

    #[test]
    fn queue_path_all_ones() {
        let mut s = spec(ExperimentName::QueuePath);
        s.queue.n_slots = 10;
        s.queue.mu = Some(1.0);
        let cfg = NetworkConfig { p_a: 1.0, ..NetworkConfig::default() };
        let r = compute_experiment(&cfg, &s).unwrap();
        assert_eq!(r.rows.len(), 10);
        assert!(r.column("aoi_np").unwrap().iter().all(|&a| a == 2.0));
        assert!(r.column("aoi_p").unwrap().iter().all(|&a| a == 2.0));
    }

    #[test]
    fn csv_layout() {
        let r = SweepResult {
            experiment: ExperimentName::JspVsXi,
            columns: vec!["xi".into(), "mc".into()],
            rows: vec![vec![0.1, 0.25], vec![0.2, f64::INFINITY]],
        };
        assert_eq!(r.to_csv().unwrap(), "xi,mc\n0.1,0.25\n0.2,inf\n");
        assert!(render_svg(&r).starts_with("<svg"));
    }

    #[test]
    fn jsp_vs_power_shape() {
        let mut s = spec(ExperimentName::JspVsPower);
        s.sweep = Some(Sweep { start: 0.0, stop: 20.0, step: 10.0, unit: crate::config::SweepUnit::Db });
        let r = compute_experiment(&NetworkConfig::default(), &s).unwrap();
        assert_eq!(r.columns, ["p_t", "mc", "lower", "upper", "mc_nl", "lower_nl", "upper_nl"]);
        assert_eq!(r.rows.len(), 3);
        for row in &r.rows {
            assert!(row[2] <= row[3]);
            assert!(row[4] <= row[1], "non-linear above linear: {row:?}");
        }
    }
}
