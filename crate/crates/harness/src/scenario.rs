use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use hyperflow::analysis::{
    default_samples, fit_decay, pointwise_certificate, weight_residual, weighted_energy, DecayPrediction, WeightField,
};
use hyperflow::fit::linear_fit;
use hyperflow::flow::{run, FlowTrace};
use hyperflow::geometry::{hyperbolicity, perturb, WarpedMetric};
use hyperflow::grid::RadialGrid;
use hyperflow::integrals::{convolution_integral, convolution_ratio_curve, sphere_area, ConvolutionQuery, QuadSpec};
use hyperflow::io::{curvature_records, json_line, trace_table, write_metric, Table};
use hyperflow::spectral::{
    comparison_margin, find_epsilon0_with, function_bottom, minimize_tensor_quotient, sample_tensor_quotients,
    SplineFamily, TensorOptions,
};
use hyperflow::IntegralError;
use serde_json::json;

use crate::config::{ConfigError, ExperimentConfig, Scenario};
use crate::manifest::{Criterion, RunManifest};

type Step = Result<(), String>;

/// Writes artifacts under the output directory and remembers their names.
struct Sink {
    dir: Option<PathBuf>,
    files: Vec<String>,
}

impl Sink {
    fn write(&mut self, name: &str, contents: &str) -> Step {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
        }
        fs::write(&path, contents).map_err(|e| format!("{}: {e}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Runs a validated config as the `scenario` subcommand.
pub fn run_scenario(cfg: &ExperimentConfig) -> Result<RunManifest, ConfigError> {
    run_command("scenario", cfg)
}

/// Runs `cfg` under the given subcommand name. `flow-run` only evolves and
/// exports; every other name runs the scenario the config names. Module
/// errors end the run early and leave a partial manifest with `error` set.
pub fn run_command(command: &str, cfg: &ExperimentConfig) -> Result<RunManifest, ConfigError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut man = RunManifest::new(command, cfg.clone());
    let mut sink = Sink { dir: cfg.output_dir.clone(), files: Vec::new() };
    let res = if command == "flow-run" {
        flow_run(cfg, &mut man, &mut sink)
    } else {
        match cfg.scenario {
            Scenario::FixedPoint => fixed_point(cfg, &mut man, &mut sink),
            Scenario::Conformal => conformal(cfg, &mut man, &mut sink),
            Scenario::Theorem1 | Scenario::Theorem2 => theorem(cfg, &mut man, &mut sink),
            Scenario::SpectralSuite => spectral_suite(cfg, &mut man, &mut sink),
            Scenario::ConvolutionSuite => convolution_suite(cfg, &mut man, &mut sink),
            Scenario::ComparisonSuite => comparison_suite(cfg, &mut man, &mut sink),
        }
    };
    if let Err(e) = res {
        man.error = Some(e);
    }
    man.wall_time_s = start.elapsed().as_secs_f64();
    if sink.dir.is_some() {
        man.artifacts = sink.files.clone();
        man.artifacts.push("manifest.json".into());
        let text = man.to_json();
        if let Err(e) = sink.write("manifest.json", &text) {
            man.error.get_or_insert(e);
        }
    }
    Ok(man)
}

/// Reruns the command and config recorded in a manifest without writing
/// artifacts. On the same build the criteria come back bit-identical.
pub fn replay(man: &RunManifest) -> Result<RunManifest, ConfigError> {
    let mut cfg = man.config.clone();
    cfg.output_dir = None;
    run_command(&man.command, &cfg)
}

fn grid(cfg: &ExperimentConfig) -> Result<RadialGrid, String> {
    cfg.grid.build().map_err(err)
}

/// Runs the flow and writes the trace artifacts. A failed run still writes
/// what it has before the error propagates.
fn evolve(cfg: &ExperimentConfig, m0: &WarpedMetric, sink: &mut Sink) -> Result<FlowTrace, String> {
    let tr = run(m0, &cfg.flow).map_err(err)?;
    sink.write("trace.tsv", &trace_table(&tr).to_text())?;
    sink.write("metric_initial.txt", &write_metric(m0))?;
    let last = tr.last();
    sink.write("metric_final.txt", &write_metric(&last.metric))?;
    let rep = hyperbolicity(&last.metric, cfg.delta.unwrap_or(cfg.flow.order_delta)).map_err(err)?;
    sink.write("curvature_final.jsonl", &curvature_records(&last.metric, &last.curvature, Some(&rep)))?;
    let mut events = String::new();
    for e in &tr.events {
        events += &json_line(e).map_err(err)?;
    }
    sink.write("events.jsonl", &events)?;
    if cfg.write_snapshots {
        for (k, st) in tr.states.iter().enumerate() {
            sink.write(&format!("snapshots/metric_{k:05}.txt"), &write_metric(&st.metric))?;
        }
    }
    match &tr.failure {
        Some(f) => Err(f.to_string()),
        None => Ok(tr),
    }
}

fn flow_run(cfg: &ExperimentConfig, man: &mut RunManifest, sink: &mut Sink) -> Step {
    let g = grid(cfg)?;
    let m0 = if cfg.eps > 0.0 {
        perturb(cfg.n, g, cfg.eps, cfg.delta.unwrap_or(cfg.flow.order_delta), &cfg.profile, cfg.seed).map_err(err)?
    } else {
        WarpedMetric::hyperbolic(cfg.n, g).map_err(err)?
    };
    let tr = evolve(cfg, &m0, sink);
    man.criteria.push(Criterion::flag("completed", tr.is_ok()));
    tr.map(|_| ())
}

fn sup_h_max(tr: &FlowTrace) -> f64 {
    tr.sup_h_series.iter().map(|p| p.1).fold(0.0, f64::max)
}

/// Slope of -ln sup|h| over [t_lo, t_hi].
fn temporal_rate(tr: &FlowTrace, t_lo: f64, t_hi: Option<f64>) -> f64 {
    let t_hi = t_hi.unwrap_or(f64::INFINITY);
    let (x, y): (Vec<f64>, Vec<f64>) = tr
        .sup_h_series
        .iter()
        .filter(|(t, h)| *t >= t_lo && *t <= t_hi && *h > 0.0)
        .map(|(t, h)| (*t, -h.ln()))
        .unzip();
    linear_fit(&x, &y).map_or(f64::NAN, |f| f.slope)
}

fn fixed_point(cfg: &ExperimentConfig, man: &mut RunManifest, sink: &mut Sink) -> Step {
    let m0 = WarpedMetric::hyperbolic(cfg.n, grid(cfg)?).map_err(err)?;
    let tr = evolve(cfg, &m0, sink)?;
    man.criteria.push(Criterion::at_most("sup_h_max", sup_h_max(&tr), cfg.checks.fixed_point_tol));
    man.criteria.push(Criterion::at_most("metric_drift", tr.metric_drift(), cfg.checks.drift_tol));
    Ok(())
}

fn conformal(cfg: &ExperimentConfig, man: &mut RunManifest, sink: &mut Sink) -> Step {
    let c0 = cfg.checks.conformal_c0;
    let m0 = WarpedMetric::conformal_hyperbolic(cfg.n, grid(cfg)?, c0).map_err(err)?;
    let tr = evolve(cfg, &m0, sink)?;
    let rate = 2.0 * (cfg.n as f64 - 1.0);
    let interior = m0.grid().interior_len(cfg.flow.collar);
    for &t in &cfg.checks.conformal_times {
        let st = tr
            .states
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .expect("trace is never empty");
        let exact = 1.0 + (c0 - 1.0) * (-rate * st.t).exp();
        let worst = (0..interior).map(|i| (st.metric.a(i).powi(2) - exact).abs() / exact).fold(0.0, f64::max);
        man.criteria.push(Criterion::at_most(&format!("conformal_factor_t{t}"), worst, cfg.checks.conformal_tol));
    }
    let fitted = temporal_rate(&tr, cfg.windows.t_lo, cfg.windows.t_hi);
    man.criteria.push(Criterion::relative("temporal_rate", fitted, rate, cfg.checks.rate_tol));
    Ok(())
}

fn theorem(cfg: &ExperimentConfig, man: &mut RunManifest, sink: &mut Sink) -> Step {
    let delta = cfg.delta.expect("validated");
    let m0 = perturb(cfg.n, grid(cfg)?, cfg.eps, delta, &cfg.profile, cfg.seed).map_err(err)?;
    let tr = evolve(cfg, &m0, sink)?;
    let pred = DecayPrediction::new(cfg.n, delta, cfg.prediction.slack).map_err(err)?;
    let checks = &cfg.checks;

    let eps_curv = tr.eps_series.iter().map(|e| e.eps_curv).fold(0.0, f64::max);
    man.criteria.push(Criterion::at_most("eps_curv_max", eps_curv, checks.eps1));
    let rate = temporal_rate(&tr, cfg.windows.t_lo, cfg.windows.t_hi);
    let (h0, h1) = (tr.sup_h_series[0].1, tr.sup_h_series.last().expect("non-empty").1);
    man.criteria.push(Criterion::flag("sup_h_decays", rate > 0.0 && h1 < h0));
    man.criteria.push(Criterion::at_least("temporal_rate", rate, checks.min_temporal_rate));

    let weight = match checks.weight_t_ref {
        None => WeightField::broad(),
        Some(t_ref) => {
            let w = weight_residual(&tr, 0, t_ref, checks.weight_c5).map_err(err)?;
            man.criteria.push(Criterion::at_most("weight_residual_max", w.max_residual, 0.0));
            w
        }
    };
    let energy = weighted_energy(&tr, &weight).map_err(err)?;
    let mut et = Table::new(&["t", "energy", "log_slope"]);
    for (k, (&t, &e)) in energy.times.iter().zip(&energy.energy).enumerate() {
        let s = if k >= 1 && k <= energy.log_slope.len() { energy.log_slope[k - 1] } else { f64::NAN };
        et.push(vec![t, e, s]);
    }
    sink.write("energy.tsv", &et.to_text())?;
    let worst = energy.slopes().filter(|(t, _)| *t >= cfg.windows.t_lo).map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let bound = -checks.energy_fraction * 2.0 * pred.lambda;
    man.criteria.push(Criterion::at_most("energy_log_slope_max", worst, bound));

    let samples = default_samples(&tr, 8, 4);
    let cert = pointwise_certificate(&tr, &pred, &samples).map_err(err)?;
    sink.write("certificate.json", &json_line(&cert).map_err(err)?)?;

    let report = fit_decay(&tr, &pred, &cfg.windows);
    if cfg.scenario == Scenario::Theorem2 {
        let rep = report.map_err(err)?;
        sink.write("decay_report.json", &json_line(&rep).map_err(err)?)?;
        man.criteria.push(Criterion {
            name: "spatial_order".into(),
            measured: rep.spatial_order.is_finite().then_some(rep.spatial_order),
            expect: "> 2".into(),
            passed: rep.spatial_order > 2.0,
        });
        man.criteria.push(Criterion::flag("curvature_nonpositive", rep.curvature_nonpositive));
        man.criteria.push(Criterion::flag("ricci_bounded_below", rep.ricci_bounded_below));
        man.criteria.push(Criterion::flag("theorem2_verdict", rep.theorem2_verdict));
    } else if let Ok(rep) = report {
        sink.write("decay_report.json", &json_line(&rep).map_err(err)?)?;
    }
    Ok(())
}

fn spectral_suite(cfg: &ExperimentConfig, man: &mut RunManifest, sink: &mut Sink) -> Step {
    let p = &cfg.spectral;
    let n = cfg.n;
    let lambda = (n as f64 - 1.0).powi(2) / 4.0;
    let mut records = String::new();
    let mut values = Vec::new();
    for &r in &p.r_max {
        let m = WarpedMetric::hyperbolic(n, RadialGrid::with_radius(r, p.dr).map_err(err)?).map_err(err)?;
        let est = function_bottom(&m).map_err(err)?;
        records += &json_line(&est).map_err(err)?;
        if n == 3 {
            let exact = 1.0 + (std::f64::consts::PI / m.grid().r_max()).powi(2);
            man.criteria.push(Criterion::at_most(&format!("function_bottom_err_r{r}"), (est.value - exact).abs(), p.exact_tol));
        }
        values.push(est.value);
    }
    man.criteria.push(Criterion::flag("function_bottom_decreasing", values.windows(2).all(|w| w[1] < w[0])));
    man.criteria.push(Criterion::flag("function_bottom_above_lambda", values.iter().all(|&v| v > lambda)));
    if n != 3 {
        let last = *values.last().expect("validated non-empty");
        let r = p.r_max.last().expect("validated non-empty");
        man.criteria.push(Criterion::relative(&format!("function_bottom_r{r}"), last, lambda, p.asymptote_tol));
    }

    let tg = RadialGrid::with_radius(p.tensor_r_max, p.tensor_dr).map_err(err)?;
    let m = WarpedMetric::hyperbolic(n, tg).map_err(err)?;
    let opts = TensorOptions::default();
    let target = lambda + 2.0;
    let samples = sample_tensor_quotients(&m, p.tensor_samples, p.knots, cfg.seed, &opts).map_err(err)?;
    let mut st = Table::new(&["sample", "quotient"]);
    for (k, &q) in samples.iter().enumerate() {
        st.push(vec![k as f64, q]);
    }
    sink.write("tensor_samples.tsv", &st.to_text())?;
    let least = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    man.criteria.push(Criterion::at_least("tensor_sample_min", least, target - p.tensor_slack));
    let family = SplineFamily::new(p.support[0], p.support[1], p.knots).map_err(err)?;
    let (est, _) = minimize_tensor_quotient(&m, &family, &opts).map_err(err)?;
    records += &json_line(&est).map_err(err)?;
    sink.write("spectral.jsonl", &records)?;
    man.criteria.push(Criterion::relative("tensor_minimum", est.value, target, p.minimize_tol));
    Ok(())
}

/// omega_{n-1} * integral_0^inf e^{-c s} sinh^{n-1} s ds, by expanding the
/// power of sinh. Needs c > n - 1.
pub fn convolution_at_origin(n: usize, c: f64) -> f64 {
    let k = n as i32 - 1;
    let mut sum = 0.0;
    let mut binom = 1.0;
    for j in 0..=k {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * binom / (c - (k - 2 * j) as f64);
        binom = binom * (k - j) as f64 / (j + 1) as f64;
    }
    sphere_area(n - 1) * sum / 2f64.powi(k)
}

fn convolution_suite(cfg: &ExperimentConfig, man: &mut RunManifest, sink: &mut Sink) -> Step {
    let p = &cfg.convolution;
    let n = cfg.n;
    let steps = (p.d_max / p.d_step).round() as usize;
    let distances: Vec<f64> = (0..=steps).map(|k| k as f64 * p.d_step).collect();
    let quad = QuadSpec::default();
    let curve = convolution_ratio_curve(n, p.a, p.b, &distances, &quad).map_err(err)?;
    let mut t = Table::new(&["D", "integral", "ratio"]);
    for pt in &curve.points {
        t.push(vec![pt.distance, pt.integral, pt.ratio]);
    }
    sink.write("sweep.tsv", &t.to_text())?;
    let exact = convolution_at_origin(n, p.a + p.b);
    sink.write(
        "summary.json",
        &format!(
            "{}\n",
            json!({
                "n": n, "a": p.a, "b": p.b,
                "empirical_constant": curve.max_ratio,
                "tail_slope": curve.tail_slope,
                "hypotheses_hold": curve.hypotheses_hold,
                "origin_exact": exact,
            })
        ),
    )?;
    man.criteria.push(Criterion::at_most("origin_value_err", (curve.points[0].integral - exact).abs(), p.origin_tol));
    man.criteria.push(Criterion::at_most("tail_slope_abs", curve.tail_slope.abs(), p.slope_tol));
    // a' + b' = n - 1 exactly
    let b = p.b.min((n as f64 - 1.0) / 2.0);
    let q = ConvolutionQuery::new(n, n as f64 - 1.0 - b, b, 1.0);
    man.criteria.push(Criterion::flag("boundary_divergent", matches!(convolution_integral(&q), Err(IntegralError::Divergent { .. }))));
    Ok(())
}

fn comparison_suite(cfg: &ExperimentConfig, man: &mut RunManifest, sink: &mut Sink) -> Step {
    let p = &cfg.comparison;
    let n = cfg.n;
    let delta = cfg.delta.expect("validated");
    let eps0 = find_epsilon0_with(n, delta, p.r_max_scan, p.points).map_err(err)?;
    let l = p.r_max_scan.ln();
    let scan: Vec<f64> = (0..p.points).map(|k| (l * k as f64 / (p.points - 1) as f64).exp()).collect();
    let floor = (n as f64 - 3.0).powi(2) / 4.0;
    let mut t = Table::new(&["r", "margin_eps0", "margin_zero"]);
    let (mut zero_min, mut slack_min) = (f64::INFINITY, f64::INFINITY);
    for &r in &scan {
        let z = comparison_margin(n, 0.0, r).margin;
        let e = comparison_margin(n, eps0, r).margin;
        zero_min = zero_min.min(z);
        slack_min = slack_min.min(e - (floor - delta));
        t.push(vec![r, e, z]);
    }
    sink.write("scan.tsv", &t.to_text())?;
    sink.write("summary.json", &format!("{}\n", json!({ "n": n, "delta": delta, "epsilon0": eps0 })))?;
    man.criteria.push(Criterion::at_least("epsilon0", eps0, p.min_eps0));
    man.criteria.push(Criterion::at_least("predicate_slack_at_eps0", slack_min, 0.0));
    man.criteria.push(Criterion::at_least("margin_at_zero_min", zero_min, floor));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_closed_form() {
        assert!((convolution_at_origin(3, 4.0) - std::f64::consts::PI / 6.0).abs() < 1e-14);
        // n = 4, c = 5: 4 pi / 8 * (1/2 - 3/4 + 3/6 - 1/8)
        let v = convolution_at_origin(4, 5.0);
        let s2 = sphere_area(3);
        assert!((v - s2 / 8.0 * (0.5 - 0.75 + 0.5 - 0.125)).abs() < 1e-14);
    }

    #[test]
    fn fixed_point_passes_and_is_deterministic() {
        let mut cfg = ExperimentConfig::preset(Scenario::FixedPoint);
        cfg.grid.r_max = 6.0;
        cfg.grid.dr = 0.1;
        cfg.flow.t_end = 0.2;
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        assert!(a.passed(), "{a:?}");
        assert_eq!(a.numerics(), b.numerics());
    }

    #[test]
    fn writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::preset(Scenario::Theorem1);
        cfg.n = 4;
        cfg.grid.r_max = 8.0;
        cfg.grid.dr = 0.1;
        cfg.flow.t_end = 0.3;
        cfg.flow.snapshot_stride = 20;
        cfg.windows.t_lo = 0.05;
        cfg.windows.r_lo = 1.0;
        cfg.windows.r_hi = 5.0;
        cfg.write_snapshots = true;
        cfg.output_dir = Some(dir.path().to_path_buf());
        let man = run_scenario(&cfg).unwrap();
        assert!(man.error.is_none(), "{:?}", man.error);
        for f in ["trace.tsv", "metric_final.txt", "energy.tsv", "manifest.json", "snapshots/metric_00000.txt"] {
            assert!(dir.path().join(f).exists(), "{f}");
            assert!(man.artifacts.iter().any(|a| a == f), "{f}");
        }
        let back = RunManifest::from_json(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(back.criteria, man.criteria);
        assert_eq!(replay(&back).unwrap().numerics(), man.numerics());
        let m = hyperflow::io::parse_metric(&fs::read_to_string(dir.path().join("metric_initial.txt")).unwrap()).unwrap();
        assert_eq!(m.dimension(), 4);
    }

    #[test]
    fn module_error_leaves_partial_manifest() {
        let mut cfg = ExperimentConfig::preset(Scenario::Theorem1);
        cfg.grid.r_max = 6.0;
        cfg.grid.dr = 0.1;
        cfg.flow.t_end = 0.3;
        // spatial window outside the interior: fit_decay fails after the flow ran
        cfg.scenario = Scenario::Theorem2;
        cfg.windows.r_hi = 50.0;
        let man = run_scenario(&cfg).unwrap();
        assert!(man.error.as_deref().unwrap_or("").contains("window"), "{:?}", man.error);
        assert!(!man.criteria.is_empty());
        assert!(!man.passed());
    }

    #[test]
    fn invalid_config_is_refused() {
        let mut cfg = ExperimentConfig::preset(Scenario::Theorem2);
        cfg.delta = Some(1.5);
        assert!(run_scenario(&cfg).is_err());
    }
}
