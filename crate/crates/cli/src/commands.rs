use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde_json::{json, Map, Value};

use qnd_core::fock::{oracle_adaptive, OracleError};
use qnd_core::interferometer::{build_lossy_network, lossless_coefficients, lossy_coefficients, PROBE};
use qnd_core::metrics::{coherent_moments, conditional_moments, holland_criteria, qnd_correlation};
use qnd_core::sweep::{
    extract_contour, optimize_g2, optimized_ratio_grid, sweep_c, unit_axis, ScalarGrid, SweepError, SweepGrid,
};
use qnd_core::{LossModel, MetricsError};

use crate::config::{RunConfig, ValidationError};
use crate::FieldArg;

/// Input-domain problems become validation errors, the rest stay runtime.
fn metrics_error(err: MetricsError) -> anyhow::Error {
    match err {
        MetricsError::DegenerateVariance { .. } => anyhow!(err),
        other => ValidationError(other.to_string()).into(),
    }
}

fn sweep_error(err: SweepError) -> anyhow::Error {
    match err {
        SweepError::Metrics(m) => metrics_error(m),
        other => ValidationError(other.to_string()).into(),
    }
}

fn config_value(config: &RunConfig) -> Value {
    serde_json::to_value(config).expect("config serializes")
}

fn print_json(value: &Value) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn model_name(config: &RunConfig) -> &'static str {
    if config.lossy {
        "lossy"
    } else {
        "lossless"
    }
}

pub fn coeffs(config: &RunConfig, json: bool) -> anyhow::Result<()> {
    let params = config.params();
    let phi = config.phase();
    let values = if config.lossy {
        let k = lossy_coefficients(&params, phi);
        vec![("A", k.a), ("B", k.b), ("C", k.c), ("D", k.d), ("E", k.e), ("F", k.f), ("G", k.g)]
    } else {
        let k = lossless_coefficients(&params, phi);
        vec![("A", k.a), ("B", k.b), ("C", k.c), ("D", k.d), ("E", k.e), ("F", k.f)]
    };
    if json {
        let mut coefficients = Map::new();
        for (name, z) in &values {
            coefficients.insert(name.to_string(), json!({"re": z.re, "im": z.im}));
        }
        return print_json(&json!({
            "config": config_value(config),
            "model": model_name(config),
            "phi": phi,
            "coefficients": coefficients,
        }));
    }
    println!("model {}  phi = {phi:.17e}", model_name(config));
    println!("{:<4}{:>26}{:>26}", "", "re", "im");
    for (name, z) in values {
        println!("{name:<4}{:>26.17e}{:>26.17e}", z.re, z.im);
    }
    Ok(())
}

pub fn qnd(config: &RunConfig, json: bool) -> anyhow::Result<()> {
    let params = config.params();
    let loss = config.loss_model();
    let moments = coherent_moments(&params, config.n_beta, config.method, loss).map_err(metrics_error)?;
    let corr = moments.correlation().map_err(metrics_error)?;
    let holland = holland_criteria(&params, config.n_beta, config.method, loss).map_err(metrics_error)?;
    if json {
        return print_json(&json!({
            "config": config_value(config),
            "moments": moments,
            "c2": corr.c2,
            "c": corr.c,
            "criteria": holland,
        }));
    }
    println!("model    {} ({:?})", model_name(config), config.method);
    println!("<X>      {:.17e}", moments.mean_x);
    println!("var X    {:.17e}", moments.var_x);
    println!("<N>      {:.17e}", moments.mean_n);
    println!("var N    {:.17e}", moments.var_n);
    println!("cov N,X  {:.17e}", moments.cov_nx);
    println!("C^2      {:.17e}", corr.c2);
    println!("C        {:.17e}", corr.c);
    println!(
        "criteria signal-signal {} signal-probe {:.17e} probe-probe {:.17e}",
        holland.signal_signal, holland.signal_probe, holland.probe_probe
    );
    Ok(())
}

pub fn snr(config: &RunConfig, json: bool) -> anyhow::Result<()> {
    let m = conditional_moments(&config.params(), config.n_b, config.loss_model());
    let ratio = m.mean * m.mean / m.variance;
    if json {
        return print_json(&json!({
            "config": config_value(config),
            "n_b": config.n_b,
            "mean_x": m.mean,
            "var_x": m.variance,
            "snr": ratio,
        }));
    }
    println!("n_b    {}", config.n_b);
    println!("<X>    {:.17e}", m.mean);
    println!("var X  {:.17e}", m.variance);
    println!("SNR    {:.17e}", ratio);
    Ok(())
}

fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("cannot write {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn full(x: f64) -> String {
    format!("{x:.16e}")
}

fn run_sweep(config: &RunConfig, optimize: bool) -> anyhow::Result<SweepGrid> {
    let axis = unit_axis(config.grid);
    let params = config.params();
    let grid = if optimize {
        optimized_ratio_grid(&params, config.n_beta, &axis, &axis, config.g2_bounds(), config.method)
    } else {
        sweep_c(&params, config.n_beta, &axis, &axis, config.method)
    };
    grid.map_err(sweep_error)
}

pub fn sweep(config: &RunConfig, optimize: bool, output: Option<&Path>) -> anyhow::Result<()> {
    let grid = run_sweep(config, optimize)?;
    let mut writer = csv::Writer::from_writer(open_output(output)?);
    let mut header = vec!["eta1", "eta2", "C"];
    if optimize {
        header.extend(["g2_opt", "C_opt"]);
    }
    writer.write_record(&header)?;
    for (i, &eta1) in grid.eta1_axis.iter().enumerate() {
        for (j, &eta2) in grid.eta2_axis.iter().enumerate() {
            let mut record = vec![full(eta1), full(eta2), full(grid.correlation(i, j))];
            if let Some(opt) = grid.optimum(i, j) {
                record.extend([full(opt.g2), full(opt.c)]);
            }
            writer.write_record(&record)?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn optimize(config: &RunConfig, json: bool) -> anyhow::Result<()> {
    let params = config.params();
    let bounds = config.g2_bounds();
    let opt = optimize_g2(&params, config.n_beta, bounds, config.method).map_err(sweep_error)?;
    let at_g1 = qnd_correlation(&params.with_g2(params.g1), config.n_beta, config.method, LossModel::Lossy)
        .map_err(metrics_error)?
        .c;
    let ratio = opt.g2 / params.g1;
    if json {
        return print_json(&json!({
            "config": config_value(config),
            "g2_lo": bounds.0,
            "g2_hi": bounds.1,
            "g2_opt": opt.g2,
            "ratio": ratio,
            "c_opt": opt.c,
            "c_at_g1": at_g1,
            "at_boundary": opt.at_boundary,
        }));
    }
    println!("bounds      [{}, {}]", bounds.0, bounds.1);
    println!("g2*         {:.17e}", opt.g2);
    println!("g2*/g1      {:.17e}", ratio);
    println!("C*          {:.17e}", opt.c);
    println!("C(g2 = g1)  {:.17e}", at_g1);
    if opt.at_boundary {
        println!("optimum lies on a search bound");
    }
    Ok(())
}

/// Reads a sweep CSV written by `sweep` back into a grid of one column.
fn read_sweep(path: &Path, field: FieldArg, g1: f64) -> anyhow::Result<ScalarGrid> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ValidationError(format!("{}: missing column `{name}`", path.display())))
    };
    let (c1, c2) = (column("eta1")?, column("eta2")?);
    let value_column = match field {
        FieldArg::C => column("C")?,
        FieldArg::COpt => column("C_opt")?,
        FieldArg::Ratio => column("g2_opt")?,
    };
    let mut eta1_axis: Vec<f64> = Vec::new();
    let mut eta2_axis: Vec<f64> = Vec::new();
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let get = |k: usize| -> anyhow::Result<f64> {
            record
                .get(k)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| ValidationError(format!("{}: bad value in row {}", path.display(), row + 2)).into())
        };
        let (e1, e2) = (get(c1)?, get(c2)?);
        if eta1_axis.last() != Some(&e1) {
            eta1_axis.push(e1);
        }
        if eta1_axis.len() == 1 {
            eta2_axis.push(e2);
        }
        let v = get(value_column)?;
        values.push(if field == FieldArg::Ratio { v / g1 } else { v });
    }
    if eta1_axis.is_empty() || values.len() != eta1_axis.len() * eta2_axis.len() {
        bail!(ValidationError(format!("{}: not a row-major rectangular sweep", path.display())));
    }
    Ok(ScalarGrid::new(eta1_axis, eta2_axis, values))
}

pub fn contour(config: &RunConfig, input: Option<&Path>, field: FieldArg, output: Option<&Path>) -> anyhow::Result<()> {
    let grid = match input {
        Some(path) => read_sweep(path, field, config.g1)?,
        None => {
            let sweep = run_sweep(config, field != FieldArg::C)?;
            let which = match field {
                FieldArg::C => qnd_core::sweep::Field::Correlation,
                FieldArg::COpt => qnd_core::sweep::Field::OptimizedCorrelation,
                FieldArg::Ratio => qnd_core::sweep::Field::OptimizedRatio,
            };
            sweep.field(which).expect("optimized layer present")
        }
    };
    let set = extract_contour(&grid, config.level);
    let mut out = open_output(output)?;
    serde_json::to_writer(&mut out, &json!({"level": set.level, "polylines": set.polylines}))?;
    writeln!(out)?;
    Ok(())
}

pub fn oracle(config: &RunConfig, json: bool) -> anyhow::Result<()> {
    let params = config.params();
    let result = oracle_adaptive(&params, config.n_b, config.cutoff, config.max_cutoff).map_err(|e| match e {
        OracleError::Truncation { .. } | OracleError::NotConverged { .. } => anyhow!(e),
        other => ValidationError(other.to_string()).into(),
    })?;
    let engine = build_lossy_network(&params, params.phase_for(config.n_b as f64))
        .quadrature_moments(PROBE)
        .map_err(|e| anyhow!(e))?;
    let difference = (result.mean - engine.mean).abs().max((result.variance - engine.variance).abs());
    if json {
        return print_json(&json!({
            "config": config_value(config),
            "cutoff": result.cutoff,
            "deficit": result.deficit,
            "oracle": {"mean_x": result.mean, "var_x": result.variance},
            "engine": {"mean_x": engine.mean, "var_x": engine.variance},
            "difference": difference,
        }));
    }
    println!("cutoff      {} (norm deficit {:.2e})", result.cutoff, result.deficit);
    println!("oracle      <X> {:.17e}  var X {:.17e}", result.mean, result.variance);
    println!("engine      <X> {:.17e}  var X {:.17e}", engine.mean, engine.variance);
    println!("difference  {:.3e}", difference);
    Ok(())
}
