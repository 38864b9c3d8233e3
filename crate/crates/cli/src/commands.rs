use std::fs;
use std::process::ExitCode;
use std::str::FromStr;

use mcf::cf::{
    digit_first_f64, evaluate, evaluate_with_tail, expand, parse_digits, shift_f64, Digit,
    FundamentalInterval,
};
use mcf::chain::{simulate_trajectory, stationarity_grid};
use mcf::gauss_kuzmin::{decay_curve, evolved_cdf_monte_carlo, InitialDistribution};
use mcf::io::{load_grid, save_grid, GridSidecar};
use mcf::measures::{check_rect_preserved, gamma_cdf, gamma_density, MeasureParams, Rect};
use mcf::transfer::{
    pf_apply_sized, pf_iterate, uniform_nodes, variation, variation_bound_constant, DensityEvolution, GridFunction,
    PfMetadata, WeightParams, DEFAULT_TAIL_TOL,
};
use mcf::{Error, ExactRational, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Command, Format, GridInput, MeasureCommand, PfCommand, RunConfig};

/// A command-line number: `p/q` is exact, anything else is a float.
enum Point {
    Exact(ExactRational),
    Float(f64),
}

impl Point {
    fn parse(s: &str) -> Result<Self> {
        if s.contains('/') {
            return Ok(Point::Exact(ExactRational::from_str(s)?));
        }
        s.trim()
            .parse::<f64>()
            .map(Point::Float)
            .map_err(|_| Error::Parse(format!("not a number: {s:?}")))
    }

    fn to_f64(&self) -> f64 {
        match self {
            Point::Exact(r) => r.to_f64(),
            Point::Float(x) => *x,
        }
    }

    fn to_exact(&self) -> Result<ExactRational> {
        match self {
            Point::Exact(r) => Ok(r.clone()),
            Point::Float(x) => ExactRational::from_f64(*x),
        }
    }
}

fn float_arg(s: &str) -> Result<f64> {
    Ok(Point::parse(s)?.to_f64())
}

fn emit<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn finite_digits(text: &str) -> Result<Vec<u32>> {
    parse_digits(text)?
        .into_iter()
        .map(|d| d.finite().ok_or_else(|| Error::MalformedExpansion("expected finite digits only".into())))
        .collect()
}

pub fn run(cfg: &RunConfig, cmd: &Command) -> Result<ExitCode> {
    let format = cfg.format.unwrap_or(Format::Json);
    match cmd {
        Command::Expand { x, max_digits } => expand_cmd(cfg.m, x, *max_digits, format)?,
        Command::Eval { digits, tail } => eval_cmd(cfg.m, digits, tail.as_deref(), format)?,
        Command::Interval { digits } => interval_cmd(cfg.m, digits, format)?,
        Command::Measure { command } => measure_cmd(cfg, command, format)?,
        Command::Pf { command } => pf_cmd(cfg, command, format)?,
        Command::Simulate { steps, t0 } => {
            simulate_cmd(cfg, *steps, t0, cfg.format.unwrap_or(Format::Csv))?
        }
        Command::Stationarity { grid } => {
            let reports = stationarity_grid(*grid, cfg.m, cfg.quad_tol)?;
            if format == Format::Csv {
                println!("u,lhs,rhs,residual");
                for r in &reports {
                    println!("{},{},{},{}", r.u, r.lhs, r.rhs, r.residual);
                }
            } else {
                for r in &reports {
                    emit(r)?;
                }
            }
        }
        Command::Gk { n, mu0, interp, out, curve, x_grid, monte_carlo } => {
            let mu0 = if mu0 == "lebesgue" {
                InitialDistribution::Lebesgue
            } else {
                let (h, _) = load_grid(mu0.as_ref(), (*interp).into())?;
                InitialDistribution::grid_density(h)?
            };
            let report = decay_curve(&mu0, *n, cfg.m, *x_grid)?;
            if let Some(path) = curve {
                fs::write(path, report.to_csv())?;
            }
            let mut value = serde_json::to_value(&report)?;
            if let Some(samples) = monte_carlo {
                let agreement = route_agreement(&mu0, *n, cfg, *samples)?;
                value["route_agreement"] = agreement;
            }
            match out {
                Some(path) => fs::write(path, serde_json::to_string_pretty(&value)? + "\n")?,
                None if format == Format::Csv => print!("{}", report.to_csv()),
                None => println!("{}", serde_json::to_string(&value)?),
            }
        }
        Command::Selftest => return selftest_cmd(format),
    }
    Ok(ExitCode::SUCCESS)
}

fn expand_cmd(m: u32, x: &str, max_digits: usize, format: Format) -> Result<()> {
    let (digits, terminated, overflow) = match Point::parse(x)? {
        Point::Exact(r) => {
            let e = expand(&r, m, max_digits)?;
            (e.digits, e.terminated, e.overflow)
        }
        Point::Float(mut v) => {
            if max_digits == 0 {
                return Err(Error::Domain("max_digits must be positive".into()));
            }
            let mut digits = Vec::new();
            let mut terminated = false;
            while digits.len() < max_digits {
                match digit_first_f64(v, m)? {
                    Digit::Terminal => {
                        terminated = true;
                        break;
                    }
                    Digit::Finite(a) => digits.push(a),
                }
                v = shift_f64(v, m)?;
            }
            if !terminated && v == 0.0 {
                terminated = true;
            }
            let overflow = !terminated;
            (digits, terminated, overflow)
        }
    };
    if format == Format::Csv {
        println!("index,digit");
        for (i, a) in digits.iter().enumerate() {
            println!("{},{a}", i + 1);
        }
        if terminated {
            println!("{},inf", digits.len() + 1);
        }
        return Ok(());
    }
    let mut obj = json!({ "digits": digits, "terminated": terminated });
    if overflow {
        obj["overflow"] = Value::Bool(true);
    }
    println!("{obj}");
    Ok(())
}

fn eval_cmd(m: u32, digits: &str, tail: Option<&str>, format: Format) -> Result<()> {
    let value = match tail {
        Some(t) => evaluate_with_tail(&finite_digits(digits)?, &Point::parse(t)?.to_exact()?, m)?,
        None => evaluate(&parse_digits(digits)?, m)?,
    };
    if format == Format::Csv {
        println!("value,approx\n{value},{}", value.to_f64());
    } else {
        emit(&json!({ "value": value, "approx": value.to_f64() }))?;
    }
    Ok(())
}

fn interval_cmd(m: u32, digits: &str, format: Format) -> Result<()> {
    let iv = FundamentalInterval::new(&finite_digits(digits)?, m)?;
    if format == Format::Csv {
        println!("lower,upper,measure");
        println!("{},{},{}", iv.lower, iv.upper, iv.measure);
        return Ok(());
    }
    let mut obj = serde_json::to_value(&iv)?;
    obj["approx"] = json!({
        "lower": iv.lower.to_f64(),
        "upper": iv.upper.to_f64(),
        "measure": iv.measure.to_f64(),
    });
    emit(&obj)
}

fn measure_cmd(cfg: &RunConfig, cmd: &MeasureCommand, format: Format) -> Result<()> {
    let m = cfg.m;
    match cmd {
        MeasureCommand::Cdf { x } | MeasureCommand::Density { x } => {
            let xf = float_arg(x)?;
            let (name, v) = match cmd {
                MeasureCommand::Cdf { .. } => ("cdf", gamma_cdf(xf, m)?),
                _ => ("density", gamma_density(xf, m)?),
            };
            if format == Format::Csv {
                println!("x,{name}\n{xf},{v}");
            } else {
                let mut obj = json!({ "m": m, "x": xf });
                obj[name] = json!(v);
                emit(&obj)?;
            }
        }
        MeasureCommand::Invariance { grid } => {
            if *grid == 0 {
                return Err(Error::Domain("grid must be positive".into()));
            }
            let params = MeasureParams::new(m)?;
            if format == Format::Csv {
                println!("u,preimage,cdf,residual");
            }
            for j in 1..=*grid {
                let u = j as f64 / *grid as f64;
                // branch sum continued until it is below rounding
                let pre = params.shift_preimage_measure(u, 1e-17)?;
                let cdf = params.cdf(u)?;
                let residual = (pre - cdf).abs();
                if format == Format::Csv {
                    println!("{u},{pre},{cdf},{residual}");
                } else {
                    emit(&json!({ "u": u, "preimage": pre, "cdf": cdf, "residual": residual }))?;
                }
            }
        }
        MeasureCommand::ExtensionCheck { x_lo, x_hi, y_lo, y_hi } => {
            let r = Rect::new(float_arg(x_lo)?, float_arg(x_hi)?, float_arg(y_lo)?, float_arg(y_hi)?)?;
            let report = check_rect_preserved(&r, &MeasureParams::new(m)?)?;
            if format == Format::Csv {
                println!("measure_before,measure_after,residual");
                println!("{},{},{}", report.measure_before, report.measure_after, report.residual);
            } else {
                emit(&report)?;
            }
        }
    }
    Ok(())
}

fn load_input(g: &GridInput) -> Result<GridFunction> {
    Ok(load_grid(&g.input, g.interp.into())?.0)
}

fn write_grid_output(
    f: &GridFunction,
    meta: &PfMetadata,
    iterations: usize,
    output: Option<&std::path::Path>,
) -> Result<()> {
    let sidecar = GridSidecar::from_metadata(f.interpolation(), meta, iterations);
    match output {
        Some(path) => {
            save_grid(path, f, &sidecar)?;
            emit(&sidecar)
        }
        None => {
            let mut out = std::io::stdout().lock();
            mcf::io::write_grid_csv(&mut out, f)
        }
    }
}

fn pf_cmd(cfg: &RunConfig, cmd: &PfCommand, format: Format) -> Result<()> {
    let params = WeightParams::new(cfg.m, cfg.tail_tol)?;
    match cmd {
        PfCommand::Apply { grid, output } => {
            let f = load_input(grid)?;
            let img = pf_apply_sized(&f, &params, cfg.grid_size)?;
            write_grid_output(&img.function, &img.metadata, 1, output.as_deref())
        }
        PfCommand::Iterate { grid, n, output } => {
            let f = load_input(grid)?;
            let img = pf_iterate(&f, &params, *n, cfg.grid_size)?;
            write_grid_output(&img.function, &img.metadata, *n, output.as_deref())
        }
        PfCommand::Variation { grid } => {
            let f = load_input(grid)?;
            let img = pf_apply_sized(&f, &params, cfg.grid_size)?;
            let km = variation_bound_constant(cfg.m)?;
            let (v, vi) = (variation(&f), variation(&img.function));
            let bound = km.to_f64() * v;
            if format == Format::Csv {
                println!("variation,image_variation,k_m,bound");
                println!("{v},{vi},{},{bound}", km.to_f64());
                Ok(())
            } else {
                emit(&json!({
                    "m": cfg.m,
                    "variation": v,
                    "image_variation": vi,
                    "k_m": km,
                    "k_m_value": km.to_f64(),
                    "bound": bound,
                    "within_bound": vi <= bound + 1e-9,
                }))
            }
        }
    }
}

fn simulate_cmd(cfg: &RunConfig, steps: usize, t0: &str, format: Format) -> Result<()> {
    let tr = simulate_trajectory(cfg.seed, steps, cfg.m, float_arg(t0)?)?;
    if format == Format::Json {
        return emit(&tr);
    }
    let mut out = String::with_capacity(steps * 24);
    out.push_str("step,digit,state\n");
    for (n, (d, t)) in tr.digits.iter().zip(&tr.states[1..]).enumerate() {
        out.push_str(&format!("{},{d},{t}\n", n + 1));
    }
    print!("{out}");
    Ok(())
}

fn route_agreement(mu0: &InitialDistribution, n_max: usize, cfg: &RunConfig, samples: usize) -> Result<Value> {
    let xs = uniform_nodes(257);
    let mut evo = DensityEvolution::new(mu0.density(), WeightParams::new(cfg.m, DEFAULT_TAIL_TOL)?)?;
    let mut rows = Vec::new();
    for n in [1usize, 3, 5].into_iter().filter(|&n| n <= n_max) {
        evo.advance_to(n)?;
        let op = evo.cdf_on(&xs);
        let mc = evolved_cdf_monte_carlo(mu0, n, cfg.m, &xs, samples, cfg.seed)?;
        let dist = op.iter().zip(&mc.cdf).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rows.push(json!({
            "n": n,
            "sup_distance": dist,
            "ks_bound": mc.ks_bound,
            "within_3_ks": dist <= 3.0 * mc.ks_bound,
            "restarts": mc.restarts,
        }));
    }
    Ok(Value::Array(rows))
}

fn selftest_cmd(format: Format) -> Result<ExitCode> {
    let results = mcf::selftest::run()?;
    let failed = results.iter().filter(|r| !r.passed).count();
    if format == Format::Csv {
        println!("name,passed,detail");
        for r in &results {
            println!("{},{},{}", csv_field(&r.name), r.passed, csv_field(&r.detail));
        }
    } else {
        for r in &results {
            emit(r)?;
        }
        emit(&json!({ "passed": results.len() - failed, "failed": failed }))?;
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
