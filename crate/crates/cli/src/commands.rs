use omp_lab::bounds::{bounds_to_csv, BoundKind, BoundResult};
use omp_lab::montecarlo::{run_experiment, ErrorPolicy, ExperimentConfig, ExperimentResult};
use omp_lab::phi::validate_phi_empirical;
use omp_lab::{bound_curve, PhiFunction, SignalCase, VERSION};
use serde::Serialize;

use crate::args::{BoundArgs, PhiChoice, PlotPhiArgs, SimulateArgs, ValidatePhiArgs};
use crate::error::CliError;
use crate::output::{file_stem, Formats, OutputDir};
use crate::plot::{LinePlot, Series};

const DEFAULT_M_SWEEP: &str = "100:50:1000";

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn parse_list<T: std::str::FromStr>(flag: &str, s: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    let items = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| usage(format!("{flag}: cannot parse {p:?}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if items.is_empty() {
        return Err(usage(format!("{flag} needs at least one value")));
    }
    Ok(items)
}

/// `lo:step:hi`, inclusive of `hi` when it lies on the grid.
pub fn parse_sweep(s: &str) -> Result<Vec<usize>, CliError> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let [lo, step, hi] = parts[..] else {
        return Err(usage(format!("--m-sweep expects lo:step:hi, got {s:?}")));
    };
    let num = |p: &str| p.parse::<usize>().map_err(|e| usage(format!("--m-sweep: cannot parse {p:?}: {e}")));
    let (lo, step, hi) = (num(lo)?, num(step)?, num(hi)?);
    if step == 0 || lo > hi {
        return Err(usage(format!("--m-sweep {s:?}: need step >= 1 and lo <= hi")));
    }
    Ok((lo..=hi).step_by(step).collect())
}

fn m_values(m: Option<&str>, sweep: Option<&str>) -> Result<Vec<usize>, CliError> {
    let mut values = match (m, sweep) {
        (Some(_), Some(_)) => return Err(usage("give either --m or --m-sweep, not both")),
        (Some(list), None) => parse_list::<usize>("--m", list)?,
        (None, Some(sweep)) => parse_sweep(sweep)?,
        (None, None) => parse_sweep(DEFAULT_M_SWEEP)?,
    };
    values.sort_unstable();
    values.dedup();
    Ok(values)
}

pub fn phi_from(choice: PhiChoice, alpha: Option<f64>) -> Result<PhiFunction, CliError> {
    match choice {
        PhiChoice::Cs => Ok(PhiFunction::CauchySchwarz),
        PhiChoice::Gauss => Ok(PhiFunction::GaussianEmpirical),
        PhiChoice::Decay => {
            let alpha = alpha.ok_or_else(|| usage("--phi decay requires --alpha <value greater than 1>"))?;
            Ok(PhiFunction::strongly_decaying(alpha)?)
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|e| e.to_string()).unwrap_or_else(|| "-".into())
}

#[derive(Serialize)]
struct BoundDocument<'a> {
    version: &'a str,
    n: usize,
    k: usize,
    phi: PhiFunction,
    new: &'a [BoundResult],
    baseline: &'a [BoundResult],
}

pub fn bound(args: &BoundArgs) -> Result<(), CliError> {
    let formats = Formats::parse(args.common.formats.as_deref())?;
    let phi = phi_from(args.phi, args.alpha)?;
    if args.alpha.is_some() && args.phi != PhiChoice::Decay {
        log::warn!("--alpha is ignored unless --phi decay");
    }
    let ms = m_values(args.m.as_deref(), args.m_sweep.as_deref())?;
    let new = bound_curve(&ms, args.n, args.k, phi, BoundKind::New)?;
    let baseline = bound_curve(&ms, args.n, args.k, phi, BoundKind::Baseline)?;

    let mut out = OutputDir::create(&args.common.out_dir)?;
    if formats.csv {
        out.write("new_bound.csv", &bounds_to_csv(&new))?;
        out.write("baseline_bound.csv", &bounds_to_csv(&baseline))?;
    }
    if formats.json {
        out.write_json(
            "bounds.json",
            &BoundDocument { version: VERSION, n: args.n, k: args.k, phi, new: &new, baseline: &baseline },
        )?;
    }
    if formats.svg {
        let plot = LinePlot {
            title: format!("Recovery bounds, n = {}, K = {}, phi = {}", args.n, args.k, phi),
            x_label: "m".into(),
            y_label: "probability of exact recovery".into(),
            y_range: Some((0.0, 1.0)),
            series: vec![
                Series::new("New BD", new.iter().map(|r| (r.m as f64, r.value)).collect()),
                Series::new("Existing BD", baseline.iter().map(|r| (r.m as f64, r.value)).collect()).dashed(),
            ],
        };
        out.write("bounds.svg", &plot.render())?;
    }

    println!("n = {}, K = {}, phi = {}", args.n, args.k, phi);
    println!("{:>6}  {:>22}  {:>22}  {:>22}  {:>22}", "m", "new bound", "eps*", "existing bound", "eps*");
    for (a, b) in new.iter().zip(&baseline) {
        let show = |r: &BoundResult| if r.feasible { r.value.to_string() } else { "0 (infeasible)".into() };
        println!(
            "{:>6}  {:>22}  {:>22}  {:>22}  {:>22}",
            a.m,
            show(a),
            fmt_opt(a.epsilon_star),
            show(b),
            fmt_opt(b.epsilon_star)
        );
    }
    Ok(())
}

pub fn experiment_config(args: &SimulateArgs) -> Result<ExperimentConfig, CliError> {
    let mut k_values = parse_list::<usize>("--K", &args.k)?;
    k_values.sort_unstable();
    k_values.dedup();
    let mut cases: Vec<SignalCase> = Vec::new();
    for case in parse_list::<SignalCase>("--case", &args.case)? {
        if !cases.contains(&case) {
            cases.push(case);
        }
    }
    let config = ExperimentConfig {
        n: args.n,
        k_values,
        m_values: m_values(args.m.as_deref(), args.m_sweep.as_deref())?,
        cases,
        trials: args.trials,
        master_seed: args.seed,
        tolerance: args.tolerance,
        error_policy: if args.skip_errors { ErrorPolicy::SkipAndLog } else { ErrorPolicy::FailFast },
    };
    config.validate()?;
    Ok(config)
}

pub fn recovery_plot(result: &ExperimentResult, k: usize, case: SignalCase) -> LinePlot {
    let curve = result.curve(k, case);
    let pts = |f: fn(&omp_lab::PointResult) -> f64| curve.iter().map(|p| (p.m as f64, f(p))).collect::<Vec<_>>();
    LinePlot {
        title: format!("n = {}, K = {}, {}", result.config.n, k, case),
        x_label: "m".into(),
        y_label: "probability of exact recovery".into(),
        y_range: Some((0.0, 1.0)),
        series: vec![
            Series::new("Empirical", pts(|p| p.empirical_prob)),
            Series::new("New BD", pts(|p| p.new_bound)).dashed(),
            Series::new("Existing BD", pts(|p| p.existing_bound)).dashed(),
        ],
    }
}

#[derive(Serialize)]
struct ExperimentDocument<'a> {
    version: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
    points: &'a [omp_lab::PointResult],
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let formats = Formats::parse(args.common.formats.as_deref())?;
    let config = experiment_config(args)?;
    let mut out = OutputDir::create(&args.common.out_dir)?;
    log::info!(
        "running {} trials at {} m values x {} K values x {} cases",
        config.trials,
        config.m_values.len(),
        config.k_values.len(),
        config.cases.len()
    );
    let result = run_experiment(&config)?;

    if formats.csv {
        out.write("experiment.csv", &result.to_csv())?;
    }
    if formats.json {
        out.write_json(
            "experiment.json",
            &ExperimentDocument { version: &result.version, seed: config.master_seed, config: &config, points: &result.points },
        )?;
    }
    if formats.svg {
        for &k in &config.k_values {
            for &case in &config.cases {
                let name = format!("recovery_K{}_{}.svg", k, file_stem(&case.to_string()));
                out.write(&name, &recovery_plot(&result, k, case).render())?;
            }
        }
    }

    println!("{:>6} {:>4} {:>12} {:>10} {:>12} {:>12}", "m", "K", "case", "empirical", "new bound", "existing");
    for p in &result.points {
        println!(
            "{:>6} {:>4} {:>12} {:>10.4} {:>12.6} {:>12.6}",
            p.m,
            p.k,
            p.case.to_string(),
            p.empirical_prob,
            p.new_bound,
            p.existing_bound
        );
    }
    let skipped: u64 = result.points.iter().map(|p| p.skipped).sum();
    if skipped > 0 {
        println!("skipped trials: {skipped}");
    }
    Ok(())
}

#[derive(Serialize)]
struct PhiValidationDocument<'a> {
    version: &'a str,
    seed: u64,
    trials: u64,
    threshold: f64,
    min_probability: f64,
    report: &'a omp_lab::PhiValidationReport,
}

pub fn validate_phi(args: &ValidatePhiArgs) -> Result<(), CliError> {
    let formats = Formats::parse(args.common.formats.as_deref())?;
    let phi = phi_from(args.phi, args.alpha)?;
    if !(0.0..=1.0).contains(&args.threshold) {
        return Err(usage("--threshold must lie in [0, 1]"));
    }
    let report = validate_phi_empirical(args.t_max, args.trials, args.seed, phi)?;
    let min = report.min_probability();

    let mut out = OutputDir::create(&args.common.out_dir)?;
    if formats.csv {
        out.write("phi_validation.csv", &report.to_csv())?;
    }
    if formats.json {
        out.write_json(
            "phi_validation.json",
            &PhiValidationDocument {
                version: VERSION,
                seed: args.seed,
                trials: args.trials,
                threshold: args.threshold,
                min_probability: min,
                report: &report,
            },
        )?;
    }
    if formats.svg {
        let pts = report.rows.iter().map(|r| (r.t as f64, r.empirical_probability)).collect();
        let lo = (min - 0.002).clamp(0.0, args.threshold - 0.002).max(0.0);
        let plot = LinePlot {
            title: format!("P(||x||_1^2 / ||x||_2^2 <= phi(t)), phi = {phi}, {} trials", args.trials),
            x_label: "t".into(),
            y_label: "empirical probability".into(),
            y_range: Some((lo, 1.0)),
            series: vec![
                Series::new("Empirical", pts),
                Series::new(format!("threshold {}", args.threshold), vec![(1.0, args.threshold), (args.t_max as f64, args.threshold)])
                    .dashed(),
            ],
        };
        out.write("phi_validation.svg", &plot.render())?;
    }

    let worst = report
        .rows
        .iter()
        .min_by(|a, b| a.empirical_probability.total_cmp(&b.empirical_probability))
        .map(|r| r.t)
        .unwrap_or(1);
    println!("min probability {min} at t = {worst} (threshold {})", args.threshold);
    if min < args.threshold {
        return Err(CliError::Threshold(format!(
            "min probability {min} at t = {worst} is below threshold {}",
            args.threshold
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct PhiCurve {
    alpha: f64,
    phi: PhiFunction,
    t: Vec<usize>,
    values: Vec<f64>,
}

pub fn plot_phi(args: &PlotPhiArgs) -> Result<(), CliError> {
    let formats = Formats::parse(args.common.formats.as_deref())?;
    if args.t_min == 0 || args.t_min > args.t_max {
        return Err(usage("need 1 <= --t-min <= --t-max"));
    }
    let alphas = parse_list::<f64>("--alpha", &args.alpha)?;
    let mut curves = Vec::with_capacity(alphas.len());
    for alpha in alphas {
        // alpha -> 1 recovers phi(t) = t
        let phi = if alpha == 1.0 {
            PhiFunction::CauchySchwarz
        } else if alpha > 1.0 {
            PhiFunction::strongly_decaying(alpha)?
        } else {
            return Err(usage(format!("--alpha {alpha}: values must be 1 or greater than 1")));
        };
        let t: Vec<usize> = (args.t_min..=args.t_max).collect();
        let values = t.iter().map(|&t| phi.eval(t)).collect::<Result<Vec<_>, _>>()?;
        curves.push(PhiCurve { alpha, phi, t, values });
    }

    let mut out = OutputDir::create(&args.common.out_dir)?;
    if formats.csv {
        let mut csv = String::from("t,alpha,phi\n");
        for c in &curves {
            for (t, v) in c.t.iter().zip(&c.values) {
                csv.push_str(&format!("{t},{},{v}\n", c.alpha));
            }
        }
        out.write("phi_curves.csv", &csv)?;
    }
    if formats.json {
        out.write_json("phi_curves.json", &curves)?;
    }
    if formats.svg {
        let plot = LinePlot {
            title: "phi(t) for several alpha".into(),
            x_label: "t".into(),
            y_label: "phi(t)".into(),
            y_range: None,
            series: curves
                .iter()
                .map(|c| {
                    let pts = c.t.iter().zip(&c.values).map(|(&t, &v)| (t as f64, v)).collect();
                    Series::new(format!("alpha = {}", c.alpha), pts)
                })
                .collect(),
        };
        out.write("phi_curves.svg", &plot.render())?;
    }
    for c in &curves {
        let last = c.values.last().copied().unwrap_or(f64::NAN);
        println!("alpha = {}: phi({}) = {last}", c.alpha, args.t_max);
    }
    Ok(())
}
