//! Merges CSV files from earlier runs into combined plots. The file kind is
//! recognised from its header.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::args::ReportArgs;
use crate::commands::parse_list;
use crate::error::CliError;
use crate::output::{Formats, OutputDir};
use crate::plot::{LinePlot, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Experiment,
    Bound,
    PhiValidation,
    PhiCurves,
}

struct Table {
    source: String,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, CliError> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let headers = reader
            .headers()
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = reader
            .records()
            .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let source = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(Self { source, headers, rows })
    }

    fn kind(&self) -> Option<Kind> {
        let has = |c: &str| self.headers.iter().any(|h| h == c);
        if has("empirical_prob") && has("case") {
            Some(Kind::Experiment)
        } else if has("bound_name") {
            Some(Kind::Bound)
        } else if has("empirical_probability") {
            Some(Kind::PhiValidation)
        } else if has("alpha") && has("phi") {
            Some(Kind::PhiCurves)
        } else {
            None
        }
    }

    fn col(&self, name: &str) -> Result<usize, CliError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("{}: missing column {name:?}", self.source)))
    }

    fn num(&self, row: &[String], col: usize) -> Result<f64, CliError> {
        row[col]
            .parse::<f64>()
            .map_err(|e| CliError::Usage(format!("{}: bad number {:?}: {e}", self.source, row[col])))
    }
}

type Curves = BTreeMap<String, Vec<(f64, f64)>>;

fn push(curves: &mut Curves, name: String, p: (f64, f64)) {
    let pts = curves.entry(name).or_default();
    if !pts.contains(&p) {
        pts.push(p);
    }
}

fn sorted(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts
}

/// Per K: one empirical curve per (file, case) and the bounds dashed.
fn experiment_plots(tables: &[&Table]) -> Result<Vec<(String, LinePlot)>, CliError> {
    let label_files = tables.len() > 1;
    let mut by_k: BTreeMap<usize, (Curves, Curves)> = BTreeMap::new();
    for t in tables {
        let (cm, ck, cc, cp, cn, ce) =
            (t.col("m")?, t.col("K")?, t.col("case")?, t.col("empirical_prob")?, t.col("new_bound")?, t.col("existing_bound")?);
        for row in &t.rows {
            let k: usize = row[ck]
                .parse()
                .map_err(|e| CliError::Usage(format!("{}: bad K {:?}: {e}", t.source, row[ck])))?;
            let m = t.num(row, cm)?;
            let case = &row[cc];
            let label = if label_files { format!("{} {case}", t.source) } else { case.clone() };
            let (solid, dashed) = by_k.entry(k).or_default();
            push(solid, format!("{label} empirical"), (m, t.num(row, cp)?));
            push(dashed, format!("{case} new BD"), (m, t.num(row, cn)?));
            push(dashed, "existing BD".into(), (m, t.num(row, ce)?));
        }
    }
    Ok(by_k
        .into_iter()
        .map(|(k, (solid, dashed))| {
            let mut series: Vec<Series> = solid.into_iter().map(|(n, p)| Series::new(n, sorted(p))).collect();
            series.extend(dashed.into_iter().map(|(n, p)| Series::new(n, sorted(p)).dashed()));
            let plot = LinePlot {
                title: format!("Exact recovery, K = {k}"),
                x_label: "m".into(),
                y_label: "probability of exact recovery".into(),
                y_range: Some((0.0, 1.0)),
                series,
            };
            (format!("report_recovery_K{k}.svg"), plot)
        })
        .collect())
}

fn bound_plot(tables: &[&Table]) -> Result<LinePlot, CliError> {
    let mut curves = Curves::new();
    for t in tables {
        let (cm, ck, cv, cp, cb, cval) =
            (t.col("m")?, t.col("K")?, t.col("phi_variant")?, t.col("phi_param")?, t.col("bound_name")?, t.col("value")?);
        for row in &t.rows {
            let phi = match (row[cv].as_str(), row[cp].as_str()) {
                ("none", _) => String::new(),
                (v, "") => format!(" {v}"),
                (v, p) => format!(" {v}({p})"),
            };
            let name = format!("{}{phi} K={}", row[cb], row[ck]);
            push(&mut curves, name, (t.num(row, cm)?, t.num(row, cval)?));
        }
    }
    Ok(LinePlot {
        title: "Recovery bounds".into(),
        x_label: "m".into(),
        y_label: "probability of exact recovery".into(),
        y_range: Some((0.0, 1.0)),
        series: curves
            .into_iter()
            .map(|(n, p)| {
                let s = Series::new(n.clone(), sorted(p));
                if n.starts_with("baseline") { s.dashed() } else { s }
            })
            .collect(),
    })
}

fn xy_plot(tables: &[&Table], x: &str, y: &str, split: Option<&str>, title: &str) -> Result<LinePlot, CliError> {
    let mut curves = Curves::new();
    for t in tables {
        let (cx, cy) = (t.col(x)?, t.col(y)?);
        let cs = split.map(|s| t.col(s)).transpose()?;
        for row in &t.rows {
            let name = match cs {
                Some(c) => format!("{} {} = {}", t.source, split.unwrap_or_default(), row[c]),
                None => t.source.clone(),
            };
            push(&mut curves, name, (t.num(row, cx)?, t.num(row, cy)?));
        }
    }
    Ok(LinePlot {
        title: title.into(),
        x_label: x.into(),
        y_label: y.into(),
        y_range: None,
        series: curves.into_iter().map(|(n, p)| Series::new(n, sorted(p))).collect(),
    })
}

pub fn report(args: &ReportArgs) -> Result<(), CliError> {
    let formats = Formats::parse(args.common.formats.as_deref())?;
    if !formats.svg {
        return Err(CliError::Usage("report only produces svg output".into()));
    }
    let paths = parse_list::<PathBuf>("--inputs", &args.inputs)?;
    let tables = paths.iter().map(|p| Table::read(p)).collect::<Result<Vec<_>, _>>()?;
    let mut groups: BTreeMap<Kind, Vec<&Table>> = BTreeMap::new();
    for (t, p) in tables.iter().zip(&paths) {
        let kind = t
            .kind()
            .ok_or_else(|| CliError::Usage(format!("{}: unrecognised CSV header", p.display())))?;
        groups.entry(kind).or_default().push(t);
    }

    let mut out = OutputDir::create(&args.common.out_dir)?;
    for (kind, group) in &groups {
        match kind {
            Kind::Experiment => {
                for (name, plot) in experiment_plots(group)? {
                    out.write(&name, &plot.render())?;
                }
            }
            Kind::Bound => out.write("report_bounds.svg", &bound_plot(group)?.render())?,
            Kind::PhiValidation => out.write(
                "report_phi_validation.svg",
                &xy_plot(group, "t", "empirical_probability", None, "Disparity condition, empirical probability")?.render(),
            )?,
            Kind::PhiCurves => out.write("report_phi_curves.svg", &xy_plot(group, "t", "phi", Some("alpha"), "phi(t)")?.render())?,
        }
    }
    for path in out.written() {
        println!("{}", path.display());
    }
    Ok(())
}
