//! Parameter sweeps driven by a JSON config, and CSV/JSON writers.
//!
//! Points are the Cartesian product of the axes in the fixed order
//! lambda | squeezing_db, alpha | margin, phi, theta, nu, x, seed, with the
//! last axis varying fastest. Points are evaluated in parallel and written in
//! index order.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::run::{
    density_rows, feasibility_record, run_pipeline, AlphaChoice, DensityGrid, Fidelity, Outcome, Squeezing, StateParams,
};

/// Upper bound on the number of sweep points.
pub const MAX_POINTS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    Run,
    Sample,
    Feasibility,
    Density,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axes {
    pub lambda: Option<Vec<f64>>,
    pub squeezing_db: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
    /// Resource margin `αφ / rhs`; `α` is solved from it. Feasibility only.
    pub margin: Option<Vec<f64>>,
    pub phi: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
    pub nu: Option<Vec<f64>>,
    pub x: Option<Vec<f64>>,
    pub seed: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub mode: Mode,
    #[serde(default)]
    pub axes: Axes,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub fidelity: Fidelity,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub paper_quoted: bool,
    /// Attach the success probability to RUN and SAMPLE records.
    #[serde(default)]
    pub compute_ps: bool,
    #[serde(default)]
    pub density_grid: Option<DensityGrid>,
    #[serde(default)]
    pub n_max: Option<usize>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("sweep config: {e}")))
    }
}

/// One point of the Cartesian product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub squeezing: Squeezing,
    pub alpha: AlphaChoice,
    pub phi: f64,
    pub theta: f64,
    pub nu: Option<f64>,
    pub x: Option<f64>,
    pub seed: Option<u64>,
}

/// Validated axes with the per-mode requirements applied.
#[derive(Debug, Clone)]
struct Grid {
    squeezing: Vec<Squeezing>,
    alpha: Vec<AlphaChoice>,
    phi: Vec<f64>,
    theta: Vec<f64>,
    nu: Vec<Option<f64>>,
    x: Vec<Option<f64>>,
    seed: Vec<Option<u64>>,
}

fn required<T: Clone>(axis: &Option<Vec<T>>, name: &str, mode: Mode) -> Result<Vec<T>> {
    match axis {
        Some(v) if !v.is_empty() => Ok(v.clone()),
        Some(_) => Err(Error::Config(format!("axis '{name}' is empty"))),
        None => Err(Error::Config(format!("{mode:?} mode needs the '{name}' axis"))),
    }
}

fn optional<T: Copy>(axis: &Option<Vec<T>>, name: &str, used: bool, mode: Mode) -> Result<Vec<Option<T>>> {
    match (axis, used) {
        (None, _) => Ok(vec![None]),
        (Some(_), false) => Err(Error::Config(format!("axis '{name}' is not used in {mode:?} mode"))),
        (Some(v), true) if v.is_empty() => Err(Error::Config(format!("axis '{name}' is empty"))),
        (Some(v), true) => Ok(v.iter().copied().map(Some).collect()),
    }
}

impl Grid {
    fn new(axes: &Axes, mode: Mode) -> Result<Self> {
        let squeezing = match (&axes.lambda, &axes.squeezing_db) {
            (Some(_), Some(_)) => return Err(Error::Config("give exactly one of 'lambda' and 'squeezing_db'".into())),
            (Some(_), None) => required(&axes.lambda, "lambda", mode)?
                .into_iter()
                .map(Squeezing::Lambda)
                .collect(),
            (None, Some(_)) => required(&axes.squeezing_db, "squeezing_db", mode)?
                .into_iter()
                .map(Squeezing::Db)
                .collect(),
            (None, None) => return Err(Error::Config("one of 'lambda' and 'squeezing_db' is required".into())),
        };
        let alpha = match (&axes.alpha, &axes.margin, mode) {
            (Some(_), Some(_), _) => return Err(Error::Config("give at most one of 'alpha' and 'margin'".into())),
            (None, Some(_), Mode::Feasibility) => required(&axes.margin, "margin", mode)?
                .into_iter()
                .map(AlphaChoice::Margin)
                .collect(),
            (None, Some(_), _) => return Err(Error::Config("axis 'margin' is only used in FEASIBILITY mode".into())),
            _ => required(&axes.alpha, "alpha", mode)?
                .into_iter()
                .map(AlphaChoice::Given)
                .collect(),
        };
        let theta = match &axes.theta {
            None => vec![std::f64::consts::FRAC_PI_2],
            Some(_) => required(&axes.theta, "theta", mode)?,
        };
        let nu = if mode == Mode::Feasibility {
            required(&axes.nu, "nu", mode)?.into_iter().map(Some).collect()
        } else {
            optional(&axes.nu, "nu", false, mode)?
        };
        let x = if mode == Mode::Run {
            required(&axes.x, "x", mode)?.into_iter().map(Some).collect()
        } else {
            optional(&axes.x, "x", false, mode)?
        };
        let seed = if mode == Mode::Sample {
            required(&axes.seed, "seed", mode)?.into_iter().map(Some).collect()
        } else {
            optional(&axes.seed, "seed", false, mode)?
        };
        Ok(Self {
            squeezing,
            alpha,
            phi: required(&axes.phi, "phi", mode)?,
            theta,
            nu,
            x,
            seed,
        })
    }

    fn sizes(&self) -> [usize; 7] {
        [
            self.squeezing.len(),
            self.alpha.len(),
            self.phi.len(),
            self.theta.len(),
            self.nu.len(),
            self.x.len(),
            self.seed.len(),
        ]
    }

    fn len(&self) -> Result<usize> {
        self.sizes()
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .filter(|&n| n <= MAX_POINTS)
            .ok_or_else(|| Error::Config(format!("sweep exceeds {MAX_POINTS} points")))
    }

    fn point(&self, mut index: usize) -> Point {
        let mut digits = [0usize; 7];
        for (d, n) in digits.iter_mut().zip(self.sizes()).rev() {
            *d = index % n;
            index /= n;
        }
        Point {
            squeezing: self.squeezing[digits[0]],
            alpha: self.alpha[digits[1]],
            phi: self.phi[digits[2]],
            theta: self.theta[digits[3]],
            nu: self.nu[digits[4]],
            x: self.x[digits[5]],
            seed: self.seed[digits[6]],
        }
    }
}

/// All points of the config in output order.
pub fn points(config: &SweepConfig) -> Result<Vec<Point>> {
    let grid = Grid::new(&config.axes, config.mode)?;
    Ok((0..grid.len()?).map(|i| grid.point(i)).collect())
}

/// Evaluates `f` on every item with at most `jobs` threads; output keeps input order
/// and the first failing item (by index) decides the error.
pub fn par_map_ordered<T, R, F>(items: &[T], jobs: Option<usize>, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<R>> = pool.install(|| items.par_iter().map(&f).collect());
    results.into_iter().collect()
}

/// Output of a sweep, as a list of serializable rows.
pub enum Rows {
    Run(Vec<crate::run::RunRecord>),
    Density(Vec<crate::run::DensityRow>),
    Feasibility(Vec<crate::run::FeasibilityRecord>),
}

impl Rows {
    pub fn len(&self) -> usize {
        match self {
            Rows::Run(r) => r.len(),
            Rows::Density(r) => r.len(),
            Rows::Feasibility(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write(&self, format: Format, out: impl Write) -> Result<()> {
        match self {
            Rows::Run(r) => write_rows(r, format, true, out),
            Rows::Density(r) => write_rows(r, format, true, out),
            Rows::Feasibility(r) => write_rows(r, format, true, out),
        }
    }
}

fn state_params(p: &Point, n_max: Option<usize>) -> StateParams {
    let alpha = match p.alpha {
        AlphaChoice::Given(a) => a,
        AlphaChoice::Margin(_) => unreachable!("margin axis is rejected outside FEASIBILITY mode"),
    };
    StateParams {
        squeezing: p.squeezing,
        alpha,
        phi: p.phi,
        theta: p.theta,
        n_max,
    }
}

pub fn run_sweep(config: &SweepConfig) -> Result<Rows> {
    let pts = points(config)?;
    let jobs = config.jobs;
    Ok(match config.mode {
        Mode::Run => Rows::Run(par_map_ordered(&pts, jobs, |p| {
            let x = p.x.expect("RUN points carry x");
            run_pipeline(&state_params(p, config.n_max), Outcome::Given(x), config.compute_ps)
        })?),
        Mode::Sample => Rows::Run(par_map_ordered(&pts, jobs, |p| {
            let seed = p.seed.expect("SAMPLE points carry a seed");
            run_pipeline(
                &state_params(p, config.n_max),
                Outcome::Sampled { seed },
                config.compute_ps,
            )
        })?),
        Mode::Density => Rows::Density(
            par_map_ordered(&pts, jobs, |p| {
                density_rows(
                    &state_params(p, config.n_max),
                    config.density_grid,
                    config.fidelity,
                    config.paper_quoted,
                )
            })?
            .into_iter()
            .flatten()
            .collect(),
        ),
        Mode::Feasibility => Rows::Feasibility(par_map_ordered(&pts, jobs, |p| {
            let nu = p.nu.expect("FEASIBILITY points carry nu");
            feasibility_record(p.squeezing, nu, p.alpha, p.phi, p.theta, config.paper_quoted)
        })?),
    })
}

/// Formats one cell: floats as `{:.16e}` (17 significant digits), integers
/// and booleans verbatim, missing values empty.
fn cell(value: &Value) -> Result<String> {
    Ok(match value {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) if !n.is_f64() => u.to_string(),
            (_, Some(i), _) if !n.is_f64() => i.to_string(),
            (_, _, Some(f)) => format!("{f:.16e}"),
            _ => return Err(Error::Contract(format!("unrepresentable number {n}"))),
        },
        Value::String(s) => s.clone(),
        other => return Err(Error::Contract(format!("nested value {other} in a flat record"))),
    })
}

/// Writes flat records as CSV (header from field names, `\n` line ends) or
/// JSON (an array, or a single object when `array` is false and there is one row).
pub fn write_rows<T: Serialize>(rows: &[T], format: Format, array: bool, out: impl Write) -> Result<()> {
    match format {
        Format::Json => {
            let mut out = out;
            if !array && rows.len() == 1 {
                serde_json::to_writer_pretty(&mut out, &rows[0])?;
            } else {
                serde_json::to_writer_pretty(&mut out, rows)?;
            }
            writeln!(out)?;
            Ok(())
        }
        Format::Csv => {
            let mut writer = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(out);
            let mut header: Option<Vec<String>> = None;
            for row in rows {
                let Value::Object(map) = serde_json::to_value(row)? else {
                    return Err(Error::Contract("records must serialize as objects".into()));
                };
                let keys: Vec<String> = map.keys().cloned().collect();
                match &header {
                    None => {
                        writer.write_record(&keys)?;
                        header = Some(keys);
                    }
                    Some(h) if *h != keys => {
                        return Err(Error::Contract("records disagree on their columns".into()));
                    }
                    Some(_) => {}
                }
                let cells = map.values().map(cell).collect::<Result<Vec<_>>>()?;
                writer.write_record(&cells)?;
            }
            writer.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(json: &str) -> SweepConfig {
        SweepConfig::from_json(json).unwrap()
    }

    #[test]
    fn last_axis_varies_fastest() {
        let c = config(r#"{"mode":"RUN","axes":{"lambda":[0.1,0.2],"alpha":[1.0],"phi":[0.1],"x":[0.0,1.0,2.0]}}"#);
        let pts = points(&c).unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1].x, Some(1.0));
        assert_eq!(pts[3].squeezing, Squeezing::Lambda(0.2));
        assert_eq!(pts[3].x, Some(0.0));
        assert_eq!(pts[0].theta, std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn config_errors() {
        for bad in [
            r#"{"mode":"RUN","axes":{"lambda":[0.1],"squeezing_db":[3.0],"alpha":[1.0],"phi":[0.1],"x":[0.0]}}"#,
            r#"{"mode":"RUN","axes":{"alpha":[1.0],"phi":[0.1],"x":[0.0]}}"#,
            r#"{"mode":"RUN","axes":{"lambda":[0.1],"alpha":[1.0],"phi":[0.1]}}"#,
            r#"{"mode":"RUN","axes":{"lambda":[],"alpha":[1.0],"phi":[0.1],"x":[0.0]}}"#,
            r#"{"mode":"RUN","axes":{"lambda":[0.1],"alpha":[1.0],"phi":[0.1],"x":[0.0],"nu":[0.9]}}"#,
            r#"{"mode":"SAMPLE","axes":{"lambda":[0.1],"margin":[1.0],"phi":[0.1],"seed":[1]}}"#,
        ] {
            let err = points(&config(bad)).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}: {err}");
        }
        assert!(SweepConfig::from_json(r#"{"mode":"WALK"}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"mode":"RUN","colour":1}"#).is_err());
    }

    #[test]
    fn size_guard() {
        let many: Vec<String> = (0..1000).map(|i| format!("{}", i as f64 * 1e-3)).collect();
        let axis = format!("[{}]", many.join(","));
        let json =
            format!(r#"{{"mode":"RUN","axes":{{"lambda":{axis},"alpha":{axis},"phi":{axis},"x":[0.0, 1.0, 2.0]}}}}"#);
        assert!(matches!(points(&config(&json)), Err(Error::Config(_))));
    }

    #[test]
    fn parallel_order_matches_serial() {
        let c =
            config(r#"{"mode":"SAMPLE","axes":{"lambda":[0.3,0.5],"alpha":[1.5],"phi":[0.01,0.02],"seed":[1,2,3]}}"#);
        let serial = run_sweep(&SweepConfig {
            jobs: Some(1),
            ..c.clone()
        })
        .unwrap();
        let parallel = run_sweep(&SweepConfig { jobs: Some(4), ..c }).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        serial.write(Format::Csv, &mut a).unwrap();
        parallel.write(Format::Csv, &mut b).unwrap();
        assert_eq!(a, b);
        assert_eq!(serial.len(), 12);
    }

    #[test]
    fn csv_cells() {
        #[derive(Serialize)]
        struct Row {
            a: f64,
            b: Option<f64>,
            c: bool,
            d: u64,
        }
        let mut out = Vec::new();
        write_rows(
            &[Row {
                a: 0.5,
                b: None,
                c: true,
                d: u64::MAX,
            }],
            Format::Csv,
            true,
            &mut out,
        )
        .unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "a,b,c,d\n5.0000000000000000e-1,,true,18446744073709551615\n");
    }

    #[test]
    fn feasibility_sweep_with_margin() {
        let c = config(
            r#"{"mode":"FEASIBILITY","axes":{"lambda":[0.5],"margin":[1.0],"phi":[1e-9,1e-5,1e-2],"nu":[0.9]}}"#,
        );
        let Rows::Feasibility(rows) = run_sweep(&c).unwrap() else {
            panic!()
        };
        let alphas: Vec<f64> = rows.iter().map(|r| r.alpha).collect();
        assert!((alphas[0] / 2.5e7 - 1.0).abs() < 0.02);
        assert!((alphas[1] / 2.5e3 - 1.0).abs() < 0.02);
        assert!((alphas[2] / 2.5 - 1.0).abs() < 0.02);
    }
}
