use std::fs;
use std::path::Path;

use qmetro_core::bounds::{
    extended_channel_qfi, minimize_beta0, minimize_finite_adaptive, minimize_finite_parallel, simulation_bound,
};
use qmetro_core::channels::tensor_power;
use qmetro_core::strategies::{
    default_eta_grid, figure4_table, formula_point, parallel_qfi, ratio_curve, sequential_closed_form,
    sequential_numeric,
};
use qmetro_core::{
    BoundReport, BoundScheme, ChannelModel, Complex64, ComplexMatrix, Error, Method, Scheme, SeesawOptions,
    SolverOptions, StateFamily, StrategyOptions, StrategyPoint,
};
use serde::{Deserialize, Serialize};

use crate::output::{emit, g17, json, Csv};
use crate::{BoundArgs, EtaArgs, Failure, Fig3Args, Fig4Args, Format, OutputArgs, QfiArgs, RangeArgs, SolverArgs};

#[derive(Serialize)]
struct Config<'a, A: Serialize> {
    command: &'static str,
    #[serde(flatten)]
    args: &'a A,
}

fn eta_values(a: &EtaArgs) -> Result<Vec<f64>, Failure> {
    match (a.eta, a.eta_min, a.eta_max, a.points) {
        (Some(eta), ..) => Ok(vec![eta]),
        (None, Some(lo), Some(hi), Some(points)) => {
            if points == 0 || (points == 1 && lo != hi) || lo > hi {
                return Err(Failure::Usage(format!(
                    "invalid grid: {points} points on [{lo}, {hi}] (need eta-min <= eta-max and at least 2 points for a range)"
                )));
            }
            if points == 1 {
                return Ok(vec![lo]);
            }
            let step = (hi - lo) / (points - 1) as f64;
            Ok((0..points)
                .map(|k| if k + 1 == points { hi } else { lo + step * k as f64 })
                .collect())
        }
        _ => Err(Failure::Usage(
            "either --eta or --eta-min/--eta-max/--points is required".into(),
        )),
    }
}

fn n_values(a: &RangeArgs) -> Result<Vec<usize>, Failure> {
    let ns: Vec<usize> = match (a.n, a.n_max) {
        (_, Some(max)) => (1..=max).collect(),
        (Some(n), None) => vec![n],
        (None, None) => vec![1],
    };
    if ns.is_empty() || ns[0] == 0 {
        return Err(Failure::Core(Error::Domain("N must be at least 1".into())));
    }
    Ok(ns)
}

fn strategy_options(s: &SolverArgs, ancilla: Option<usize>) -> StrategyOptions {
    let mut seesaw = SeesawOptions {
        restarts: s.restarts,
        seed: s.seed,
        ..Default::default()
    };
    let mut solver = SolverOptions {
        pad: s.pad,
        ..Default::default()
    };
    if let Some(tol) = s.tol {
        seesaw.tol = tol;
        solver.tol = tol;
    }
    StrategyOptions {
        seesaw,
        solver,
        ancilla_dim: ancilla,
    }
}

fn default_method(scheme: Scheme) -> Method {
    match scheme {
        Scheme::Sequential => Method::ClosedForm,
        Scheme::Parallel => Method::Seesaw,
        Scheme::Ancilla => Method::KrausMin,
        Scheme::AdaptiveBound | Scheme::Knysh | Scheme::Universal => Method::Formula,
    }
}

fn write<C: Serialize, R: Serialize>(
    out: &OutputArgs,
    config: &C,
    results: &[R],
    csv: impl FnOnce() -> String,
) -> Result<(), Failure> {
    let text = match out.format {
        Format::Csv => csv(),
        Format::Json => json(config, results),
    };
    emit(&text, out.out.as_deref())?;
    Ok(())
}

pub fn strategy_point(
    model: ChannelModel,
    eta: f64,
    n: usize,
    scheme: Scheme,
    method: Method,
    opts: &StrategyOptions,
) -> qmetro_core::Result<StrategyPoint> {
    match scheme {
        Scheme::Sequential => {
            let value = match method {
                Method::ClosedForm => {
                    if model == ChannelModel::AmplitudeDamping {
                        return Err(Error::Domain(
                            "the sequential closed form covers dephasing and erasure; use --method seesaw".into(),
                        ));
                    }
                    sequential_closed_form(eta, n)?
                }
                _ => sequential_numeric(&model.build(eta)?, n, &opts.seesaw)?.0,
            };
            StrategyPoint::new(model, eta, n, scheme, value, method)
        }
        Scheme::Parallel | Scheme::Ancilla => parallel_qfi(model, eta, n, scheme == Scheme::Ancilla, method, opts),
        _ => formula_point(model, eta, n, scheme),
    }
}

pub fn qfi(a: &QfiArgs) -> Result<(), Failure> {
    let etas = eta_values(&a.eta)?;
    let ns = n_values(&a.range)?;
    let method = a.method.unwrap_or_else(|| default_method(a.scheme));
    if !a.scheme.allows(method) {
        return Err(Failure::Usage(format!(
            "method {method} is not available for scheme {}",
            a.scheme
        )));
    }
    if a.ancilla.is_some() && !(a.scheme == Scheme::Ancilla && method == Method::Seesaw) {
        return Err(Failure::Usage(
            "--ancilla only applies to --scheme iii with --method seesaw".into(),
        ));
    }
    let opts = strategy_options(&a.solver, a.ancilla);
    let mut points = Vec::with_capacity(etas.len() * ns.len());
    for &eta in &etas {
        for &n in &ns {
            points.push(strategy_point(a.model, eta, n, a.scheme, method, &opts)?);
        }
    }
    write(
        &a.output,
        &Config {
            command: "qfi",
            args: a,
        },
        &points,
        || {
            let mut csv = Csv::new(&["model", "eta", "N", "scheme", "method", "value"]);
            for p in &points {
                csv.row(&[
                    p.model.to_string(),
                    g17(p.eta),
                    p.n.to_string(),
                    p.scheme.to_string(),
                    p.method.to_string(),
                    g17(p.value),
                ]);
            }
            csv.into_string()
        },
    )
}

#[derive(Deserialize)]
struct SigmaFile {
    rho: Vec<Vec<[f64; 2]>>,
    rho_dot: Vec<Vec<[f64; 2]>>,
}

fn matrix(rows: &[Vec<[f64; 2]>]) -> qmetro_core::Result<ComplexMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("sigma matrices must be square".into()));
    }
    let data = rows.iter().flatten().map(|&[re, im]| Complex64::new(re, im)).collect();
    ComplexMatrix::new(n, n, data)
}

pub fn load_sigma(path: &Path) -> Result<StateFamily, Failure> {
    let text = fs::read_to_string(path)?;
    let file: SigmaFile = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("cannot parse sigma file {}: {e}", path.display())))?;
    Ok(StateFamily::new(matrix(&file.rho)?, matrix(&file.rho_dot)?)?)
}

#[derive(Serialize)]
pub struct BoundRow {
    #[serde(serialize_with = "crate::display")]
    pub model: ChannelModel,
    pub eta: f64,
    #[serde(flatten)]
    pub report: BoundReport,
}

pub fn bound_report(
    model: ChannelModel,
    eta: f64,
    n: usize,
    scheme: BoundScheme,
    sigma: Option<&StateFamily>,
    solver: &SolverOptions,
) -> qmetro_core::Result<BoundReport> {
    let ch = model.build(eta)?;
    let pad = solver.pad;
    Ok(match scheme {
        BoundScheme::AsymptoticBeta0 => {
            let mut rep = minimize_beta0(&ch, pad, solver)?;
            rep.value *= n as f64;
            rep.n = n;
            rep
        }
        BoundScheme::FiniteParallel => minimize_finite_parallel(&ch, n, pad, solver)?,
        BoundScheme::FiniteAdaptive => minimize_finite_adaptive(&ch, n, pad, solver)?,
        BoundScheme::ExtendedExact => {
            let mut rep = extended_channel_qfi(&tensor_power(&ch, n)?.compressed()?, pad, solver)?;
            rep.n = n;
            rep
        }
        BoundScheme::Simulation => {
            let sigma = sigma.ok_or_else(|| Error::Domain("the simulation scheme needs --sigma".into()))?;
            BoundReport {
                scheme,
                n,
                value: simulation_bound(sigma, n)?,
                generator: None,
                residual_beta_norm: None,
                certificate: None,
            }
        }
    })
}

pub fn bound(a: &BoundArgs) -> Result<(), Failure> {
    let sigma = match (&a.sigma, a.scheme) {
        (Some(path), BoundScheme::Simulation) => Some(load_sigma(path)?),
        (None, BoundScheme::Simulation) => {
            return Err(Failure::Usage("--scheme simulation requires --sigma <file>".into()));
        }
        (Some(_), _) => return Err(Failure::Usage("--sigma only applies to --scheme simulation".into())),
        (None, _) => None,
    };
    let etas = eta_values(&a.eta)?;
    let ns = n_values(&a.range)?;
    let solver = strategy_options(&a.solver, None).solver;
    let mut rows = Vec::new();
    for &eta in &etas {
        for &n in &ns {
            let report = bound_report(a.model, eta, n, a.scheme, sigma.as_ref(), &solver)?;
            rows.push(BoundRow {
                model: a.model,
                eta,
                report,
            });
        }
    }
    write(
        &a.output,
        &Config {
            command: "bound",
            args: a,
        },
        &rows,
        || {
            let mut csv = Csv::new(&[
                "model",
                "eta",
                "N",
                "scheme",
                "value",
                "residual_beta_norm",
                "converged",
            ]);
            for r in &rows {
                csv.row(&[
                    r.model.to_string(),
                    g17(r.eta),
                    r.report.n.to_string(),
                    r.report.scheme.to_string(),
                    g17(r.report.value),
                    r.report.residual_beta_norm.map(g17).unwrap_or_default(),
                    r.report.converged().to_string(),
                ]);
            }
            csv.into_string()
        },
    )?;
    let stuck: Vec<String> = rows
        .iter()
        .filter(|r| !r.report.converged())
        .map(|r| format!("eta={} N={}", r.eta, r.report.n))
        .collect();
    if stuck.is_empty() {
        Ok(())
    } else {
        Err(Failure::NotConverged(stuck.join(", ")))
    }
}

#[derive(Serialize)]
pub struct Fig3Row {
    pub eta: f64,
    pub ratio_deph_erasure: f64,
    pub ratio_ampdamp_ceiling: f64,
}

pub fn fig3_rows(grid: &[f64]) -> qmetro_core::Result<Vec<Fig3Row>> {
    Ok(ratio_curve(ChannelModel::AmplitudeDamping, grid)?
        .into_iter()
        .map(|p| Fig3Row {
            eta: p.eta,
            ratio_deph_erasure: p.ratio,
            ratio_ampdamp_ceiling: p.ceiling.expect("amplitude damping ceiling"),
        })
        .collect())
}

pub fn fig3(a: &Fig3Args) -> Result<(), Failure> {
    let grid = if a.eta.eta.is_none() && a.eta.eta_min.is_none() {
        default_eta_grid()
    } else {
        eta_values(&a.eta)?
    };
    let rows = fig3_rows(&grid)?;
    write(
        &a.output,
        &Config {
            command: "fig3",
            args: a,
        },
        &rows,
        || {
            let mut csv = Csv::new(&["eta", "ratio_deph_erasure", "ratio_ampdamp_ceiling"]);
            for r in &rows {
                csv.row(&[g17(r.eta), g17(r.ratio_deph_erasure), g17(r.ratio_ampdamp_ceiling)]);
            }
            csv.into_string()
        },
    )
}

#[derive(Serialize)]
pub struct Fig4Row {
    #[serde(rename = "N")]
    pub n: usize,
    pub f_ii: f64,
    pub f_iii: f64,
    pub knysh: f64,
    pub universal: f64,
}

pub fn fig4(a: &Fig4Args) -> Result<(), Failure> {
    let opts = strategy_options(&a.solver, None);
    let table = figure4_table(a.eta, a.n_max, &opts)?;
    let rows: Vec<Fig4Row> = table
        .chunks(4)
        .map(|c| Fig4Row {
            n: c[0].n,
            f_ii: c[0].value,
            f_iii: c[1].value,
            knysh: c[2].value,
            universal: c[3].value,
        })
        .collect();
    write(
        &a.output,
        &Config {
            command: "fig4",
            args: a,
        },
        &rows,
        || {
            let mut csv = Csv::new(&["N", "f_ii", "f_iii", "knysh", "universal"]);
            for r in &rows {
                csv.row(&[
                    r.n.to_string(),
                    g17(r.f_ii),
                    g17(r.f_iii),
                    g17(r.knysh),
                    g17(r.universal),
                ]);
            }
            csv.into_string()
        },
    )
}
