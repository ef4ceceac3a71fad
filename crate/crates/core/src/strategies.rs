//! Scheme-level evaluators for `N` channel uses.
//!
//! | scheme     | meaning                                  |
//! |------------|------------------------------------------|
//! | `i`        | sequential                               |
//! | `ii`       | parallel entangled, no ancilla           |
//! | `iii`      | parallel with passive ancillas           |
//! | `iv-bound` | ceiling on adaptive strategies           |
//! | `knysh`    | no-ancilla amplitude-damping ceiling     |
//! | `universal`| per-probe `β = 0` bound times `N`        |

use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, analytic, finite_n_bound_adaptive, KrausGenerator, SolverOptions};
use crate::channels::{compose, tensor_power, ChannelFamily, ChannelModel};
use crate::error::{check_eta, Error, Result};
use crate::qfi::{default_ancilla_dim, optimize_input, SeesawOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "i")]
    Sequential,
    #[serde(rename = "ii")]
    Parallel,
    #[serde(rename = "iii")]
    Ancilla,
    #[serde(rename = "iv-bound")]
    AdaptiveBound,
    #[serde(rename = "knysh")]
    Knysh,
    #[serde(rename = "universal")]
    Universal,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Sequential,
        Scheme::Parallel,
        Scheme::Ancilla,
        Scheme::AdaptiveBound,
        Scheme::Knysh,
        Scheme::Universal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Sequential => "i",
            Scheme::Parallel => "ii",
            Scheme::Ancilla => "iii",
            Scheme::AdaptiveBound => "iv-bound",
            Scheme::Knysh => "knysh",
            Scheme::Universal => "universal",
        }
    }

    pub fn allows(self, method: Method) -> bool {
        use Method::*;
        matches!(
            (self, method),
            (Scheme::Sequential, ClosedForm | Seesaw)
                | (Scheme::Parallel, Seesaw)
                | (Scheme::Ancilla, Seesaw | KrausMin)
                | (Scheme::AdaptiveBound | Scheme::Knysh | Scheme::Universal, Formula)
        )
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Seesaw,
    KrausMin,
    Formula,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::ClosedForm, Method::Seesaw, Method::KrausMin, Method::Formula];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::Seesaw => "seesaw",
            Method::KrausMin => "kraus-min",
            Method::Formula => "formula",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyPoint {
    pub model: ChannelModel,
    pub eta: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub scheme: Scheme,
    pub value: f64,
    pub method: Method,
}

impl StrategyPoint {
    pub fn new(model: ChannelModel, eta: f64, n: usize, scheme: Scheme, value: f64, method: Method) -> Result<Self> {
        if !scheme.allows(method) {
            return Err(Error::Domain(format!(
                "method {method} is not valid for scheme {scheme}"
            )));
        }
        if value.is_nan() || value < 0.0 {
            return Err(Error::Numeric(format!(
                "negative or undefined value {value} for scheme {scheme}"
            )));
        }
        Ok(Self {
            model,
            eta,
            n,
            scheme,
            value,
            method,
        })
    }
}

/// Budgets shared by the numerical evaluators.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StrategyOptions {
    pub seesaw: SeesawOptions,
    pub solver: SolverOptions,
    /// Ancilla dimension for scheme (iii) see-saws; defaults to the input
    /// dimension of the block.
    pub ancilla_dim: Option<usize>,
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Domain("N must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn check_open_eta(eta: f64) -> Result<()> {
    check_eta(eta)?;
    if eta >= 1.0 {
        return Err(Error::Domain("eta must lie in (0, 1) here".into()));
    }
    Ok(())
}

/// Optimal sequential QFI with the block length `n` treated as continuous.
///
/// `η = 1` is noiseless and gives `N²`.
pub fn sequential_closed_form(eta: f64, n: usize) -> Result<f64> {
    check_eta(eta)?;
    check_n(n)?;
    let nf = n as f64;
    if eta == 1.0 {
        return Ok(nf * nf);
    }
    let ln_inv = -eta.ln();
    Ok(if eta < 1.0 / E {
        nf * eta
    } else if eta <= (-1.0 / nf).exp() {
        nf / (E * ln_inv)
    } else {
        nf * nf * eta.powf(nf)
    })
}

/// Best sequential strategy over integer block lengths.
///
/// Block length `b` runs from 1 to `N`; each block of `b` composed channel
/// uses is optimised by see-saw and scored as `(N/b) F_block`. Returns the
/// best value and its block length.
pub fn sequential_numeric(ch: &ChannelFamily, n: usize, opts: &SeesawOptions) -> Result<(f64, usize)> {
    check_n(n)?;
    if ch.dim_in != ch.dim_out {
        return Err(Error::Dimension(
            "sequential use needs equal input and output dimensions".into(),
        ));
    }
    let mut block = ch.compressed()?;
    let mut best = (f64::NEG_INFINITY, 0);
    for b in 1..=n {
        if b > 1 {
            block = compose(ch, &block)?.compressed()?;
        }
        let f = optimize_input(&block, 1, opts)?.qfi;
        let score = n as f64 / b as f64 * f;
        if score > best.0 {
            best = (score, b);
        }
    }
    Ok(best)
}

/// Optimal QFI of `N` parallel channel uses, scheme (ii) or (iii).
///
/// Without ancilla only [`Method::Seesaw`] applies. With ancilla the value
/// comes either from a see-saw on the extended channel or from the Kraus
/// minimisation over non-product representations ([`Method::KrausMin`]).
pub fn parallel_qfi(
    model: ChannelModel,
    eta: f64,
    n: usize,
    ancilla: bool,
    method: Method,
    opts: &StrategyOptions,
) -> Result<StrategyPoint> {
    check_n(n)?;
    let scheme = if ancilla { Scheme::Ancilla } else { Scheme::Parallel };
    if !scheme.allows(method) {
        return Err(Error::Domain(format!(
            "method {method} is not valid for scheme {scheme}"
        )));
    }
    let block = tensor_power(&model.build(eta)?, n)?;
    let value = match method {
        Method::Seesaw => {
            let ancilla_dim = if ancilla {
                opts.ancilla_dim.unwrap_or_else(|| default_ancilla_dim(&block))
            } else {
                1
            };
            optimize_input(&block, ancilla_dim, &opts.seesaw)?.qfi
        }
        _ => {
            let rep = bounds::extended_channel_qfi(&block.compressed()?, opts.solver.pad, &opts.solver)?;
            if !rep.converged() {
                return Err(Error::Numeric(format!(
                    "Kraus minimisation for {model} eta={eta} N={n} did not converge"
                )));
            }
            rep.value
        }
    };
    StrategyPoint::new(model, eta, n, scheme, value, method)
}

/// `Nη/(1−η)`: asymptotically tight amplitude-damping bound without ancilla.
pub fn knysh_bound(eta: f64, n: usize) -> Result<f64> {
    check_open_eta(eta)?;
    check_n(n)?;
    Ok(n as f64 * (eta / (1.0 - eta)))
}

/// `N` times the per-probe `β = 0` bound, valid for every scheme.
pub fn universal_bound(model: ChannelModel, eta: f64, n: usize) -> Result<f64> {
    check_n(n)?;
    Ok(n as f64 * analytic::beta0_value(model, eta)?)
}

/// Finite-`N` adaptive ceiling at the closed-form generators.
///
/// Evaluates the adaptive bound at `h = 0` and at every closed-form generator
/// available for the model and returns the smallest.
pub fn adaptive_bound(model: ChannelModel, eta: f64, n: usize) -> Result<f64> {
    check_n(n)?;
    let ch = model.build(eta)?;
    let mut candidates = vec![KrausGenerator::zeros(ch.kraus_count())];
    if eta < 1.0 {
        candidates.push(analytic::beta0_generator(model, eta)?);
    }
    if model == ChannelModel::Dephasing {
        candidates.push(analytic::dephasing_single_probe(eta)?);
    }
    candidates
        .iter()
        .map(|g| finite_n_bound_adaptive(&ch, g, n))
        .try_fold(f64::INFINITY, |acc, v| v.map(|v| acc.min(v)))
}

/// Formula-based points (`iv-bound`, `knysh`, `universal`).
pub fn formula_point(model: ChannelModel, eta: f64, n: usize, scheme: Scheme) -> Result<StrategyPoint> {
    let value = match scheme {
        Scheme::AdaptiveBound => adaptive_bound(model, eta, n)?,
        Scheme::Knysh => knysh_bound(eta, n)?,
        Scheme::Universal => universal_bound(model, eta, n)?,
        _ => return Err(Error::Domain(format!("scheme {scheme} has no formula"))),
    };
    StrategyPoint::new(model, eta, n, scheme, value, Method::Formula)
}

/// Ratio of the `β = 0` bound `Nη/(1−η)` to the sequential optimum
/// `N/(e ln(1/η))`, which is independent of `N`.
pub fn ratio(eta: f64) -> Result<f64> {
    check_open_eta(eta)?;
    Ok(E * eta * (-eta.ln()) / (1.0 - eta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub eta: f64,
    pub ratio: f64,
    /// Amplitude damping only: the same ratio with the universal bound
    /// `4Nη/(1−η)` in the numerator.
    pub ceiling: Option<f64>,
}

pub fn ratio_curve(model: ChannelModel, eta_grid: &[f64]) -> Result<Vec<RatioPoint>> {
    eta_grid
        .iter()
        .map(|&eta| {
            let r = ratio(eta)?;
            let ceiling = (model == ChannelModel::AmplitudeDamping).then_some(4.0 * r);
            Ok(RatioPoint { eta, ratio: r, ceiling })
        })
        .collect()
}

/// `η ∈ {0.01, …, 0.99}` plus `0.999`.
pub fn default_eta_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (1..=99).map(|k| k as f64 / 100.0).collect();
    grid.push(0.999);
    grid
}

/// Amplitude-damping comparison for `N = 1..=n_max`: scheme (ii) by see-saw,
/// scheme (iii) by Kraus minimisation, and the Knysh and universal lines.
///
/// Points are ordered by `N`, then in that scheme order.
pub fn figure4_table(eta: f64, n_max: usize, opts: &StrategyOptions) -> Result<Vec<StrategyPoint>> {
    check_open_eta(eta)?;
    check_n(n_max)?;
    let model = ChannelModel::AmplitudeDamping;
    let rows: Vec<Result<Vec<StrategyPoint>>> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            Ok(vec![
                parallel_qfi(model, eta, n, false, Method::Seesaw, opts)?,
                parallel_qfi(model, eta, n, true, Method::KrausMin, opts)?,
                formula_point(model, eta, n, Scheme::Knysh)?,
                formula_point(model, eta, n, Scheme::Universal)?,
            ])
        })
        .collect();
    let mut out = Vec::with_capacity(4 * n_max);
    for row in rows {
        out.extend(row?);
    }
    Ok(out)
}
