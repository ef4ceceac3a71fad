//! Kraus-representation freedom and the QFI bounds built on it.
//!
//! Rotating a Kraus representation by a `φ`-dependent unitary
//! `u = exp(−iφh)` leaves the channel untouched but changes the derivative
//! operators at the working point to `K̇_k − i Σ_l h_kl K_l`. Every bound here
//! is a function of
//!
//! * `α = Σ K̇_k† K̇_k` and
//! * `β = Σ K̇_k† K_k`
//!
//! in the rotated representation, minimised over Hermitian generators `h`.
//! All three minimisations are convex in `h`; they are solved by smoothing
//! `λ_max` with a log-sum-exp of the spectrum and running L-BFGS while the
//! smoothing width is driven to zero.

pub mod analytic;
mod lbfgs;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channels::ChannelFamily;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigensystem, operator_norm, ComplexMatrix, HERM_TOL, I, ONE, ZERO};
use crate::qfi::{qfi_value, StateFamily};

/// Largest Kraus count accepted by the generator minimisations.
pub const MAX_KRAUS_FOR_MINIMIZATION: usize = 128;

/// Tolerance on `‖β‖` for representations reported as `β = 0`.
pub const CONSTRAINT_TOL: f64 = 1e-8;

/// Hermitian generator of a local Kraus rotation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrausGenerator {
    pub h: ComplexMatrix,
}

impl KrausGenerator {
    pub fn new(h: ComplexMatrix) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::Dimension("generator must be square".into()));
        }
        if !h.is_hermitian(HERM_TOL) {
            return Err(Error::Domain("generator must be Hermitian".into()));
        }
        Ok(Self { h: h.hermitian_part() })
    }

    pub fn zeros(size: usize) -> Self {
        Self {
            h: ComplexMatrix::zeros(size, size),
        }
    }

    pub fn size(&self) -> usize {
        self.h.rows()
    }

    /// `exp(−iφh)`, the Kraus mixing unitary at phase `φ`.
    pub fn unitary(&self, phi: f64) -> Result<ComplexMatrix> {
        let eig = hermitian_eigensystem(&self.h)?;
        let n = eig.dim();
        let v = &eig.eigenvectors;
        let phases: Vec<Complex64> = eig
            .eigenvalues
            .iter()
            .map(|&x| Complex64::from_polar(1.0, -phi * x))
            .collect();
        let scaled = ComplexMatrix::from_fn(n, n, |i, k| v[(i, k)] * phases[k]);
        Ok(scaled.matmul(&v.adjoint()))
    }

    #[cfg(test)]
    fn to_coords(&self) -> Vec<f64> {
        let r = self.size();
        let mut x = Vec::with_capacity(r * r);
        for k in 0..r {
            x.push(self.h[(k, k)].re);
        }
        for k in 0..r {
            for l in k + 1..r {
                x.push(self.h[(k, l)].re);
                x.push(self.h[(k, l)].im);
            }
        }
        x
    }

    fn from_coords(r: usize, x: &[f64]) -> Self {
        let mut h = ComplexMatrix::zeros(r, r);
        for k in 0..r {
            h[(k, k)] = Complex64::new(x[k], 0.0);
        }
        let mut idx = r;
        for k in 0..r {
            for l in k + 1..r {
                let z = Complex64::new(x[idx], x[idx + 1]);
                h[(k, l)] = z;
                h[(l, k)] = z.conj();
                idx += 2;
            }
        }
        Self { h }
    }
}

/// Maps `df = Re Σ_kl G_kl dh_kl` onto the real coordinates of `h`.
fn coords_gradient(gc: &ComplexMatrix) -> Vec<f64> {
    let r = gc.rows();
    let mut g = Vec::with_capacity(r * r);
    for k in 0..r {
        g.push(gc[(k, k)].re);
    }
    for k in 0..r {
        for l in k + 1..r {
            g.push(gc[(k, l)].re + gc[(l, k)].re);
            g.push(-gc[(k, l)].im + gc[(l, k)].im);
        }
    }
    g
}

/// `α` and `β` of a rotated representation.
#[derive(Debug, Clone)]
pub struct AlphaBeta {
    pub alpha: ComplexMatrix,
    pub beta: ComplexMatrix,
}

impl AlphaBeta {
    pub fn alpha_norm(&self) -> f64 {
        operator_norm(&self.alpha).expect("alpha is non-empty")
    }

    pub fn beta_norm(&self) -> f64 {
        operator_norm(&self.beta).expect("beta is non-empty")
    }
}

fn check_generator(ch: &ChannelFamily, g: &KrausGenerator) -> Result<()> {
    if g.size() != ch.kraus_count() {
        return Err(Error::Dimension(format!(
            "generator of size {} for {} Kraus operators",
            g.size(),
            ch.kraus_count()
        )));
    }
    Ok(())
}

/// `K̇_k − i Σ_l h_kl K_l`.
pub fn rotated_derivatives(ch: &ChannelFamily, g: &KrausGenerator) -> Result<Vec<ComplexMatrix>> {
    check_generator(ch, g)?;
    Ok(rotate(&ch.kraus, &ch.kraus_dot, &g.h))
}

fn rotate(kraus: &[ComplexMatrix], kraus_dot: &[ComplexMatrix], h: &ComplexMatrix) -> Vec<ComplexMatrix> {
    kraus_dot
        .iter()
        .enumerate()
        .map(|(k, kd)| {
            let mut m = kd.clone();
            for (l, kl) in kraus.iter().enumerate() {
                let c = h[(k, l)];
                if c != ZERO {
                    m.add_scaled(-I * c, kl);
                }
            }
            m
        })
        .collect()
}

/// Kraus operators mixed by `exp(−iφh)`: `K̃_k = Σ_l u_kl K_l`.
pub fn rotated_kraus(ch: &ChannelFamily, g: &KrausGenerator, phi: f64) -> Result<Vec<ComplexMatrix>> {
    check_generator(ch, g)?;
    let u = g.unitary(phi)?;
    Ok((0..ch.kraus_count())
        .map(|k| {
            let mut acc = ComplexMatrix::zeros(ch.dim_out, ch.dim_in);
            for (l, kl) in ch.kraus.iter().enumerate() {
                acc.add_scaled(u[(k, l)], kl);
            }
            acc
        })
        .collect())
}

pub fn alpha_beta(ch: &ChannelFamily, g: &KrausGenerator) -> Result<AlphaBeta> {
    let dots = rotated_derivatives(ch, g)?;
    let mut alpha = ComplexMatrix::zeros(ch.dim_in, ch.dim_in);
    let mut beta = ComplexMatrix::zeros(ch.dim_in, ch.dim_in);
    for (k, kd) in ch.kraus.iter().zip(&dots) {
        alpha.add_scaled(ONE, &kd.adjoint_mul(kd));
        beta.add_scaled(ONE, &kd.adjoint_mul(k));
    }
    Ok(AlphaBeta {
        alpha: alpha.hermitian_part(),
        beta,
    })
}

fn parallel_formula(a: f64, b: f64, n: usize) -> f64 {
    let n = n as f64;
    4.0 * (n * a + n * (n - 1.0) * b * b)
}

fn adaptive_formula(a: f64, b: f64, n: usize) -> f64 {
    let n = n as f64;
    4.0 * (n * a + n * (n - 1.0) * b * (a + b + 1.0))
}

/// `4[N‖α‖ + N(N−1)‖β‖²]`: bound on parallel strategies with or without
/// passive ancillas.
pub fn finite_n_bound_parallel(ch: &ChannelFamily, g: &KrausGenerator, n: usize) -> Result<f64> {
    check_n(n)?;
    let ab = alpha_beta(ch, g)?;
    Ok(parallel_formula(ab.alpha_norm(), ab.beta_norm(), n))
}

/// `4[N‖α‖ + N(N−1)‖β‖(‖α‖ + ‖β‖ + 1)]`: bound valid for adaptive strategies.
pub fn finite_n_bound_adaptive(ch: &ChannelFamily, g: &KrausGenerator, n: usize) -> Result<f64> {
    check_n(n)?;
    let ab = alpha_beta(ch, g)?;
    Ok(adaptive_formula(ab.alpha_norm(), ab.beta_norm(), n))
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Domain("number of channel uses must be at least 1".into()))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundScheme {
    #[serde(rename = "finite-par")]
    FiniteParallel,
    #[serde(rename = "finite-adaptive")]
    FiniteAdaptive,
    #[serde(rename = "asymptotic-beta0")]
    AsymptoticBeta0,
    #[serde(rename = "simulation")]
    Simulation,
    #[serde(rename = "extended-exact")]
    ExtendedExact,
}

impl BoundScheme {
    pub const ALL: [BoundScheme; 5] = [
        BoundScheme::AsymptoticBeta0,
        BoundScheme::FiniteParallel,
        BoundScheme::FiniteAdaptive,
        BoundScheme::ExtendedExact,
        BoundScheme::Simulation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundScheme::FiniteParallel => "finite-par",
            BoundScheme::FiniteAdaptive => "finite-adaptive",
            BoundScheme::AsymptoticBeta0 => "asymptotic-beta0",
            BoundScheme::Simulation => "simulation",
            BoundScheme::ExtendedExact => "extended-exact",
        }
    }
}

impl fmt::Display for BoundScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BoundScheme::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| {
                Error::Domain(format!(
                    "unknown bound scheme '{s}' (expected asymptotic-beta0, finite-par, finite-adaptive, extended-exact or simulation)"
                ))
            })
    }
}

/// Convergence evidence for a generator minimisation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverCertificate {
    /// Norm of the smoothed-objective gradient in the feasible coordinates
    /// at the returned generator.
    pub grad_norm: f64,
    /// Final log-sum-exp smoothing width; the smoothed and exact objectives
    /// differ by at most `smoothing * ln(dim)`.
    pub smoothing: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub scheme: BoundScheme,
    #[serde(rename = "N")]
    pub n: usize,
    pub value: f64,
    pub generator: Option<KrausGenerator>,
    /// `‖β‖` at the returned generator.
    pub residual_beta_norm: Option<f64>,
    pub certificate: Option<SolverCertificate>,
}

impl BoundReport {
    pub fn converged(&self) -> bool {
        self.certificate.as_ref().is_none_or(|c| c.converged)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative objective tolerance.
    pub tol: f64,
    /// Required bound on [`SolverCertificate::grad_norm`], relative to the
    /// objective value.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Zero Kraus operators appended before minimising.
    pub pad: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            grad_tol: 1e-4,
            max_iters: 50_000,
            pad: 0,
        }
    }
}

/// Real-affine parameterisation `coords = offset + basis · z` of the
/// generator coordinates.
struct Affine {
    offset: Vec<f64>,
    /// Column vectors in full coordinates; `None` means the identity map.
    basis: Option<Vec<Vec<f64>>>,
}

impl Affine {
    fn dim(&self, full: usize) -> usize {
        self.basis.as_ref().map_or(full, |b| b.len())
    }

    fn full(&self, z: &[f64]) -> Vec<f64> {
        match &self.basis {
            None => self.offset.iter().zip(z).map(|(a, b)| a + b).collect(),
            Some(cols) => {
                let mut x = self.offset.clone();
                for (col, &zj) in cols.iter().zip(z) {
                    for (xi, ci) in x.iter_mut().zip(col) {
                        *xi += zj * ci;
                    }
                }
                x
            }
        }
    }

    fn pull_back(&self, g_full: Vec<f64>) -> Vec<f64> {
        match &self.basis {
            None => g_full,
            Some(cols) => cols
                .iter()
                .map(|col| col.iter().zip(&g_full).map(|(a, b)| a * b).sum())
                .collect(),
        }
    }
}

/// Smoothed maximum eigenvalue: value and gradient `Σ w_i v_i v_i†`.
fn soft_max_eigen(m: &ComplexMatrix, mu: f64) -> Result<(f64, f64, ComplexMatrix)> {
    let eig = hermitian_eigensystem(m)?;
    let top = eig.max_eigenvalue();
    let n = eig.dim();
    let weights: Vec<f64> = if mu > 0.0 {
        let w: Vec<f64> = eig.eigenvalues.iter().map(|&x| ((x - top) / mu).exp()).collect();
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect()
    } else {
        (0..n).map(|i| if i == n - 1 { 1.0 } else { 0.0 }).collect()
    };
    let smooth = if mu > 0.0 {
        top + mu
            * eig
                .eigenvalues
                .iter()
                .map(|&x| ((x - top) / mu).exp())
                .sum::<f64>()
                .ln()
    } else {
        top
    };
    let v = &eig.eigenvectors;
    let mut grad = ComplexMatrix::zeros(n, n);
    for (k, &w) in weights.iter().enumerate() {
        if w < 1e-18 {
            continue;
        }
        let col = v.column(k);
        grad.add_scaled(Complex64::new(w, 0.0), &ComplexMatrix::outer(&col, &col));
    }
    Ok((smooth, top, grad))
}

/// `w_α ‖α(h)‖ + w_β ‖β(h)‖²` over an affine family of generators.
struct KrausObjective<'a> {
    ch: &'a ChannelFamily,
    weight_alpha: f64,
    weight_beta: f64,
    param: Affine,
}

struct Evaluation {
    smooth: f64,
    exact: f64,
    grad: Vec<f64>,
}

impl KrausObjective<'_> {
    fn r(&self) -> usize {
        self.ch.kraus_count()
    }

    fn generator(&self, z: &[f64]) -> KrausGenerator {
        KrausGenerator::from_coords(self.r(), &self.param.full(z))
    }

    fn evaluate(&self, z: &[f64], mu: f64) -> Result<Evaluation> {
        let ch = self.ch;
        let g = self.generator(z);
        let dots = rotate(&ch.kraus, &ch.kraus_dot, &g.h);
        let mut alpha = ComplexMatrix::zeros(ch.dim_in, ch.dim_in);
        for kd in &dots {
            alpha.add_scaled(ONE, &kd.adjoint_mul(kd));
        }
        let (sa, ea, ga) = soft_max_eigen(&alpha.hermitian_part(), mu)?;
        let mut smooth = self.weight_alpha * sa;
        let mut exact = self.weight_alpha * ea;

        // Y_k such that df = 2 Re Σ_k Tr(Y_k† dK̇_k)
        let mut ys: Vec<ComplexMatrix> = dots
            .iter()
            .map(|kd| kd.matmul(&ga).scale_real(self.weight_alpha))
            .collect();
        if self.weight_beta > 0.0 {
            let mut beta = ComplexMatrix::zeros(ch.dim_in, ch.dim_in);
            for (k, kd) in ch.kraus.iter().zip(&dots) {
                beta.add_scaled(ONE, &kd.adjoint_mul(k));
            }
            let bb = beta.adjoint_mul(&beta).hermitian_part();
            let (sb, eb, gb) = soft_max_eigen(&bb, mu * self.weight_alpha / self.weight_beta)?;
            smooth += self.weight_beta * sb;
            exact += self.weight_beta * eb;
            let gb_bdag = gb.matmul(&beta.adjoint()).scale_real(self.weight_beta);
            for (y, k) in ys.iter_mut().zip(&ch.kraus) {
                y.add_scaled(ONE, &k.matmul(&gb_bdag));
            }
        }
        // dK̇_k = −i Σ_l dh_kl K_l  ⇒  G_kl = −2i Tr(Y_k† K_l)
        let r = self.r();
        let gc = ComplexMatrix::from_fn(r, r, |k, l| {
            let t: Complex64 = ys[k]
                .as_slice()
                .iter()
                .zip(ch.kraus[l].as_slice())
                .map(|(y, x)| y.conj() * x)
                .sum();
            Complex64::new(0.0, -2.0) * t
        });
        let grad = self.param.pull_back(coords_gradient(&gc));
        Ok(Evaluation { smooth, exact, grad })
    }
}

struct Minimum {
    generator: KrausGenerator,
    certificate: SolverCertificate,
}

/// Drives the smoothing width from `0.1 × scale` down to `1e-4 × tol × scale`,
/// warm-starting L-BFGS at every stage.
fn run_minimization(obj: &KrausObjective<'_>, opts: &SolverOptions) -> Result<Minimum> {
    if !(0.0..1.0).contains(&opts.tol) || opts.tol == 0.0 || opts.grad_tol.is_nan() || opts.grad_tol <= 0.0 {
        return Err(Error::Domain("solver tolerances must be positive (tol below 1)".into()));
    }
    let full = obj.r() * obj.r();
    let dim = obj.param.dim(full);
    let mut z = vec![0.0; dim];
    let start = obj.evaluate(&z, 0.0)?;
    let scale = start.exact.abs().max(1e-12);
    let mut budget = opts.max_iters;
    let mut mu = 0.1 * scale;
    let final_mu = (1e-4 * opts.tol).min(0.1) * scale;
    let mut last_grad;
    let mut iterations = 0;
    let mut settled_all = true;
    let mut first_error = None;
    loop {
        let cfg = lbfgs::LbfgsConfig {
            memory: 12,
            max_iters: budget,
            grad_tol: 1e-12 * scale,
            f_tol: 1e-15,
            stall_limit: 8,
        };
        let out = lbfgs::minimize(
            |zz| match obj.evaluate(zz, mu) {
                Ok(e) => (e.smooth, e.grad),
                Err(err) => {
                    first_error.get_or_insert(err);
                    (f64::INFINITY, vec![0.0; zz.len()])
                }
            },
            z.clone(),
            &cfg,
        );
        if let Some(err) = first_error.take() {
            return Err(err);
        }
        z = out.x;
        iterations += out.iterations;
        budget = budget.saturating_sub(out.iterations);
        last_grad = out.grad_norm;
        settled_all &= out.settled;
        if mu <= final_mu || budget == 0 {
            break;
        }
        mu = (mu * 0.1).max(final_mu);
    }
    let grad_ok = last_grad <= opts.grad_tol * scale.max(1.0);
    Ok(Minimum {
        generator: obj.generator(&z),
        certificate: SolverCertificate {
            grad_norm: last_grad,
            smoothing: mu,
            iterations,
            converged: settled_all && budget > 0 && grad_ok,
        },
    })
}

fn check_minimization_size(ch: &ChannelFamily) -> Result<()> {
    if ch.kraus_count() > MAX_KRAUS_FOR_MINIMIZATION {
        return Err(Error::Resource(format!(
            "{} Kraus operators exceed the minimisation cap {MAX_KRAUS_FOR_MINIMIZATION}",
            ch.kraus_count()
        )));
    }
    Ok(())
}

/// Null space and particular solution of the real-linear constraint
/// `β(h) = 0` in generator coordinates.
fn beta_zero_subspace(ch: &ChannelFamily) -> Result<Affine> {
    let r = ch.kraus_count();
    let d = ch.dim_in;
    let p = r * r;
    // products K_l† K_k, indexed [l][k]
    let prods: Vec<Vec<ComplexMatrix>> = (0..r)
        .map(|l| (0..r).map(|k| ch.kraus[l].adjoint_mul(&ch.kraus[k])).collect())
        .collect();
    // β(h) = β₀ + i Σ_kl h_lk K_l† K_k; column j is the image of coordinate j
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(p);
    for j in 0..p {
        let mut e = vec![0.0; p];
        e[j] = 1.0;
        let h = KrausGenerator::from_coords(r, &e).h;
        let mut img = ComplexMatrix::zeros(d, d);
        for l in 0..r {
            for k in 0..r {
                let c = h[(l, k)];
                if c != ZERO {
                    img.add_scaled(I * c, &prods[l][k]);
                }
            }
        }
        columns.push(img.as_slice().iter().flat_map(|z| [z.re, z.im]).collect());
    }
    let b: Vec<f64> = ch.beta().as_slice().iter().flat_map(|z| [z.re, z.im]).collect();
    let rows = b.len();

    // normal equations through the spectral decomposition of AᵀA
    let ata = ComplexMatrix::from_fn(p, p, |i, j| {
        Complex64::new((0..rows).map(|t| columns[i][t] * columns[j][t]).sum(), 0.0)
    });
    let atb: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().zip(&b).map(|(x, y)| x * y).sum())
        .collect();
    let eig = hermitian_eigensystem(&ata)?;
    let top = eig.max_eigenvalue().max(1e-300);
    let cutoff = 1e-12 * top;
    let mut offset = vec![0.0; p];
    let mut basis = Vec::new();
    for m in 0..p {
        let v: Vec<f64> = eig.vector(m).iter().map(|z| z.re).collect();
        let lam = eig.eigenvalues[m];
        if lam <= cutoff {
            basis.push(v);
        } else {
            let coef = -v.iter().zip(&atb).map(|(a, c)| a * c).sum::<f64>() / lam;
            for (o, vi) in offset.iter_mut().zip(&v) {
                *o += coef * vi;
            }
        }
    }
    let residual: f64 = (0..rows)
        .map(|t| {
            let s: f64 = b[t] + columns.iter().zip(&offset).map(|(c, x)| c[t] * x).sum::<f64>();
            s * s
        })
        .sum::<f64>()
        .sqrt();
    if residual > 1e-9 * (1.0 + b.iter().map(|x| x * x).sum::<f64>().sqrt()) {
        return Err(Error::Constraint(format!(
            "no Kraus representation of '{}' has beta = 0 (residual {residual:.3e})",
            ch.label
        )));
    }
    Ok(Affine {
        offset,
        basis: Some(basis),
    })
}

/// `4 min ‖α‖` subject to `β = 0`: per-probe asymptotic bound shared by
/// parallel, ancilla-assisted and adaptive strategies.
pub fn minimize_beta0(ch: &ChannelFamily, pad: usize, opts: &SolverOptions) -> Result<BoundReport> {
    let ch = ch.padded(pad);
    check_minimization_size(&ch)?;
    let param = beta_zero_subspace(&ch)?;
    let obj = KrausObjective {
        ch: &ch,
        weight_alpha: 1.0,
        weight_beta: 0.0,
        param,
    };
    let min = run_minimization(&obj, opts)?;
    let ab = alpha_beta(&ch, &min.generator)?;
    Ok(BoundReport {
        scheme: BoundScheme::AsymptoticBeta0,
        n: 1,
        value: 4.0 * ab.alpha_norm(),
        generator: Some(min.generator),
        residual_beta_norm: Some(ab.beta_norm()),
        certificate: Some(min.certificate),
    })
}

/// Minimises `4[N‖α‖ + N(N−1)‖β‖²]` over generators.
pub fn minimize_finite_parallel(ch: &ChannelFamily, n: usize, pad: usize, opts: &SolverOptions) -> Result<BoundReport> {
    check_n(n)?;
    let ch = ch.padded(pad);
    check_minimization_size(&ch)?;
    let nf = n as f64;
    let r = ch.kraus_count();
    let obj = KrausObjective {
        ch: &ch,
        weight_alpha: nf,
        weight_beta: nf * (nf - 1.0),
        param: Affine {
            offset: vec![0.0; r * r],
            basis: None,
        },
    };
    let min = run_minimization(&obj, opts)?;
    let ab = alpha_beta(&ch, &min.generator)?;
    Ok(BoundReport {
        scheme: BoundScheme::FiniteParallel,
        n,
        value: parallel_formula(ab.alpha_norm(), ab.beta_norm(), n),
        generator: Some(min.generator),
        residual_beta_norm: Some(ab.beta_norm()),
        certificate: Some(min.certificate),
    })
}

/// Adaptive bound at the best of three candidate generators: the `β = 0`
/// minimiser, the finite-parallel minimiser and `h = 0`.
///
/// The adaptive objective is not jointly convex, so this is an upper bound on
/// its true minimum.
pub fn minimize_finite_adaptive(ch: &ChannelFamily, n: usize, pad: usize, opts: &SolverOptions) -> Result<BoundReport> {
    check_n(n)?;
    let padded = ch.padded(pad);
    let mut candidates = vec![(KrausGenerator::zeros(padded.kraus_count()), None)];
    match minimize_beta0(ch, pad, opts) {
        Ok(rep) => candidates.push((rep.generator.expect("generator"), rep.certificate)),
        Err(Error::Constraint(_)) => {}
        Err(e) => return Err(e),
    }
    let par = minimize_finite_parallel(ch, n, pad, opts)?;
    candidates.push((par.generator.expect("generator"), par.certificate));

    let mut best: Option<BoundReport> = None;
    for (g, cert) in candidates {
        let ab = alpha_beta(&padded, &g)?;
        let value = adaptive_formula(ab.alpha_norm(), ab.beta_norm(), n);
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(BoundReport {
                scheme: BoundScheme::FiniteAdaptive,
                n,
                value,
                residual_beta_norm: Some(ab.beta_norm()),
                generator: Some(g),
                certificate: cert,
            });
        }
    }
    Ok(best.expect("h = 0 candidate"))
}

/// `4 min ‖α‖` over all representations, which equals the optimal QFI of
/// `ch ⊗ id` with an ancilla. `ch` may be an `N`-fold tensor power; the
/// generator is then a general (non-product) rotation of its Kraus operators.
///
/// With `pad > 0` the minimisation is repeated with that many zero operators
/// appended and the smaller value is reported.
pub fn extended_channel_qfi(ch: &ChannelFamily, pad: usize, opts: &SolverOptions) -> Result<BoundReport> {
    let mut best = extended_once(ch, opts)?;
    if pad > 0 {
        let padded = extended_once(&ch.padded(pad), opts)?;
        if padded.value < best.value {
            best = padded;
        }
    }
    Ok(best)
}

fn extended_once(ch: &ChannelFamily, opts: &SolverOptions) -> Result<BoundReport> {
    check_minimization_size(ch)?;
    let r = ch.kraus_count();
    let obj = KrausObjective {
        ch,
        weight_alpha: 1.0,
        weight_beta: 0.0,
        param: Affine {
            offset: vec![0.0; r * r],
            basis: None,
        },
    };
    let min = run_minimization(&obj, opts)?;
    let ab = alpha_beta(ch, &min.generator)?;
    Ok(BoundReport {
        scheme: BoundScheme::ExtendedExact,
        n: 1,
        value: 4.0 * ab.alpha_norm(),
        generator: Some(min.generator),
        residual_beta_norm: Some(ab.beta_norm()),
        certificate: Some(min.certificate),
    })
}

/// `N · F(σ_φ)` for a user-supplied simulation resource family.
///
/// A resource with zero derivative gives a vacuous value of 0.
pub fn simulation_bound(sigma: &StateFamily, n: usize) -> Result<f64> {
    check_n(n)?;
    Ok(n as f64 * qfi_value(sigma)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{make_amplitude_damping, make_dephasing, make_erasure, ChannelModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_generator(rng: &mut ChaCha8Rng, r: usize) -> KrausGenerator {
        let a = ComplexMatrix::from_fn(r, r, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        KrausGenerator::new(a.hermitian_part()).unwrap()
    }

    #[test]
    fn coordinates_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_generator(&mut rng, 4);
        let back = KrausGenerator::from_coords(4, &g.to_coords());
        assert!(back.h.max_abs_diff(&g.h) < 1e-15);
    }

    #[test]
    fn objective_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = make_erasure(0.6).unwrap();
        let g = random_generator(&mut rng, 4);
        let obj = KrausObjective {
            ch: &ch,
            weight_alpha: 3.0,
            weight_beta: 6.0,
            param: Affine {
                offset: vec![0.0; 16],
                basis: None,
            },
        };
        let z = g.to_coords();
        let mu = 0.05;
        let e = obj.evaluate(&z, mu).unwrap();
        let step = 1e-6;
        for j in 0..z.len() {
            let mut zp = z.clone();
            zp[j] += step;
            let mut zm = z.clone();
            zm[j] -= step;
            let fd = (obj.evaluate(&zp, mu).unwrap().smooth - obj.evaluate(&zm, mu).unwrap().smooth) / (2.0 * step);
            assert!(
                (fd - e.grad[j]).abs() < 1e-6 * (1.0 + fd.abs()),
                "coord {j}: {fd} vs {}",
                e.grad[j]
            );
        }
    }

    #[test]
    fn beta_subspace_is_feasible() {
        for ch in [
            make_dephasing(0.4).unwrap(),
            make_erasure(0.4).unwrap(),
            make_amplitude_damping(0.4).unwrap(),
        ] {
            let aff = beta_zero_subspace(&ch).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let z: Vec<f64> = (0..aff.dim(0)).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g = KrausGenerator::from_coords(ch.kraus_count(), &aff.full(&z));
            assert!(alpha_beta(&ch, &g).unwrap().beta_norm() < 1e-10);
        }
    }

    #[test]
    fn beta_zero_infeasible_for_noiseless_phase() {
        let ch = ChannelFamily::identity_phase(2);
        let err = minimize_beta0(&ch, 0, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Constraint(_)));
    }

    #[test]
    fn generator_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_generator(&mut rng, 3);
        let u = g.unitary(0.7).unwrap();
        assert!(u.adjoint_mul(&u).max_abs_diff(&ComplexMatrix::identity(3)) < 1e-13);
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let ch = make_dephasing(0.5).unwrap();
        assert!(matches!(
            alpha_beta(&ch, &KrausGenerator::zeros(3)),
            Err(Error::Dimension(_))
        ));
        assert!(KrausGenerator::new(ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]])).is_err());
    }

    #[test]
    fn scheme_tags_round_trip() {
        for s in BoundScheme::ALL {
            assert_eq!(s.as_str().parse::<BoundScheme>().unwrap(), s);
            assert_eq!(serde_json_like(s), s.as_str());
        }
        assert!("finite".parse::<BoundScheme>().is_err());
    }

    fn serde_json_like(s: BoundScheme) -> String {
        s.to_string()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn beta0_minimum_matches_closed_form() {
        let opts = SolverOptions::default();
        for model in ChannelModel::ALL {
            for eta in [0.2, 0.5, 0.8] {
                let ch = model.build(eta).unwrap();
                let rep = minimize_beta0(&ch, 0, &opts).unwrap();
                let want = analytic::beta0_value(model, eta).unwrap();
                assert!(rel(rep.value, want) < 1e-6, "{model} {eta}: {} vs {want}", rep.value);
                assert!(rep.residual_beta_norm.unwrap() < CONSTRAINT_TOL);
                assert!(rep.converged(), "{:?}", rep.certificate);
            }
        }
    }

    #[test]
    fn extended_single_channel_matches_closed_form() {
        let opts = SolverOptions::default();
        for model in ChannelModel::ALL {
            for eta in [0.3, 0.5, 0.9] {
                let ch = model.build(eta).unwrap();
                let rep = extended_channel_qfi(&ch, 0, &opts).unwrap();
                let want = analytic::extended_single_value(model, eta).unwrap();
                assert!(rel(rep.value, want) < 1e-6, "{model} {eta}: {} vs {want}", rep.value);
            }
        }
    }

    #[test]
    fn padding_never_lowers_extended_value() {
        let opts = SolverOptions::default();
        let ch = make_amplitude_damping(0.5).unwrap();
        let plain = extended_once(&ch, &opts).unwrap().value;
        let padded = extended_once(&ch.padded(2), &opts).unwrap().value;
        assert!(padded >= plain - 1e-7);
    }

    #[test]
    fn finite_parallel_minimum_sits_between_limits() {
        let opts = SolverOptions::default();
        for model in ChannelModel::ALL {
            let eta = 0.6;
            let ch = model.build(eta).unwrap();
            let asym = analytic::beta0_value(model, eta).unwrap();
            let mut prev = 0.0;
            for n in [1usize, 2, 5, 20, 100] {
                let rep = minimize_finite_parallel(&ch, n, 0, &opts).unwrap();
                let per_probe = rep.value / n as f64;
                assert!(per_probe <= asym * (1.0 + 1e-6), "{model} N={n}: {per_probe} > {asym}");
                assert!(per_probe >= prev - 1e-6, "{model} N={n}");
                prev = per_probe;
            }
            let one = minimize_finite_parallel(&ch, 1, 0, &opts).unwrap().value;
            let want = analytic::extended_single_value(model, eta).unwrap();
            assert!(rel(one, want) < 1e-6);
        }
    }

    #[test]
    fn adaptive_dominates_parallel_for_random_generators() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for i in 0..100 {
            let model = ChannelModel::ALL[i % 3];
            let ch = model.build(rng.random_range(0.05..0.95)).unwrap();
            let g = random_generator(&mut rng, ch.kraus_count());
            let n = rng.random_range(1..50);
            let p = finite_n_bound_parallel(&ch, &g, n).unwrap();
            let a = finite_n_bound_adaptive(&ch, &g, n).unwrap();
            assert!(a >= p - 1e-12 * p.abs());
        }
    }

    #[test]
    fn adaptive_minimum_not_above_parallel_candidate() {
        let opts = SolverOptions::default();
        let ch = make_dephasing(0.7).unwrap();
        let rep = minimize_finite_adaptive(&ch, 10, 0, &opts).unwrap();
        let par = minimize_finite_parallel(&ch, 10, 0, &opts).unwrap();
        assert!(rep.value >= par.value - 1e-9);
        let g = par.generator.unwrap();
        assert!(rep.value <= finite_n_bound_adaptive(&ch, &g, 10).unwrap() + 1e-12);
    }

    #[test]
    fn bounds_are_representation_invariant() {
        // a fixed unitary mixing of the Kraus operators leaves every
        // minimised value unchanged
        let opts = SolverOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for model in ChannelModel::ALL {
            let ch = model.build(0.45).unwrap();
            let r = ch.kraus_count();
            let u = random_generator(&mut rng, r).unitary(1.3).unwrap();
            let mix = |ops: &[ComplexMatrix]| -> Vec<ComplexMatrix> {
                (0..r)
                    .map(|m| {
                        let mut acc = ComplexMatrix::zeros(ch.dim_out, ch.dim_in);
                        for (k, op) in ops.iter().enumerate() {
                            acc.add_scaled(u[(m, k)], op);
                        }
                        acc
                    })
                    .collect()
            };
            let mixed = ChannelFamily::new(mix(&ch.kraus), mix(&ch.kraus_dot), ch.label.clone(), ch.eta).unwrap();
            let a = minimize_beta0(&ch, 0, &opts).unwrap().value;
            let b = minimize_beta0(&mixed, 0, &opts).unwrap().value;
            assert!(rel(a, b) < 1e-8, "{model}: {a} vs {b}");
            let a = extended_channel_qfi(&ch, 0, &opts).unwrap().value;
            let b = extended_channel_qfi(&mixed, 0, &opts).unwrap().value;
            assert!(rel(a, b) < 1e-8, "{model}: {a} vs {b}");
        }
    }

    #[test]
    fn rotation_preserves_channel_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for model in ChannelModel::ALL {
            let ch = model.build(0.35).unwrap();
            let g = random_generator(&mut rng, ch.kraus_count());
            let psi = crate::qfi::random_pure_state(&mut rng, ch.dim_in);
            let phi = crate::qfi::random_pure_state(&mut rng, ch.dim_in);
            let mut rho = ComplexMatrix::outer(&psi, &psi).scale_real(0.3);
            rho.add_scaled(Complex64::new(0.7, 0.0), &ComplexMatrix::outer(&phi, &phi));
            let (want, _) = ch.apply(&rho).unwrap();
            let mut got = ComplexMatrix::zeros(ch.dim_out, ch.dim_out);
            for k in rotated_kraus(&ch, &g, 0.9).unwrap() {
                got.add_scaled(ONE, &k.matmul(&rho).matmul(&k.adjoint()));
            }
            assert!(got.max_abs_diff(&want) < 1e-10);
        }
    }

    #[test]
    fn rotated_derivative_matches_finite_difference() {
        // d/dφ of K̃_k(φ) = Σ_l u_kl(φ) K_l(φ) at φ = 0
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = ChannelModel::Erasure;
        let eta = 0.55;
        let ch = model.build(eta).unwrap();
        let g = random_generator(&mut rng, ch.kraus_count());
        let dots = rotated_derivatives(&ch, &g).unwrap();
        let dphi = 1e-5;
        let at = |phi: f64| {
            let ks = model.kraus_at(eta, phi).unwrap();
            let fam = ChannelFamily::new(ks, ch.kraus_dot.clone(), ch.label.clone(), None).unwrap();
            rotated_kraus(&fam, &g, phi).unwrap()
        };
        let (plus, minus) = (at(dphi), at(-dphi));
        for k in 0..ch.kraus_count() {
            let mut fd = plus[k].clone();
            fd.add_scaled(-ONE, &minus[k]);
            let fd = fd.scale_real(1.0 / (2.0 * dphi));
            assert!(fd.max_abs_diff(&dots[k]) < 1e-8);
        }
    }

    #[test]
    fn canonical_dephasing_values() {
        let ch = make_dephasing(0.5).unwrap();
        let g = KrausGenerator::zeros(2);
        let ab = alpha_beta(&ch, &g).unwrap();
        assert!((4.0 * ab.alpha_norm() - 4.0).abs() < 1e-12);
        assert!((ab.beta_norm() - 1.0).abs() < 1e-12);
        assert!((finite_n_bound_parallel(&ch, &g, 3).unwrap() - 36.0).abs() < 1e-10);
        assert!((finite_n_bound_adaptive(&ch, &g, 3).unwrap() - 84.0).abs() < 1e-10);
        // the symmetric gauge h = I/2 removes the common phase
        let sym = KrausGenerator::new(ComplexMatrix::identity(2).scale_real(0.5)).unwrap();
        assert!((4.0 * alpha_beta(&ch, &sym).unwrap().alpha_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beta0_generator_collapses_adaptive_onto_parallel() {
        let ch = make_dephasing(0.4).unwrap();
        let g = analytic::dephasing_beta0(0.4).unwrap();
        for n in [1, 3, 17] {
            let p = finite_n_bound_parallel(&ch, &g, n).unwrap();
            let a = finite_n_bound_adaptive(&ch, &g, n).unwrap();
            assert!((p - a).abs() < 1e-10 * p);
            assert!((p - n as f64 * 0.4 / 0.6).abs() < 1e-10 * p);
        }
    }

    #[test]
    fn finite_parallel_at_large_n_approaches_beta0() {
        let opts = SolverOptions::default();
        for model in ChannelModel::ALL {
            let ch = model.build(0.5).unwrap();
            let rep = minimize_finite_parallel(&ch, 1000, 0, &opts).unwrap();
            let asym = analytic::beta0_value(model, 0.5).unwrap();
            assert!(rel(rep.value / 1000.0, asym) < 1e-2, "{model}: {}", rep.value / 1000.0);
        }
    }

    #[test]
    fn finite_parallel_beats_analytic_generators() {
        let eta = 0.5;
        let ch = make_dephasing(eta).unwrap();
        let rep = minimize_finite_parallel(&ch, 2, 0, &SolverOptions::default()).unwrap();
        let a = finite_n_bound_parallel(&ch, &analytic::dephasing_single_probe(eta).unwrap(), 2).unwrap();
        let b = finite_n_bound_parallel(&ch, &analytic::dephasing_beta0(eta).unwrap(), 2).unwrap();
        assert!(rep.value <= a.min(b) + 1e-9);
    }

    #[test]
    fn certificates_are_small() {
        let opts = SolverOptions::default();
        let ch = make_amplitude_damping(0.3).unwrap();
        for rep in [
            minimize_beta0(&ch, 0, &opts).unwrap(),
            minimize_finite_parallel(&ch, 4, 0, &opts).unwrap(),
            extended_channel_qfi(&ch, 0, &opts).unwrap(),
        ] {
            let c = rep.certificate.unwrap();
            assert!(
                c.converged && c.grad_norm <= opts.grad_tol * rep.value.max(1.0),
                "{c:?}"
            );
        }
    }

    #[test]
    fn simulation_bound_scales_with_n() {
        let psi = vec![Complex64::new(0.5f64.sqrt(), 0.0), Complex64::new(0.5f64.sqrt(), 0.0)];
        let ch = make_dephasing(0.64).unwrap();
        let sigma = StateFamily::from_channel(&ch, &ComplexMatrix::outer(&psi, &psi)).unwrap();
        let one = simulation_bound(&sigma, 1).unwrap();
        assert!((one - 0.64).abs() < 1e-12);
        assert!((simulation_bound(&sigma, 7).unwrap() - 7.0 * one).abs() < 1e-12);
        assert!(simulation_bound(&sigma, 0).is_err());
    }

    #[test]
    fn padding_does_not_change_channel() {
        let ch = ChannelModel::AmplitudeDamping.build(0.3).unwrap().padded(2);
        ch.validate().unwrap();
        assert_eq!(ch.kraus_count(), 4);
    }
}
