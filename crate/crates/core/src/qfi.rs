//! Quantum Fisher information of state families and see-saw optimisation of
//! the probe state.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{check_density, ChannelFamily, TP_TOL};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigensystem, inner, vec_norm, ComplexMatrix, HermitianEigensystem, ONE};

/// Pairs of eigenvalues whose sum falls below this are excluded from the SLD.
pub const SLD_CUTOFF: f64 = 1e-12;

/// A state and its derivative with respect to the phase.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFamily {
    pub rho: ComplexMatrix,
    pub rho_dot: ComplexMatrix,
}

impl StateFamily {
    pub fn new(rho: ComplexMatrix, rho_dot: ComplexMatrix) -> Result<Self> {
        check_density(&rho)?;
        if (rho_dot.rows(), rho_dot.cols()) != (rho.rows(), rho.cols()) {
            return Err(Error::Dimension("rho and rho_dot differ in shape".into()));
        }
        if !rho_dot.is_hermitian(1e-8) {
            return Err(Error::Domain("rho_dot is not Hermitian".into()));
        }
        if rho_dot.trace().norm() > TP_TOL.max(1e-8) {
            return Err(Error::Domain("rho_dot is not traceless".into()));
        }
        Ok(Self { rho, rho_dot })
    }

    /// Output of a channel family on a fixed input state.
    pub fn from_channel(ch: &ChannelFamily, input: &ComplexMatrix) -> Result<Self> {
        let (rho, rho_dot) = ch.apply(input)?;
        Ok(Self { rho, rho_dot })
    }

    /// Pure family `|ψ⟩`, `d|ψ⟩/dφ`.
    pub fn pure(psi: &[Complex64], psi_dot: &[Complex64]) -> Result<Self> {
        let rho = ComplexMatrix::outer(psi, psi);
        let mut rho_dot = ComplexMatrix::outer(psi_dot, psi);
        rho_dot.add_scaled(ONE, &ComplexMatrix::outer(psi, psi_dot));
        Self::new(rho, rho_dot)
    }

    pub fn dim(&self) -> usize {
        self.rho.rows()
    }
}

/// Eigenbasis data shared by the SLD and QFI.
struct SpectralForm {
    eig: HermitianEigensystem,
    /// `ρ̇` expressed in the eigenbasis of `ρ`.
    dot: ComplexMatrix,
}

impl SpectralForm {
    fn new(rho: &ComplexMatrix, rho_dot: &ComplexMatrix) -> Result<Self> {
        let eig = hermitian_eigensystem(&rho.hermitian_part())?;
        let v = &eig.eigenvectors;
        let dot = v.adjoint_mul(&rho_dot.hermitian_part()).matmul(v);
        Ok(Self { eig, dot })
    }

    fn lambda(&self, i: usize) -> f64 {
        self.eig.eigenvalues[i].max(0.0)
    }

    fn qfi(&self) -> f64 {
        let n = self.eig.dim();
        let mut f = 0.0;
        for i in 0..n {
            for j in 0..n {
                let s = self.lambda(i) + self.lambda(j);
                if s > SLD_CUTOFF {
                    f += self.dot[(i, j)].norm_sqr() / s;
                }
            }
        }
        2.0 * f
    }

    fn sld(&self) -> ComplexMatrix {
        let n = self.eig.dim();
        let in_basis = ComplexMatrix::from_fn(n, n, |i, j| {
            let s = self.lambda(i) + self.lambda(j);
            if s > SLD_CUTOFF {
                self.dot[(i, j)] * (2.0 / s)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let v = &self.eig.eigenvectors;
        v.matmul(&in_basis).matmul(&v.adjoint()).hermitian_part()
    }
}

/// Symmetric logarithmic derivative `L` with `ρ̇ = (Lρ + ρL)/2` on the
/// support of `ρ`; components outside the support are zero.
pub fn sld(f: &StateFamily) -> Result<ComplexMatrix> {
    Ok(SpectralForm::new(&f.rho, &f.rho_dot)?.sld())
}

/// `F = 2 Σ |⟨i|ρ̇|j⟩|² / (λ_i + λ_j)` over pairs above [`SLD_CUTOFF`].
pub fn qfi_value(f: &StateFamily) -> Result<f64> {
    Ok(SpectralForm::new(&f.rho, &f.rho_dot)?.qfi())
}

/// `4(⟨ψ̇|ψ̇⟩ − |⟨ψ|ψ̇⟩|²)` for a normalised `ψ`.
pub fn qfi_pure(psi: &[Complex64], psi_dot: &[Complex64]) -> f64 {
    assert_eq!(psi.len(), psi_dot.len(), "state and derivative differ in length");
    4.0 * (inner(psi_dot, psi_dot).re - inner(psi, psi_dot).norm_sqr())
}

/// Fisher information of a projective measurement in the eigenbasis of `ρ`.
pub fn eigenbasis_classical_fisher(f: &StateFamily) -> Result<f64> {
    let form = SpectralForm::new(&f.rho, &f.rho_dot)?;
    Ok((0..form.eig.dim())
        .filter(|&i| form.lambda(i) > SLD_CUTOFF)
        .map(|i| form.dot[(i, i)].re.powi(2) / form.lambda(i))
        .sum())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeesawOptions {
    pub restarts: usize,
    pub max_iters: usize,
    /// Relative change in the QFI below which an iteration counts as stalled.
    pub tol: f64,
    /// Number of consecutive stalled iterations required for convergence.
    pub patience: usize,
    pub seed: u64,
    /// Largest allowed input dimension (system times ancilla).
    pub dim_cap: usize,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iters: 2000,
            tol: 1e-10,
            patience: 5,
            seed: 0x5eed,
            dim_cap: 256,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeesawResult {
    pub qfi: f64,
    /// Optimal pure input on system ⊗ ancilla, system index major.
    pub optimal_input: Vec<Complex64>,
    /// Iterations used by the winning restart.
    pub iterations: usize,
    pub restarts_used: usize,
    pub converged: bool,
    /// QFI after every iteration of the winning restart.
    pub history: Vec<f64>,
}

/// Ancilla dimension used when none is requested for scheme (iii).
///
/// A pure state on system ⊗ ancilla has Schmidt rank at most the system
/// dimension, so a copy of the input space is always enough.
pub fn default_ancilla_dim(ch: &ChannelFamily) -> usize {
    ch.dim_in
}

/// Maximises the output QFI of `ch ⊗ id_ancilla` over pure inputs by
/// alternating between the SLD of the current output and the top eigenvector
/// of the dual objective `2 Λ̇†(L) − Λ†(L²)`.
pub fn optimize_input(ch: &ChannelFamily, ancilla_dim: usize, opts: &SeesawOptions) -> Result<SeesawResult> {
    if ancilla_dim == 0 {
        return Err(Error::Domain("ancilla dimension must be at least 1".into()));
    }
    let total = ch.dim_in.saturating_mul(ancilla_dim);
    if total > opts.dim_cap {
        return Err(Error::Resource(format!(
            "see-saw input dimension {total} exceeds cap {}",
            opts.dim_cap
        )));
    }
    if opts.restarts == 0 {
        return Err(Error::Domain("at least one restart is required".into()));
    }
    let ext = ch.extend(ancilla_dim);
    let runs: Vec<Result<SeesawResult>> = (0..opts.restarts)
        .into_par_iter()
        .map(|idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(idx as u64);
            let start = random_pure_state(&mut rng, total);
            seesaw_from(&ext, start, opts)
        })
        .collect();
    let mut best: Option<SeesawResult> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.qfi > b.qfi) {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one restart");
    best.restarts_used = opts.restarts;
    Ok(best)
}

/// Single see-saw run from a given pure input.
pub fn seesaw_from(ch: &ChannelFamily, start: Vec<Complex64>, opts: &SeesawOptions) -> Result<SeesawResult> {
    if start.len() != ch.dim_in {
        return Err(Error::Dimension(format!(
            "start vector of length {} for input dimension {}",
            start.len(),
            ch.dim_in
        )));
    }
    let mut psi = normalized(start)?;
    let mut history = Vec::new();
    let mut best_f = f64::NEG_INFINITY;
    let mut best_psi = psi.clone();
    let mut stalled = 0;
    let mut converged = false;
    for _ in 0..opts.max_iters.max(1) {
        let (rho_out, dot_out) = apply_pure(ch, &psi);
        let form = SpectralForm::new(&rho_out, &dot_out)?;
        let f = form.qfi();
        let prev = history.last().copied();
        history.push(f);
        if f > best_f {
            best_f = f;
            best_psi = psi.clone();
        }
        if let Some(p) = prev {
            if (f - p).abs() <= opts.tol * f.abs().max(1e-12) {
                stalled += 1;
                if stalled >= opts.patience {
                    converged = true;
                    break;
                }
            } else {
                stalled = 0;
            }
        }
        let l = form.sld();
        let m = seesaw_operator(ch, &l);
        let eig = hermitian_eigensystem(&m)?;
        psi = eig.vector(eig.dim() - 1);
    }
    Ok(SeesawResult {
        qfi: best_f.max(0.0),
        optimal_input: best_psi,
        iterations: history.len(),
        restarts_used: 1,
        converged,
        history,
    })
}

/// Output state and derivative for a pure input, using `K_k |ψ⟩` directly.
fn apply_pure(ch: &ChannelFamily, psi: &[Complex64]) -> (ComplexMatrix, ComplexMatrix) {
    let mut out = ComplexMatrix::zeros(ch.dim_out, ch.dim_out);
    let mut dot = ComplexMatrix::zeros(ch.dim_out, ch.dim_out);
    for (k, kd) in ch.kraus.iter().zip(&ch.kraus_dot) {
        let a = k.matvec(psi);
        let b = kd.matvec(psi);
        out.add_scaled(ONE, &ComplexMatrix::outer(&a, &a));
        let cross = ComplexMatrix::outer(&b, &a);
        dot.add_scaled(ONE, &cross);
        dot.add_scaled(ONE, &cross.adjoint());
    }
    (out.hermitian_part(), dot.hermitian_part())
}

/// `M(L) = 2 Σ (K†LK̇ + K̇†LK) − Σ K†L²K`, so that `J = ⟨ψ|M|ψ⟩`.
pub fn seesaw_operator(ch: &ChannelFamily, l: &ComplexMatrix) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(ch.dim_in, ch.dim_in);
    for (k, kd) in ch.kraus.iter().zip(&ch.kraus_dot) {
        let y = l.matmul(k);
        let x = y.adjoint_mul(kd);
        m.add_scaled(Complex64::new(2.0, 0.0), &x);
        m.add_scaled(Complex64::new(2.0, 0.0), &x.adjoint());
        m.add_scaled(-ONE, &y.adjoint_mul(&y));
    }
    m.hermitian_part()
}

/// Output QFI of a fixed pure input.
pub fn qfi_of_input(ch: &ChannelFamily, psi: &[Complex64]) -> Result<f64> {
    if psi.len() != ch.dim_in {
        return Err(Error::Dimension("input length does not match channel".into()));
    }
    let psi = normalized(psi.to_vec())?;
    let (rho, dot) = apply_pure(ch, &psi);
    Ok(SpectralForm::new(&rho, &dot)?.qfi())
}

pub(crate) fn random_pure_state<R: rand::Rng>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        if let Ok(v) = normalized(v) {
            return v;
        }
    }
}

fn normalized(mut v: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let n = vec_norm(&v);
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::Numeric("cannot normalise a zero vector".into()));
    }
    for z in &mut v {
        *z /= n;
    }
    Ok(v)
}
