//! Phase-encoding noise channels and their local derivative data.
//!
//! A [`ChannelFamily`] stores the Kraus operators of `Λ_φ` at the working
//! point `φ = 0` together with their `φ`-derivatives. All three noise models
//! are phase covariant, so the working point loses no generality.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_eta, Error, Result};
use crate::linalg::{hermitian_eigensystem, tensor_product, ComplexMatrix, I, ONE, ZERO};

/// Tolerance for trace preservation and state validity checks.
pub const TP_TOL: f64 = 1e-9;

/// Default cap on the Hilbert-space dimension produced by [`tensor_power`].
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Cap on the total number of stored complex entries across all Kraus
/// operators and their derivatives.
const MAX_KRAUS_ENTRIES: usize = 1 << 24;

/// Operators whose Frobenius norm falls below this are dropped during
/// compression.
pub const KRAUS_DROP_NORM: f64 = 1e-14;

/// Relative eigenvalue cutoff of the Kraus Gram matrix during compression.
const KRAUS_GRAM_RANK_TOL: f64 = 1e-13;

/// The three noise models, named as on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelModel {
    Dephasing,
    Erasure,
    AmplitudeDamping,
}

impl ChannelModel {
    pub const ALL: [ChannelModel; 3] = [
        ChannelModel::Dephasing,
        ChannelModel::Erasure,
        ChannelModel::AmplitudeDamping,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelModel::Dephasing => "dephasing",
            ChannelModel::Erasure => "erasure",
            ChannelModel::AmplitudeDamping => "amplitude-damping",
        }
    }

    /// Input/output dimension of a single probe.
    pub fn dim(self) -> usize {
        match self {
            ChannelModel::Erasure => 3,
            _ => 2,
        }
    }

    pub fn build(self, eta: f64) -> Result<ChannelFamily> {
        match self {
            ChannelModel::Dephasing => make_dephasing(eta),
            ChannelModel::Erasure => make_erasure(eta),
            ChannelModel::AmplitudeDamping => make_amplitude_damping(eta),
        }
    }

    /// Noise Kraus operators without the phase, `K_k` with `K_k^φ = K_k U_φ`.
    pub fn noise_kraus(self, eta: f64) -> Result<Vec<ComplexMatrix>> {
        check_eta(eta)?;
        let r = |x: f64| Complex64::new(x, 0.0);
        Ok(match self {
            ChannelModel::Dephasing => {
                let a = ((1.0 + eta.sqrt()) / 2.0).sqrt();
                let b = ((1.0 - eta.sqrt()) / 2.0).sqrt();
                vec![
                    ComplexMatrix::from_real_diag(&[a, a]),
                    ComplexMatrix::from_real_diag(&[b, -b]),
                ]
            }
            ChannelModel::Erasure => {
                let s = eta.sqrt();
                let e = (1.0 - eta).sqrt();
                let mut k2 = ComplexMatrix::zeros(3, 3);
                k2[(2, 0)] = r(e);
                let mut k3 = ComplexMatrix::zeros(3, 3);
                k3[(2, 1)] = r(e);
                vec![
                    ComplexMatrix::from_real_diag(&[s, s, 0.0]),
                    ComplexMatrix::from_real_diag(&[0.0, 0.0, 1.0]),
                    k2,
                    k3,
                ]
            }
            ChannelModel::AmplitudeDamping => {
                let mut k1 = ComplexMatrix::zeros(2, 2);
                k1[(0, 1)] = r((1.0 - eta).sqrt());
                vec![ComplexMatrix::from_real_diag(&[1.0, eta.sqrt()]), k1]
            }
        })
    }

    /// Kraus operators `K_k U_φ` at an arbitrary phase.
    pub fn kraus_at(self, eta: f64, phi: f64) -> Result<Vec<ComplexMatrix>> {
        let u = PhaseUnitary::new(phi, self.dim()).matrix;
        Ok(self.noise_kraus(eta)?.iter().map(|k| k.matmul(&u)).collect())
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dephasing" => Ok(ChannelModel::Dephasing),
            "erasure" => Ok(ChannelModel::Erasure),
            "amplitude-damping" => Ok(ChannelModel::AmplitudeDamping),
            other => Err(Error::Domain(format!(
                "unknown channel model '{other}' (expected dephasing, erasure or amplitude-damping)"
            ))),
        }
    }
}

/// `U_φ = |0⟩⟨0| + e^{iφ}|1⟩⟨1|`, acting trivially on any further levels.
#[derive(Debug, Clone)]
pub struct PhaseUnitary {
    pub phi: f64,
    pub matrix: ComplexMatrix,
}

impl PhaseUnitary {
    pub fn new(phi: f64, dim: usize) -> Self {
        let mut diag = vec![ONE; dim];
        diag[1] = Complex64::from_polar(1.0, phi);
        Self {
            phi,
            matrix: ComplexMatrix::from_diag(&diag),
        }
    }

    /// `|1⟩⟨1|`, so that `dU/dφ = i U G`.
    pub fn generator(dim: usize) -> ComplexMatrix {
        let mut g = ComplexMatrix::zeros(dim, dim);
        g[(1, 1)] = ONE;
        g
    }
}

/// Kraus operators of a parameterised channel and their derivatives at the
/// working point.
#[derive(Debug, Clone)]
pub struct ChannelFamily {
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus: Vec<ComplexMatrix>,
    pub kraus_dot: Vec<ComplexMatrix>,
    pub label: String,
    /// Decoherence parameter; the product of the factors for self-compositions.
    pub eta: Option<f64>,
}

impl ChannelFamily {
    /// Builds a family, checking shapes. Trace preservation is not enforced
    /// here; see [`ChannelFamily::validate`].
    pub fn new(
        kraus: Vec<ComplexMatrix>,
        kraus_dot: Vec<ComplexMatrix>,
        label: impl Into<String>,
        eta: Option<f64>,
    ) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::Dimension("channel needs at least one Kraus operator".into()))?;
        let (dim_out, dim_in) = (first.rows(), first.cols());
        if kraus.len() != kraus_dot.len() {
            return Err(Error::Dimension(format!(
                "{} Kraus operators but {} derivatives",
                kraus.len(),
                kraus_dot.len()
            )));
        }
        for m in kraus.iter().chain(&kraus_dot) {
            if (m.rows(), m.cols()) != (dim_out, dim_in) {
                return Err(Error::Dimension("Kraus operators differ in shape".into()));
            }
            if !m.is_finite() {
                return Err(Error::Numeric("non-finite Kraus operator".into()));
            }
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
            kraus_dot,
            label: label.into(),
            eta,
        })
    }

    /// Family of a phase-covariant channel `K_k U_φ` at `φ = 0`.
    fn covariant(noise: Vec<ComplexMatrix>, label: &str, eta: f64) -> Result<Self> {
        let dim = noise[0].cols();
        let gen = PhaseUnitary::generator(dim).scale(I);
        let dots = noise.iter().map(|k| k.matmul(&gen)).collect();
        Self::new(noise, dots, label, Some(eta))
    }

    pub fn kraus_count(&self) -> usize {
        self.kraus.len()
    }

    /// Single noiseless phase channel of the given dimension.
    pub fn identity_phase(dim: usize) -> Self {
        let gen = PhaseUnitary::generator(dim).scale(I);
        Self::new(vec![ComplexMatrix::identity(dim)], vec![gen], "phase", Some(1.0)).expect("well-formed")
    }

    /// Parameter-independent identity channel.
    pub fn identity(dim: usize) -> Self {
        Self::new(
            vec![ComplexMatrix::identity(dim)],
            vec![ComplexMatrix::zeros(dim, dim)],
            "identity",
            None,
        )
        .expect("well-formed")
    }

    /// `Σ K_k† K_k`.
    pub fn kraus_gram_sum(&self) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            acc.add_scaled(ONE, &k.adjoint_mul(k));
        }
        acc
    }

    /// Largest entry of `Σ K†K − I`.
    pub fn trace_preservation_defect(&self) -> f64 {
        self.kraus_gram_sum()
            .max_abs_diff(&ComplexMatrix::identity(self.dim_in))
    }

    /// `β = Σ K̇_k† K_k` in the stored representation.
    pub fn beta(&self) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for (k, kd) in self.kraus.iter().zip(&self.kraus_dot) {
            acc.add_scaled(ONE, &kd.adjoint_mul(k));
        }
        acc
    }

    /// Checks trace preservation and anti-Hermiticity of `β`.
    pub fn validate(&self) -> Result<()> {
        let tp = self.trace_preservation_defect();
        if tp > TP_TOL {
            return Err(Error::Numeric(format!(
                "channel '{}' is not trace preserving (defect {tp:.3e})",
                self.label
            )));
        }
        let beta = self.beta();
        let anti = (&beta + &beta.adjoint()).max_abs();
        if anti > TP_TOL {
            return Err(Error::Numeric(format!(
                "channel '{}' has non-anti-Hermitian beta (defect {anti:.3e})",
                self.label
            )));
        }
        Ok(())
    }

    fn check_state(&self, rho: &ComplexMatrix) -> Result<()> {
        if !rho.is_square() || rho.rows() != self.dim_in {
            return Err(Error::Dimension(format!(
                "state of size {}x{} for channel with input dimension {}",
                rho.rows(),
                rho.cols(),
                self.dim_in
            )));
        }
        check_density(rho)
    }

    /// `(Λ(ρ), dΛ(ρ)/dφ)` at the working point.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
        self.check_state(rho)?;
        Ok(self.apply_unchecked(rho))
    }

    pub(crate) fn apply_unchecked(&self, rho: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        let mut dot = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for (k, kd) in self.kraus.iter().zip(&self.kraus_dot) {
            let k_rho = k.matmul(rho);
            out.add_scaled(ONE, &k_rho.matmul(&k.adjoint()));
            let kd_rho_k = kd.matmul(rho).matmul(&k.adjoint());
            dot.add_scaled(ONE, &kd_rho_k);
            dot.add_scaled(ONE, &kd_rho_k.adjoint());
        }
        (out.hermitian_part(), dot.hermitian_part())
    }

    /// Heisenberg-picture maps used by the see-saw input step:
    /// `(Σ K† X K, Σ K† X K̇ + K̇† X K)`.
    pub fn dual_pair(&self, x: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
        let mut plain = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        let mut dot = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for (k, kd) in self.kraus.iter().zip(&self.kraus_dot) {
            let xk = x.matmul(k);
            plain.add_scaled(ONE, &k.adjoint_mul(&xk));
            let kd_xk = kd.adjoint_mul(&xk);
            dot.add_scaled(ONE, &kd_xk);
            dot.add_scaled(ONE, &kd_xk.adjoint());
        }
        (plain, dot)
    }

    /// `Λ ⊗ id` on an ancilla of dimension `ancilla_dim`.
    pub fn extend(&self, ancilla_dim: usize) -> Self {
        if ancilla_dim <= 1 {
            return self.clone();
        }
        let id = ComplexMatrix::identity(ancilla_dim);
        Self {
            dim_in: self.dim_in * ancilla_dim,
            dim_out: self.dim_out * ancilla_dim,
            kraus: self.kraus.iter().map(|k| tensor_product(k, &id)).collect(),
            kraus_dot: self.kraus_dot.iter().map(|k| tensor_product(k, &id)).collect(),
            label: format!("{}+ancilla{ancilla_dim}", self.label),
            eta: self.eta,
        }
    }

    /// Appends `z` zero Kraus operators; the channel is unchanged but the
    /// representation gains room for rotations into the new slots.
    pub fn padded(&self, z: usize) -> Self {
        let mut out = self.clone();
        for _ in 0..z {
            out.kraus.push(ComplexMatrix::zeros(self.dim_out, self.dim_in));
            out.kraus_dot.push(ComplexMatrix::zeros(self.dim_out, self.dim_in));
        }
        out
    }

    /// Equivalent family with a minimal number of Kraus operators.
    ///
    /// Drops negligible operators, then rotates onto the eigenbasis of the
    /// Hilbert-Schmidt Gram matrix `G_kl = Tr(K_k† K_l)` and keeps the
    /// non-null directions. The derivatives follow the same rotation; the
    /// discarded directions vanish at the working point, so the state and its
    /// first derivative after the channel are unchanged.
    pub fn compressed(&self) -> Result<Self> {
        let keep: Vec<usize> = (0..self.kraus_count())
            .filter(|&k| self.kraus[k].frobenius_norm() >= KRAUS_DROP_NORM)
            .collect();
        let r = keep.len();
        if r == 0 {
            return Err(Error::Numeric("all Kraus operators vanish".into()));
        }
        let gram = ComplexMatrix::from_fn(r, r, |a, b| {
            self.kraus[keep[a]].trace_product(&self.kraus[keep[b]].adjoint()).conj()
        });
        let eig = hermitian_eigensystem(&gram.hermitian_part())?;
        let top = eig.max_eigenvalue();
        let mut kraus = Vec::new();
        let mut kraus_dot = Vec::new();
        for m in (0..r).rev() {
            if eig.eigenvalues[m] <= KRAUS_GRAM_RANK_TOL * top {
                continue;
            }
            let mut km = ComplexMatrix::zeros(self.dim_out, self.dim_in);
            let mut kdm = ComplexMatrix::zeros(self.dim_out, self.dim_in);
            for (a, &k) in keep.iter().enumerate() {
                let w = eig.eigenvectors[(a, m)];
                if w == ZERO {
                    continue;
                }
                km.add_scaled(w, &self.kraus[k]);
                kdm.add_scaled(w, &self.kraus_dot[k]);
            }
            kraus.push(km);
            kraus_dot.push(kdm);
        }
        Self::new(kraus, kraus_dot, self.label.clone(), self.eta)
    }
}

/// Checks unit trace, Hermiticity and positivity of a density matrix.
pub fn check_density(rho: &ComplexMatrix) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::Dimension("density matrix must be square".into()));
    }
    let tr = rho.trace();
    if (tr - ONE).norm() > TP_TOL.max(1e-8) {
        return Err(Error::Domain(format!(
            "density matrix has trace {:.6}{:+.6}i",
            tr.re, tr.im
        )));
    }
    if !rho.is_hermitian(1e-8) {
        return Err(Error::Domain("density matrix is not Hermitian".into()));
    }
    let eig = hermitian_eigensystem(rho)?;
    if eig.eigenvalues[0] < -1e-8 {
        return Err(Error::Domain(format!(
            "density matrix is not positive (min eigenvalue {:.3e})",
            eig.eigenvalues[0]
        )));
    }
    Ok(())
}

fn make_covariant(model: ChannelModel, eta: f64) -> Result<ChannelFamily> {
    ChannelFamily::covariant(model.noise_kraus(eta)?, model.as_str(), eta)
}

/// Dephasing in the phase eigenbasis: `K₀ = √((1+√η)/2) I`, `K₁ = √((1−√η)/2) σ_z`.
pub fn make_dephasing(eta: f64) -> Result<ChannelFamily> {
    make_covariant(ChannelModel::Dephasing, eta)
}

/// Erasure into a third, phase-insensitive level.
pub fn make_erasure(eta: f64) -> Result<ChannelFamily> {
    make_covariant(ChannelModel::Erasure, eta)
}

/// Amplitude damping: `K₀ = diag(1, √η)`, `K₁ = √(1−η)|0⟩⟨1|`.
pub fn make_amplitude_damping(eta: f64) -> Result<ChannelFamily> {
    make_covariant(ChannelModel::AmplitudeDamping, eta)
}

/// Sequential composition `outer ∘ inner`.
pub fn compose(outer: &ChannelFamily, inner: &ChannelFamily) -> Result<ChannelFamily> {
    if inner.dim_out != outer.dim_in {
        return Err(Error::Dimension(format!(
            "cannot compose: inner output dimension {} != outer input dimension {}",
            inner.dim_out, outer.dim_in
        )));
    }
    let mut kraus = Vec::with_capacity(outer.kraus_count() * inner.kraus_count());
    let mut kraus_dot = Vec::with_capacity(kraus.capacity());
    for (ko, kdo) in outer.kraus.iter().zip(&outer.kraus_dot) {
        for (ki, kdi) in inner.kraus.iter().zip(&inner.kraus_dot) {
            kraus.push(ko.matmul(ki));
            let mut d = kdo.matmul(ki);
            d.add_scaled(ONE, &ko.matmul(kdi));
            kraus_dot.push(d);
        }
    }
    let eta = match (outer.eta, inner.eta) {
        (Some(a), Some(b)) if outer.label == inner.label => Some(a * b),
        _ => None,
    };
    let label = if outer.label == inner.label {
        outer.label.clone()
    } else {
        format!("{}*{}", outer.label, inner.label)
    };
    ChannelFamily::new(kraus, kraus_dot, label, eta)
}

/// `n`-fold sequential self-composition, compressed after every step.
pub fn compose_power(ch: &ChannelFamily, n: usize) -> Result<ChannelFamily> {
    if n == 0 {
        return Err(Error::Domain("composition power must be at least 1".into()));
    }
    let mut acc = ch.compressed()?;
    for _ in 1..n {
        acc = compose(ch, &acc)?.compressed()?;
    }
    Ok(acc)
}

/// Parallel product of two families with the Leibniz rule for derivatives.
pub fn tensor(a: &ChannelFamily, b: &ChannelFamily) -> ChannelFamily {
    let mut kraus = Vec::with_capacity(a.kraus_count() * b.kraus_count());
    let mut kraus_dot = Vec::with_capacity(kraus.capacity());
    for (ka, kda) in a.kraus.iter().zip(&a.kraus_dot) {
        for (kb, kdb) in b.kraus.iter().zip(&b.kraus_dot) {
            kraus.push(tensor_product(ka, kb));
            let mut d = tensor_product(kda, kb);
            d.add_scaled(ONE, &tensor_product(ka, kdb));
            kraus_dot.push(d);
        }
    }
    ChannelFamily {
        dim_in: a.dim_in * b.dim_in,
        dim_out: a.dim_out * b.dim_out,
        kraus,
        kraus_dot,
        label: format!("{}x{}", a.label, b.label),
        eta: None,
    }
}

/// Product Kraus representation of `Λ^{⊗n}` with the default dimension cap.
pub fn tensor_power(ch: &ChannelFamily, n: usize) -> Result<ChannelFamily> {
    tensor_power_capped(ch, n, DEFAULT_DIM_CAP)
}

pub fn tensor_power_capped(ch: &ChannelFamily, n: usize, dim_cap: usize) -> Result<ChannelFamily> {
    if n < 1 {
        return Err(Error::Domain("tensor power must be at least 1".into()));
    }
    let exp = u32::try_from(n).map_err(|_| Error::Resource("tensor power too large".into()))?;
    let dim_in = ch.dim_in.checked_pow(exp);
    let dim_out = ch.dim_out.checked_pow(exp);
    let count = ch.kraus_count().checked_pow(exp);
    let (dim_in, dim_out, count) = match (dim_in, dim_out, count) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(Error::Resource("tensor power overflows".into())),
    };
    if dim_in.max(dim_out) > dim_cap {
        return Err(Error::Resource(format!(
            "tensor power dimension {} exceeds cap {dim_cap}",
            dim_in.max(dim_out)
        )));
    }
    if count
        .checked_mul(dim_in * dim_out * 2)
        .is_none_or(|e| e > MAX_KRAUS_ENTRIES)
    {
        return Err(Error::Resource(format!(
            "tensor power needs {count} Kraus operators of size {dim_out}x{dim_in}"
        )));
    }
    let mut acc = ch.clone();
    for _ in 1..n {
        acc = tensor(&acc, ch);
    }
    acc.label = format!("{}^{n}", ch.label);
    acc.eta = ch.eta;
    Ok(acc)
}
