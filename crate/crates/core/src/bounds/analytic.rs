//! Closed-form generators for the built-in channel models.
//!
//! Each generator is expressed for the Kraus operators produced by
//! [`ChannelModel::noise_kraus`](crate::channels::ChannelModel::noise_kraus)
//! with the phase applied before the noise.

use super::KrausGenerator;
use crate::channels::ChannelModel;
use crate::error::{check_eta, Error, Result};
use crate::linalg::ComplexMatrix;

fn real_symmetric(rows: &[&[f64]]) -> KrausGenerator {
    KrausGenerator {
        h: ComplexMatrix::from_real_rows(rows),
    }
}

fn check_below_one(eta: f64) -> Result<()> {
    check_eta(eta)?;
    if eta >= 1.0 {
        return Err(Error::Domain("no beta = 0 representation exists at eta = 1".into()));
    }
    Ok(())
}

/// Dephasing generator with `4‖α‖ = η`, the single-probe QFI.
pub fn dephasing_single_probe(eta: f64) -> Result<KrausGenerator> {
    check_eta(eta)?;
    let c = -(1.0 - eta).sqrt() / 2.0;
    Ok(real_symmetric(&[&[0.5, c], &[c, 0.5]]))
}

/// Dephasing generator with `β = 0` and `4‖α‖ = η/(1−η)`.
pub fn dephasing_beta0(eta: f64) -> Result<KrausGenerator> {
    check_below_one(eta)?;
    let c = -1.0 / (2.0 * (1.0 - eta).sqrt());
    Ok(real_symmetric(&[&[0.5, c], &[c, 0.5]]))
}

/// Erasure generator with `β = 0` and `4‖α‖ = η/(1−η)`.
pub fn erasure_beta0(eta: f64) -> Result<KrausGenerator> {
    check_below_one(eta)?;
    let z = 1.0 / (2.0 * (1.0 - eta));
    Ok(KrausGenerator {
        h: ComplexMatrix::from_real_diag(&[0.5, 0.0, -eta * z, 1.0 + eta * z]),
    })
}

/// Amplitude-damping generator with `β = 0` and `4‖α‖ = 4η/(1−η)`.
pub fn amplitude_damping_beta0(eta: f64) -> Result<KrausGenerator> {
    check_below_one(eta)?;
    Ok(KrausGenerator {
        h: ComplexMatrix::from_real_diag(&[0.0, 1.0 / (1.0 - eta)]),
    })
}

/// `β = 0` generator for any built-in model.
pub fn beta0_generator(model: ChannelModel, eta: f64) -> Result<KrausGenerator> {
    match model {
        ChannelModel::Dephasing => dephasing_beta0(eta),
        ChannelModel::Erasure => erasure_beta0(eta),
        ChannelModel::AmplitudeDamping => amplitude_damping_beta0(eta),
    }
}

/// Closed form of `4 min_{β=0} ‖α‖`.
pub fn beta0_value(model: ChannelModel, eta: f64) -> Result<f64> {
    check_below_one(eta)?;
    Ok(match model {
        ChannelModel::Dephasing | ChannelModel::Erasure => eta / (1.0 - eta),
        ChannelModel::AmplitudeDamping => 4.0 * eta / (1.0 - eta),
    })
}

/// Best single-probe QFI with an ancilla, `4 min ‖α‖` for one channel use.
pub fn extended_single_value(model: ChannelModel, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(match model {
        ChannelModel::Dephasing | ChannelModel::Erasure => eta,
        ChannelModel::AmplitudeDamping => 4.0 * eta / (1.0 + eta.sqrt()).powi(2),
    })
}
