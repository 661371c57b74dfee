//! Subcommand implementations and the plumbing they share.

pub mod cache;
pub mod precond;
pub mod scaling;
pub mod solve;

use num_complex::Complex64;
use wep_core::{DiscreteProblem, SchurAction};

use crate::config::RunConfig;
use crate::error::CliError;

/// Builds the discrete problem a configuration describes.
pub(crate) fn problem(cfg: &RunConfig) -> Result<DiscreteProblem, CliError> {
    Ok(DiscreteProblem::new(
        cfg.geometry.clone(),
        cfg.n_x,
        cfg.n_z,
        cfg.k_bar,
    )?)
}

/// Builds the Schur action at the configured shift.
pub(crate) fn schur_action<'a>(
    cfg: &RunConfig,
    prob: &'a DiscreteProblem,
) -> Result<SchurAction<'a>, CliError> {
    Ok(SchurAction::new(prob, cfg.sigma)?)
}

/// `a + bi` with the sign folded into the separator, for summaries.
pub(crate) fn fmt_complex(z: Complex64) -> String {
    if z.im.is_sign_negative() {
        format!("{} - {}i", z.re, -z.im)
    } else {
        format!("{} + {}i", z.re, z.im)
    }
}

pub(crate) fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
