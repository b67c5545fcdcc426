//! Independence conditional autoencoder (ICAE) for attribute conversion.
//!
//! The crate is split along the pipeline:
//!
//! - [`numkit`]: RNG, dense networks, Adam, gradient checking.
//! - [`genproc`]: synthetic ground-truth processes `x = f(s, c)` with oracle access.
//! - [`dataset`]: frame datasets and their binary/CSV formats.
//! - [`units`]: k-means proxy units and the prior-asymmetry audit.
//! - [`icae`]: the encoder/decoder model, its objective and trainer.
//! - [`indep`]: HSIC statistic and permutation test.
//! - [`verify`]: empirical checks of invertibility, latent consistency and
//!   the conversion error bound.

mod codec;
pub mod dataset;
pub mod error;
pub mod genproc;
pub mod icae;
pub mod indep;
pub mod numkit;
pub mod units;
pub mod verify;

pub use error::{Error, Result};
