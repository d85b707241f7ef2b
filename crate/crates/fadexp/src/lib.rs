//! Average minimum mean-square error (MMSE) and mutual information for
//! signaling over fading channels, with asymptotic expansions at high and
//! low SNR.
//!
//! The library is organized around three objects:
//!
//! * a canonical AWGN curve ([`canonical::CanonicalCurve`]) giving the MMSE
//!   and mutual information of a fixed input on `y = sqrt(snr) x + n`,
//! * a fading gain model ([`fading::FadingModel`]) described through the
//!   density of `|h|^2` and its Mellin transform,
//! * expansion builders ([`expansions`]) that combine the two into high-
//!   and low-SNR series for the average MMSE and average mutual
//!   information, cross-checked by quadrature and Monte-Carlo oracles
//!   ([`reference`]).
//!
//! [`powalloc`] solves the optimal power allocation across a bank of
//! parallel fading channels, both exactly (greedy water-filling on the
//! average-MMSE curves) and through the high-SNR proxy coefficients.

pub mod canonical;
pub mod constellation;
pub mod error;
pub mod fading;
pub mod mellin;
pub mod quad;
pub mod reference;
pub mod specfun;

pub use error::{Error, Result};
