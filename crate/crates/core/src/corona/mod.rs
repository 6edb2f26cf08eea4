//! Phase-aberration correction for a simulated coronagraph.
//!
//! An aberrated image `Xa` is corrected by a pupil-plane phase `Phi`:
//! `Xt = real(ifft2(fft2(Xa) .* exp(j Phi)))`. The phase is chosen to
//! minimize the energy of deviant pixels: everything under the occultation
//! mask plus negative pixels in the open annulus.

pub mod bench;
pub mod check;
pub mod fft;
pub mod io;
pub mod memory;
pub mod model;
pub mod optimize;
pub mod scene;

pub use bench::{benchmark, BenchRow};
pub use fft::{dft_operator, fft2, fft2_pages, ifft2, ifft2_pages};
pub use model::{hess_mult, sse, Hessian, Model, Sse};
pub use optimize::{optimize, OptOptions, OptReport, StopReason};
pub use scene::{make_aberration, make_ground_truth, make_source, synthesize, Planet, Scene, SceneConfig};
