//! Ground-plane priors for roadside monocular 3D detection.
//!
//! - [`geometry`]: pinhole projection, ray/ground depth, plane fitting,
//!   plane/attitude conversion, extrinsic perturbation and the induced
//!   homography.
//! - [`maps`]: ground depth maps, global and refined plane-equation maps,
//!   triangle rasterization, the GPKM map file format.
//! - [`dataset`]: KITTI-style label/calib/denorm files and a deterministic
//!   synthetic roadside scene generator.
//! - [`analysis`]: depth vs. attitude histograms and the row-correlation
//!   overlap study under camera perturbation.
//! - [`attention`]: forward-only reference encoder/decoder blocks and the
//!   training losses with analytic gradients.
//! - [`cli`]: the `gpk` command line front-end.

pub mod analysis;
pub mod attention;
pub mod cli;
pub mod dataset;
pub mod geometry;
pub mod maps;
