//! Cube partitions, the dyadic norms `l^p_j U`, `X`, `Y`, `X_j`, `Y_j`, the
//! `l^1` Sobolev scales and frequency envelopes.

mod cubes;
mod envelope;
mod norms;

pub use cubes::{cube_of, cube_sums, CubePartition};
pub use envelope::{default_delta, frequency_envelope, FrequencyEnvelope, ENVELOPE_CONSTANT};
pub use norms::{
    band_norms, l1_hs, l1_sobolev_norm, l1_xs, l1_ys, l1j_band_norm, lpj_norm, lpj_norm_with, pairing_tx,
    sup_norm, weighted_dyadic_norm, weighted_sum, x_norm, x_norm_density, y_bounds, y_upper_density, BaseNorm,
    Densities, Dyadic, Exponent, Space, YBounds,
};
