//! Random block Toeplitz band matrices with slowly growing bandwidth, the
//! GUE/GOE one-point densities they converge to, and the pair-partition
//! combinatorics behind their moments.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, the Monte
//! Carlo harness and the command line live in `tbm-lab`.

#![no_std]

extern crate alloc;

pub mod band;
pub mod density;
pub mod eigen;
pub mod ensemble;
pub mod error;
pub mod hermite;
pub mod pairing;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use band::{DenseSymmetric, SymmetricBand};
pub use density::{density_cdf, density_moment, goe_density, gue_density, DensityModel, EnsembleClass, QuadratureConfig};
pub use eigen::{eigenvalues_band, eigenvalues_dense, SolverDiagnostics, SpectralSample};
pub use ensemble::{
    build_matrix, build_matrix_with_budget, entry_distribution_moments, resolve_bandwidth, sample_block_family,
    BandwidthSchedule, BlockFamily, BlockToeplitzMatrix, EnsembleSpec, EntryDistribution, Normalization,
    SymmetryClass,
};
pub use error::{Error, Result};
pub use hermite::{hermite, wave_function, WaveFunctionTable};
pub use pairing::{
    build_f_map, catalan_limit_check, enumerate_pair_partitions, free_index_count, goe_moment,
    goe_moment_brute_force, gue_moment, mixed_trace_gue, orbit_count, PairPartition, Rational, TraceWord,
};
pub use stats::{empirical_moments, ks_distance, ks_two_sample};
