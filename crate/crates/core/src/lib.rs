//! Stationary-phase data of symplectic maps: Cartan classification of
//! `Sp(2n, ℝ)`, regularized determinants and eta invariants of the loop
//! operator `D = −½ J (d/dt + E)`, spectral flow, holomorphic Lefschetz sums
//! and the torus mapping-class specialization.
//!
//! Numeric code is generic over [`Real`] (`f32`, `f64`); the aliases below fix
//! `f64`. Torus fixed points are enumerated exactly in [`Rational64`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod lefschetz;
pub mod mapping_torus;
pub mod scalar;
pub mod spectral;
pub mod symplectic;

pub use num_rational::Rational64;

pub use error::{Error, Result};
pub use lefschetz::{
    cohomology_trace_oracle, fixed_point_weight, fixed_point_weight_eta_route, lefschetz_sum,
    projective_line_fixed_points, sqm_partition, FixedPointDatum, PartitionReport, ToyModelSpec,
};
pub use mapping_torus::{
    action_difference, brute_force_torus_fixed_points, build_mapping_torus_report,
    enumerate_pillowcase_fixed_points, h1_action_matrix, hyperbolic_classes, level_shift,
    torsion_sqrt_contribution, torus_fixed_points, witten_stationary_phase, FlatConnectionDatum,
    Group, MappingClass, MappingTorusOptions, MappingTorusReport, PillowcasePoint,
    StabilizerClass, TorusPointInfo, WittenSum,
};
pub use scalar::{lit, CMatrix, Real, Tolerances};
pub use spectral::{
    abs_det, block_abs_det, block_eta, block_operator, block_spectrum, blocks_operator, eta,
    eta_of_operator, eta_regularized_sum, eta_trace_formula, extrapolated_det_oracle,
    mode_spectrum, path_samples, sl2_eigenvalues, spectral_flow_linear, standard_form_operator,
    truncated_det_oracle, BlockSpectrum, Crossing, EtaEstimate, ModeSpectrum, PathSample,
    Sl2Coefficients, SpectralFlowResult, DEFAULT_S_VALUES,
};
pub use symplectic::{
    cartan_decompose, check_symplectic, classify_sl2, log_generator, standard_j, standard_j0,
    BlockKind, CartanBlock, CartanDecomposition, ComplexStructure, OperatorSpec, Sl2Class,
    SymplecticMatrix,
};

pub type SymplecticMatrix64 = SymplecticMatrix<f64>;
pub type SymplecticMatrix32 = SymplecticMatrix<f32>;
pub type CartanBlock64 = CartanBlock<f64>;
pub type CartanDecomposition64 = CartanDecomposition<f64>;
pub type ComplexStructure64 = ComplexStructure<f64>;
pub type OperatorSpec64 = OperatorSpec<f64>;
pub type Sl2Coefficients64 = Sl2Coefficients<f64>;
pub type SpectralFlowResult64 = SpectralFlowResult<f64>;
pub type EtaEstimate64 = EtaEstimate<f64>;
pub type FixedPointDatum64 = FixedPointDatum<f64>;
pub type PartitionReport64 = PartitionReport<f64>;
pub type ToyModelSpec64 = ToyModelSpec<f64>;
pub type FlatConnectionDatum64 = FlatConnectionDatum<f64>;
pub type WittenSum64 = WittenSum<f64>;
pub type MappingTorusReport64 = MappingTorusReport<f64>;
pub type MappingTorusOptions64 = MappingTorusOptions<f64>;
