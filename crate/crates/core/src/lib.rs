//! Quantum Fisher information bounds for estimating the strength `λ` and the
//! order `ζ` of a nonlinear medium `H = λ (a + a†)^ζ` with displaced squeezed
//! probes.
//!
//! The closed-form path ([`moments`], [`qfi`]) is checked against a
//! brute-force truncated Fock-space backend ([`fock_oracle`]).

pub mod asymptotics;
pub mod combinatorics;
pub mod error;
pub mod fock_oracle;
pub mod moments;
pub mod numeric;
pub mod optimizer;
pub mod probe;
pub mod qfi;
pub mod scan;

pub use error::{Error, Result};
pub use moments::{moment_general, moment_general_with, moment_real_axis, MomentVector};
pub use numeric::Precision;
pub use optimizer::{
    find_threshold, optimize_gamma, GammaOptResult, OptTarget, TargetKind, Threshold,
};
pub use probe::{bogoliubov_view, make_probe, BogoliubovView, ProbeConvention, ProbeSpec};
pub use qfi::{
    joint_bound_inverse, qfi_cross, qfi_element_with, qfi_lambda, qfi_matrix, qfi_matrix_with,
    qfi_zeta, reparametrize_physical, scalar_bound_inverse, Element, ModelSpec, QfiMatrix,
};
