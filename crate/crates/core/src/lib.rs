//! Double forms on Euclidean space and the curvature invariants built from them.

pub mod basis;
pub mod curvature;
pub mod decomposition;
pub mod double_form;
pub mod error;
pub mod identities;
pub mod invariants;
pub mod metric_variation;
#[doc(hidden)]
pub mod mutation;

pub use basis::{binomial, complement_sign, enumerate_basis, merge_sign, rank, unrank, IndexSet};
pub use double_form::{derivation, f_h, factorial, identity, metric_power, DoubleForm};
pub use error::{Error, Result};
pub use decomposition::{
    component_vanishing_report, decompose, decomposition_report, reconstruct, Decomposition, DecompositionReport,
};
pub use metric_variation::{check_variation_lemma, induced_inner_double, induced_inner_p_forms, Metric};
pub use curvature::{corpus, first_bianchi_residual, realize, ricci, scalar_curvature, sectional_curvature, CurvatureModel};
pub use invariants::{
    classify, conf_flat_equivalences, gauss_bonnet, grad_g2k, grad_h2k, is_einstein_2k, is_hyper_einstein_2k,
    is_weakly_einstein_2k, lovelock, obstruction_sign, pointwise_minimality, thorpe_class, thorpe_power,
    ClassificationReport,
};
pub use identities::{
    check, constant_report, derive_c_constant, run_suite, CaseSpec, ConstantReport, IdentityCase, SuiteConfig, SuiteReport,
};
