//! Schmidt-rank norms, entanglement measures and linear preserver
//! classification on finite-dimensional tensor-product spaces.

pub mod acceptance;
pub mod classify;
pub mod error;
pub mod linalg;
pub mod multipartite;
pub mod norms;
pub mod oracle;
pub mod scalar;
pub mod tensor;

pub use classify::{
    check_schmidt_rank_preservation, choi_kraus, classify_cp_sk_preserver, classify_local_form,
    classify_norm_isometry, operator_schmidt_split, sep_isometry_implies_unitary_check, verify_thm_main,
    ClassifyOptions, CpPreserverReport, CpVerdict, IsometryDecomposition, IsometryOutcome, KrausSet,
    LocalFormReport, LocalVerdict, NonIsometryWitness, OperatorSchmidt, PreservationReport,
    SepIsometryRecord, SuperOp, ThmMainRecord,
};
pub use error::{Error, Result};
pub use multipartite::{
    gme, gme_invariance_check, is_product_state, recover_local_form_multipartite, separable_sum_test, FactorList,
    GmeOptions, GmeResult, RecoverOptions, RecoverStatus, RecoveredForm,
};
pub use norms::{
    operator_s_norm, s_norm, schmidt_decompose, schmidt_rank, truncate_k, NormResult, SNorm,
    SchmidtDecomposition, SeesawOptions,
};
pub use oracle::{
    brute_force_operator_s_norm, counterexample_search, grid_gme, rank_one_sum_property, replay_trial, OracleConfig,
    Question, SearchConfig, SearchReport,
};
pub use scalar::{Real, C};
pub use tensor::{
    axis_transpose, op_to_vec, swap_operator, tensor_product, vec_to_op, Cut, Ket, Opr, Permutation,
    Shape, TensorItem,
};

pub type Ket64 = Ket<f64>;
pub type Opr64 = Opr<f64>;
pub type Ket32 = Ket<f32>;
pub type Opr32 = Opr<f32>;
pub type SuperOp64 = SuperOp<f64>;
pub type SuperOp32 = SuperOp<f32>;
