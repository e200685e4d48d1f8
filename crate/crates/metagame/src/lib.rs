//! Cooperative-game attribution toolkit.
//!
//! The crate views a model prediction as a cooperative game over features
//! (coalitions evaluated by baseline masking) and provides, on top of that:
//!
//! - first-order attributions: exact Shapley values, gradient × input,
//!   integrated gradients — each also in a coalition-restricted form;
//! - pairwise interaction indices: STII, FSII, 2-SV, SOP, and serial methods
//!   (serial Shapley, integrated Hessians);
//! - directional meta-attributions φ_{j→i}: the Shapley value of feature j
//!   in the metagame whose payoff is the attribution of a fixed target i,
//!   for any base method including externally supplied attribution tables;
//! - sampling estimators (permutation Monte Carlo, kernel-weighted
//!   regression) with budgets, pairing, and per-target random streams;
//! - a symbolic model zoo with exact dual-number derivatives, and a JSON
//!   game-file format for games, Möbius expansions, and attribution tables.

pub mod approx;
pub mod coalition;
pub mod dual;
pub mod error;
pub mod fileio;
pub mod first_order;
pub mod game;
pub mod interaction;
pub mod meta;
pub mod mobius;
pub mod model;
pub mod reference;
pub mod zoo;

pub use approx::{
    default_estimator, meta_attribution_approx, shapley_mc_permutation, shapley_regression,
    Budget, EstimateWithError, EstimatorKind,
};
pub use coalition::{all_coalitions, Coalition};
pub use error::{Error, Result};
pub use fileio::{
    dense_document, document_to_string, load_document, masked_model_document, mobius_document,
    parse_document, table_document, write_document, GameDocument, LoadedGame, MonomialSpec,
};
pub use first_order::{
    grad_times_input, integrated_gradients, shapley_value_exact, shapley_weights,
    AttributionVector, BaseMethodTag, GxIAttributor, IgAttributor, RestrictedAttributor,
    SvAttributor, DEFAULT_IG_STEPS,
};
pub use game::{
    check_capacity, enumerate_game, enumerate_game_with_limit, DenseGame, EvaluationCache,
    MaskedModel, ModelFn, ValueOracle, DEFAULT_EXACT_LIMIT,
};
pub use interaction::{
    fsii_from_mobius, integrated_hessians, mobius_pair_index, serial_shapley, sop_pairwise,
    stii_from_mobius, stii_pairwise, two_shapley_from_mobius, PairIndex, PairMethodTag,
    SerialMatrix, SerialMethodTag, SopDecomposition,
};
pub use meta::{
    check_hierarchical_efficiency, meta_attribution_exact, meta_attribution_for_targets,
    meta_external, meta_grad_times_input, meta_integrated_gradients, meta_pair_interaction,
    meta_shapley_exact, symmetrize, DirectionalMatrix, ExternalAttributionTable,
    ExternalAttributor, MetaGameOracle,
};
pub use mobius::{
    mobius_transform, mobius_transform_with, MobiusExpansion, MobiusOracle,
    DEFAULT_SPARSITY_THRESHOLD,
};
pub use model::{Monomial, SymbolicModel};
pub use reference::{reference_table, ReferenceRow};
pub use zoo::{
    random_mobius_game, random_mobius_oracle, random_sparse_polynomial, table1_masked,
    table1_model, SymmetricGame,
};
