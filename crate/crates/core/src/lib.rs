#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod env;
pub mod error;
pub mod limitlaw;
pub mod montecarlo;
pub mod numeric;
pub mod regimes;
pub mod spectral;
pub mod survival;
pub mod validation;

pub use env::{
    gap_structure, sample_environment, BinomialMode, Environment, GapHistogram, GapStructure,
    Interval, Site,
};
pub use error::{Error, Result};
pub use limitlaw::{
    scaling_params, BetaKind, GapSumSampler, LevyTriple, ScalingParams, WindowRule,
};
pub use montecarlo::{KilledEstimate, McEstimate, WalkSample};
pub use regimes::{DomainConstants, PhaseRow, RegimeCase, ScaleDescriptor};
pub use spectral::{AsymptoticEnvelope, IntervalSpectrum, PrincipalEigenpair};
pub use survival::{SurvivalBounds, SurvivalMode, SurvivalValue, TruncationBound};
