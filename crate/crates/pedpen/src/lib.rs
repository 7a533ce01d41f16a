//! Bayesian age-specific penetrance estimation from family pedigree data.
//!
//! Estimates the age- and sex-specific probability that carriers of a
//! pathogenic variant develop a disease, from family-history pedigrees in
//! which carrier status is mostly unobserved. Carrier risk is modeled as a
//! threshold Weibull scaled by a lifetime asymptote; pedigree likelihoods
//! are computed exactly by peeling; the posterior over quantile-space
//! parameters is sampled with an adaptive random-walk Metropolis chain.
//! Missing diagnosis and censoring ages can be imputed during sampling, and
//! a pedigree simulator generates synthetic ascertained studies with known
//! ground truth for end-to-end validation.
//!
//! The `examples/` directory contains one runnable program per capability;
//! the `pedpen` binary wraps the same functionality as `estimate`,
//! `simulate`, `validate` and `priors` subcommands.

pub mod cli;
pub mod curve;
pub mod error;
pub mod imputation;
pub mod likelihood;
pub mod pedigree;
pub mod priors;
pub mod report;
pub mod sampler;
pub mod simulate;

pub use curve::{BaselineKind, BaselineTable, QuantileParams, Sex, WeibullPenetrance};
pub use error::{Error, Result};
pub use likelihood::{GenotypeModel, PersonFactors};
pub use pedigree::{Individual, Pedigree, ValidationIssue};
pub use priors::{DistributionData, PriorSpec};
pub use sampler::{ChainConfig, ChainResult, PosteriorSamples, ProposalVector};
pub use simulate::SimConfig;
