//! Speaker verification with universal background sparse coding (UBSC) and a
//! diagonal GMM-UBM baseline.
//!
//! The pipeline runs MFCC extraction, background model training, utterance
//! supervector encoding, cosine or inner-product trial scoring, and EER
//! evaluation with repeated-run statistics.

mod binio;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod gmm;
pub mod model;
pub mod parallel;
pub mod pipeline;
pub mod scoring;
pub mod supervector;
pub mod synth;
pub mod ubsc;

pub use error::{Error, ErrorClass, Result};
pub use features::{AudioSignal, MfccConfig, MfccExtractor, UtteranceFeatures};
pub use gmm::DiagonalGmm;
pub use model::BackgroundModel;
pub use scoring::ScoringMethod;
pub use supervector::{ModelKind, Supervector};
pub use ubsc::UbscModel;
