//! Aesthetic scoring of group photographs.
//!
//! Seven face-state features and 83 generic image features form a 90-slot
//! vector per photo. An RBF SVM classifies photos as good or bad and a
//! random forest regresses the mean human rating. The numeric code is
//! generic over [`scalar::Real`]; the aliases below fix it to `f64`.

// `!(x > 0)` style checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod face_model;
pub mod features;
pub mod generic_features;
pub mod group_features;
pub mod ml;
pub mod scalar;

pub use config::Config;
pub use scalar::Real;

pub type FaceInfo = face_model::FaceInfo<f64>;
pub type FaceSequence = face_model::FaceSequence<f64>;
pub type ThresholdConfig = face_model::ThresholdConfig<f64>;
pub type GroupFeatureVector = group_features::GroupFeatureVector<f64>;
pub type TrainedModel = ml::TrainedModel<f64>;
pub type MlConfig = ml::MlConfig<f64>;
pub type FeatureTable = features::FeatureTable<f64>;
