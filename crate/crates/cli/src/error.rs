//! Exit-code classification: 2 for bad input, 3 for failures while running.

use std::fmt;

use fracture_learn::embed::EmbedError;
use fracture_learn::model::ModelError;
use fracture_learn::train::TrainError;

/// Marks an error as caused by the manifest or input data.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

fn model_is_invalid(e: &ModelError) -> bool {
    !matches!(e, ModelError::Autodiff(_))
}

fn train_is_invalid(e: &TrainError) -> bool {
    match e {
        TrainError::Data(_) | TrainError::Incompatible(_) | TrainError::Plan(_) => true,
        TrainError::Model(m) => model_is_invalid(m),
        TrainError::Embed(EmbedError::DimMismatch { .. } | EmbedError::EmptyText | EmbedError::Progression(_)) => true,
        _ => false,
    }
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<Invalid>() {
            return 2;
        }
        if let Some(t) = cause.downcast_ref::<TrainError>() {
            return if train_is_invalid(t) { 2 } else { 3 };
        }
        if let Some(m) = cause.downcast_ref::<ModelError>() {
            return if model_is_invalid(m) { 2 } else { 3 };
        }
    }
    3
}
