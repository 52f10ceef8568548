//! Compressed-domain hand-gesture recognition and a solar harvesting model.
//!
//! Frames are differenced, block averaged and randomly projected; motion
//! centers are read off the projections with a smashed filter and classified
//! by nearest neighbor under dynamic time warping. The [`energy`] module models
//! the photovoltaic supply that powers the pipeline.

pub mod cli;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod imaging;
pub mod pipeline;
pub mod projection;
pub mod recognizer;
pub mod scalar;
pub mod smashed_filter;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type DifferenceImage = imaging::DifferenceImage<f64>;
pub type BlockImage = imaging::BlockImage<f64>;
pub type CompressedVector = projection::CompressedVector<f64>;
pub type TemplateBank = smashed_filter::TemplateBank<f64>;
pub type MotionCenter = smashed_filter::MotionCenter<f64>;
pub type MotionTrace = recognizer::MotionTrace<f64>;
pub type TracePoint = recognizer::TracePoint<f64>;
pub type GestureClass = recognizer::GestureClass<f64>;
pub type GestureModel = recognizer::GestureModel<f64>;
pub type Verdict = recognizer::Verdict<f64>;
pub type Pipeline = pipeline::Pipeline<f64>;
pub type PvCellParams = energy::PvCellParams<f64>;
pub type ArrayConfig = energy::ArrayConfig<f64>;
pub type LoadModel = energy::LoadModel<f64>;
pub type HarvesterConfig = energy::HarvesterConfig<f64>;
pub type HarvesterState = energy::HarvesterState<f64>;

pub use imaging::Frame;
pub use projection::ProjectionMatrix;
