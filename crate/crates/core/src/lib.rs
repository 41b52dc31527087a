//! Partial least squares analysis of how bicycle-count change rates relate
//! to the socioeconomic makeup of each count station's catchment.

pub mod frames;
pub mod exec;
pub mod plsr;
pub mod catchment;
pub mod ingest;
pub mod report;
pub mod reproduce;
