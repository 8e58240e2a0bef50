//! Crowd-dynamics anomaly detection from geo-located post streams.
//!
//! Posts are bucketed into weekday time slots, reduced to a few
//! representative locations per slot, mapped onto a grid alphabet, and the
//! entropy of each weekday's symbol stream is tracked over time. Days whose
//! entropy moves the most are ranked as candidate special days.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod detect;
pub mod entropy;
pub mod geo;
pub mod ingest;
pub mod pipeline;
pub mod study;
pub mod symbolize;
pub mod synthgen;
