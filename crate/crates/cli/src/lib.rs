//! Pipeline driver and HTTP service for `ebm-aml` models.

pub mod config;
pub mod patient;
pub mod payload;
pub mod service;
