//! HTTP/JSON service and command line front end for multimodal Iconclass
//! search.

pub mod api;
pub mod cli;
pub mod config;
pub mod service;

pub use config::{ConfigError, ServiceConfig};
pub use service::{ApiError, Mode, SearchOptions, SearchResponse, Service};
