pub mod annotation;
pub mod config;
pub mod embed;
pub mod ingest;
pub mod metrics;
pub mod network;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod tagger;
