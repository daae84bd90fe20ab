pub mod accounts;
pub mod analysis;
pub mod api;
pub mod clock;
pub mod config;
pub mod domain;
pub mod jobs;
pub mod provider;
pub mod service;
pub mod store;
