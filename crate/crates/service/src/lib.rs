pub mod api;
pub mod cli;
pub mod config;
pub mod http_driver;
pub mod server;
