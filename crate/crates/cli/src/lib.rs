//! Command implementations and the HTTP/WebSocket service behind the
//! `vocalplay` binary.

pub mod commands;
pub mod config;
pub mod service;
