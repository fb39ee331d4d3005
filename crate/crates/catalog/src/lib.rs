//! Experience catalog: a file-backed bundle store, its HTTP API and a
//! blocking client for it.

pub mod client;
pub mod server;
pub mod store;

pub use client::{Client, ClientError};
pub use server::{router, serve, spawn, Config, Running};
pub use store::{CatalogEntry, Store, StoreError, VersionInfo};
