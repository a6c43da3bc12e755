//! Session layer for gridthor worlds.
//!
//! Clients speak newline-delimited JSON frames over TCP, or the same frames
//! one per message over WebSocket. A single tick owner holds the world; see
//! [`server`] for the threading model and [`frame`] for the vocabulary.

pub mod client;
pub mod frame;
pub mod server;
pub mod transport;

pub use client::{run_policy, Client};
pub use frame::{Body, Frame, SessionRole, MAX_FRAME_BYTES};
pub use server::{serve, EpisodeOutcome, ServerConfig, ServerHandle, TickMode, DEFAULT_LISTEN, DEFAULT_WEB_LISTEN};
pub use transport::Assets;
