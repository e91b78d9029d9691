//! Coexistence of terrestrial downlink and LEO satellite uplink: nulling
//! beamformers, null-steering codebooks, ephemeris tracking and Monte-Carlo
//! INR / SNR-loss evaluation.

pub mod antenna;
pub mod channel;
pub mod codebook;
pub mod ephemeris;
pub mod geometry;
pub mod linalg;
pub mod linkbudget;
pub mod nulling;
pub mod scenario;
