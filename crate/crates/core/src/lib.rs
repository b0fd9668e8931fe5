//! Capacity simulation and bound evaluation for wireless multihop networks
//! under non-uniform traffic (asymmetric, multicast, cluster, hybrid).
//!
//! The crate is organised around the pipeline
//! `traffic -> geometry -> routing -> schedule`, with `bounds` evaluating the
//! closed-form capacity expressions and `stats` driving Monte Carlo
//! verification campaigns. All numeric kernels are generic over the scalar
//! type through [`Real`]; `f64` is the default used by the CLI and the type
//! aliases at the crate root.

pub mod bounds;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod rng;
pub mod routing;
pub mod schedule;
pub mod stats;
pub mod traffic;

use std::fmt;

pub use error::{Error, Result};

/// Scalar type required by the numeric kernels (implemented by `f32`/`f64`).
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + fmt::Debug
    + fmt::Display
    + Default
    + Send
    + Sync
    + serde::Serialize
    + serde::de::DeserializeOwned
    + 'static
{
}

impl<T> Real for T where
    T: num_traits::Float
        + num_traits::FromPrimitive
        + num_traits::ToPrimitive
        + fmt::Debug
        + fmt::Display
        + Default
        + Send
        + Sync
        + serde::Serialize
        + serde::de::DeserializeOwned
        + 'static
{
}

/// Converts an `f64` into the working scalar type.
#[inline]
pub(crate) fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 -> scalar conversion")
}

/// Natural log of 2 evaluated in the working precision.
#[inline]
pub(crate) fn ln2<T: Real>() -> T {
    real::<T>(2.0).ln()
}

// Concrete aliases for the default double-precision instantiation.
pub type Point64 = geometry::Point<f64>;
pub type Lattice64 = geometry::Lattice<f64>;
pub type ChannelParams64 = channel::ChannelParams<f64>;
pub type FadingModel64 = channel::FadingModel<f64>;
pub type PairFading64 = channel::PairFading<f64>;
pub type Instance64 = traffic::NetworkInstance<f64>;
pub type BoundReport64 = bounds::BoundReport<f64>;
pub type TransmissionRecord64 = schedule::TransmissionRecord<f64>;
pub type TrialSummary64 = stats::TrialSummary<f64>;
pub type ScalingFit64 = stats::ScalingFit<f64>;
// Single-precision aliases for the same surface.
pub type Point32 = geometry::Point<f32>;
pub type Lattice32 = geometry::Lattice<f32>;
pub type ChannelParams32 = channel::ChannelParams<f32>;
pub type Instance32 = traffic::NetworkInstance<f32>;
