//! Simulator and policy-gradient harness for goal-oriented question-asking
//! games over symbolic object worlds.
//!
//! A [`world::GameInstance`] holds a list of attribute-valued objects and a
//! hidden target. A questioner picks attribute-equality questions, an
//! [`oracle`] answers them about the target, and a [`guesser`] names the
//! target at the end. During training and evaluation a candidate tracker
//! ([`ade`]) records how each question split the surviving candidates, which
//! feeds the bisection and candidate-minimization [`rewards`].

pub mod ade;
pub mod cli;
pub mod config;
pub mod error;
pub mod guesser;
pub mod metrics;
pub mod oracle;
pub mod par;
pub mod policy;
pub mod replay;
pub mod rewards;
pub mod rng;
pub mod trainer;
pub mod world;

pub use error::{Error, Result};
