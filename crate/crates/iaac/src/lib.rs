//! A laboratory for actor-critic learning in partially observable problems
//! where the critic may condition on privileged information that the actor
//! never sees.
//!
//! The crate is organised around one modelling idea: alongside the usual
//! POMDP observation, each underlying state emits an *information* sample
//! from a privileged channel, and the observation depends on the state only
//! through that sample. Critics conditioned on (history, information) remain
//! unbiased estimates of the history value, so the policy gradient computed
//! from them is the standard one. Two statistical tests probe whether a
//! candidate information channel is actually worth conditioning on: a kernel
//! conditional-independence test on returns ([`hscic`]) and a
//! return-prediction-error comparison with a Bernstein-style threshold
//! ([`rpe`]).
//!
//! Module map:
//! - [`pomdp`]: tabular models with an explicit information channel, exact
//!   beliefs, and brute-force value oracles used as ground truth in tests.
//! - [`synthetic`]: random instance generator for small tabular problems.
//! - [`envs`]: feature-vector environment trait, benchmark tasks, and the
//!   adapter that runs tabular models as environments.
//! - [`nn`]: a small fixed-precision (f64) neural net core with recurrent
//!   cells and exact backpropagation through time.
//! - [`actor_critic`]: advantage actor-critic with pluggable critic inputs.
//! - [`hscic`], [`rpe`]: the two informativeness criteria.
//! - [`trajectory`]: the rollout record shared by everything above.

pub mod actor_critic;
pub mod envs;
pub mod hscic;
pub mod nn;
pub mod pomdp;
pub mod rng;
pub mod rpe;
pub mod synthetic;
pub mod trajectory;

mod book;
