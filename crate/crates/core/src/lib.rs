//! Egocentric gaze analytics toolkit.
//!
//! Measures how large scene objects appear from a head-mounted camera
//! (angular silhouette sizes), detects fixations in the gaze stream and
//! assigns them to objects, summarizes size distributions per interaction
//! space, and runs context-window experiments that feed recent-gaze history
//! to a vision-language agent or to scripted baselines.
//!
//! Everything downstream of a seed is deterministic: same inputs and seeds
//! produce byte-identical outputs, independent of worker-thread count.

pub mod analysis;
pub mod experiments;
pub mod gaze;
pub mod geometry;
pub mod rng;
pub mod scene;
pub mod selftest;
pub mod synth;
pub mod vlm;
