// SPDX-License-Identifier: Apache-2.0

//! Refinement flow for block-diagram applications onto a mixed
//! hardware/software architecture.
//!
//! A model moves through four levels: functional ([`model`]), partitioned
//! transaction level ([`tlm`]), macro architecture ([`gma`]) and micro
//! architecture ([`swsynth`], [`hwsynth`]). [`sim`] simulates every level and
//! compares the resulting traces; [`flow`] strings the stages together.

pub mod model;
pub mod tlm;
pub mod hwsynth;
pub mod gma;
pub mod swsynth;
pub mod sim;
pub mod flow;
