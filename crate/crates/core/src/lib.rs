// SPDX-License-Identifier: Apache-2.0

pub mod cfl;
pub mod cli;
pub mod ci;
pub mod conditions;
pub mod engine;
pub mod frontend;
pub mod fuzz;
pub mod metrics;
pub mod oracle;
pub mod pdg;
