//! Transfer-operator machinery for AKLT valence-bond states on trees and
//! tree-like graphs.

pub mod bilayer;
pub mod cell;
pub mod error;
pub mod network;
pub mod oracle;
pub mod pauli;
pub mod rational;
pub mod reference;
pub mod site;
pub mod transfer;
pub mod tree;

pub use error::{Error, Result};
