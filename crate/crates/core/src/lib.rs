//! Equilibria, heteroclinic connections, Conley index pairs and Morse
//! decompositions for asymptotically autonomous ODEs `ẋ = f(t, x)` on ℝⁿ.

pub mod compactification;
pub mod conley;
pub mod connections;
pub mod dynamics;
pub mod fields;
pub mod morse;
pub mod par;
