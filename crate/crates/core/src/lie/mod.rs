//! Symmetric spaces as orthogonal symmetric Lie algebras of real matrices.

mod algebra;
mod catalog;
mod model;

pub use algebra::LieAlgebraPresentation;
pub use catalog::{catalog, CatalogSpec, Param, FAMILIES};
pub use model::{
    Factor, IsotropyCheck, IsotropyMethod, ModelIntegrity, ModelJson, SymmetricSpaceModel, TypeTag,
};
