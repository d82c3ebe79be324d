pub mod error;
pub mod holonomy;
pub mod jet;
pub mod lie;
pub mod nomizu;
pub mod numeric;
pub mod rspace;
pub mod scenario;

pub use error::{Error, Result};
pub use numeric::{Subspace, Tolerances, Verdict};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    struct Overview;
    #[doc = include_str!("../../../book/src/models.md")]
    struct Models;
    #[doc = include_str!("../../../book/src/jets.md")]
    struct Jets;
    #[doc = include_str!("../../../book/src/nomizu.md")]
    struct Nomizu;
    #[doc = include_str!("../../../book/src/holonomy.md")]
    struct Holonomy;
    #[doc = include_str!("../../../book/src/rspace.md")]
    struct RSpace;
    #[doc = include_str!("../../../book/src/scenarios.md")]
    struct Scenarios;
}
