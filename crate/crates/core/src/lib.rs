pub mod classify;
pub mod constructions;
pub mod counting;
pub mod covers;
pub mod error;
pub mod inequalities;
pub mod partition;
pub mod search;
pub mod universe;
pub mod verify;

pub use error::{Error, Result};
pub use partition::{apply_permutation, common_blocks, Block, PartialPartition, Params, Permutation, UniformPartition};
pub use universe::{enumerate_universe, IdSet, PartitionUniverse};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/universes.md")]
    mod universes {}
    #[doc = include_str!("../../../book/src/counting.md")]
    mod counting {}
    #[doc = include_str!("../../../book/src/constructions.md")]
    mod constructions {}
    #[doc = include_str!("../../../book/src/covers.md")]
    mod covers {}
    #[doc = include_str!("../../../book/src/search.md")]
    mod search {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
