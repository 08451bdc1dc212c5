pub mod frontier;
pub mod grid;
mod pgm;
pub mod mapping;
pub mod planner;
pub mod policies;
pub mod runner;
pub mod topology;
pub mod world;

/// Guide chapters, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/getting-started.md")]
    mod getting_started {}
    #[doc = include_str!("../../../book/src/worlds.md")]
    mod worlds {}
    #[doc = include_str!("../../../book/src/exploration.md")]
    mod exploration {}
    #[doc = include_str!("../../../book/src/topology.md")]
    mod topology {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
