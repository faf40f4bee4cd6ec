pub mod canon;
pub mod mds;
pub mod process;
pub mod rational;
pub mod transport;
pub mod generate;
pub mod rng;
pub mod stats;
pub mod json;
pub mod bench;
pub mod skorohod;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/processes.md")]
    mod processes {}
    #[doc = include_str!("../../../book/src/representation.md")]
    mod representation {}
    #[doc = include_str!("../../../book/src/decoupling.md")]
    mod decoupling {}
    #[doc = include_str!("../../../book/src/transport.md")]
    mod transport {}
    #[doc = include_str!("../../../book/src/bench.md")]
    mod bench {}
    #[doc = include_str!("../../../book/src/embedding.md")]
    mod embedding {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
