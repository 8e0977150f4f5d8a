pub mod smt;
pub mod templates;
pub mod logic;
pub mod search;
pub mod fit;
pub mod learn;
pub mod bench;
pub mod harness;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
    #[doc = include_str!("../../../book/src/templates.md")]
    mod templates {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/search.md")]
    mod search {}
    #[doc = include_str!("../../../book/src/loop.md")]
    mod learning_loop {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
}
