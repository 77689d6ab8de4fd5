pub mod blowup;
pub mod bump;
pub mod cone;
pub mod corpus;
pub mod fourier;
pub mod frame;
pub mod measure;
pub mod multi_index;
pub mod operator;
pub mod poly;
pub mod rational;
pub mod singularity;
pub mod symbol;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/symbols.md")]
    mod symbols {}
    #[doc = include_str!("../../../book/src/cones.md")]
    mod cones {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/blowup.md")]
    mod blowup {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
