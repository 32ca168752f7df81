pub mod bath;
pub mod decoherence;
pub mod error;
pub mod green;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod moments;
pub mod phase_space;
pub mod quad;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/bath.md")]
    mod bath {}
    #[doc = include_str!("../../../book/src/green.md")]
    mod green {}
    #[doc = include_str!("../../../book/src/moments.md")]
    mod moments {}
    #[doc = include_str!("../../../book/src/phase_space.md")]
    mod phase_space {}
    #[doc = include_str!("../../../book/src/localization.md")]
    mod localization {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
