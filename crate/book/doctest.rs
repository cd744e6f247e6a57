// mdbook cannot run snippets against a workspace crate, so each chapter is
// pulled in as the doc comment of an empty module and `cargo test --doc`
// compiles and runs its code blocks. One module per chapter keeps failures
// attributable.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/model.md")]
pub mod model {}
#[doc = include_str!("src/correlations.md")]
pub mod correlations {}
#[doc = include_str!("src/spectrum.md")]
pub mod spectrum {}
#[doc = include_str!("src/fano.md")]
pub mod fano {}
#[doc = include_str!("src/scenarios.md")]
pub mod scenarios {}
