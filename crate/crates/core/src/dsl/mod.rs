//! The video-program language: a line-oriented, straight-line dataflow DSL.
//!
//! ```text
//! # comments start with '#'
//! ANS0=GROUNDING(video=VIDEO,query='man enters room')
//! ANS1=TRIMAFTER(video=VIDEO,interval=ANS0)
//! FINAL=VQA(video=ANS1,question='what does the man do')
//! ```
//!
//! Each statement calls one function with named arguments and binds its
//! result to a fresh variable. Argument values are variable references,
//! quoted strings, numbers, or `true`/`false`. The last statement's output
//! is the program result.

mod ast;
mod parser;
mod printer;

pub use ast::{
    is_identifier, is_reserved_input, Arg, ArgValue, EmptyProgramError, Program, Statement,
};
pub use parser::{parse, ParseError, ParseErrorKind};
pub use printer::{format_number, print, print_statement, print_value, quote};
