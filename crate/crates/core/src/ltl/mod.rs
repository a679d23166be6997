//! Linear temporal logic: syntax, lasso semantics and Büchi translation.

mod formula;
mod lasso;
mod nba;
mod parser;
mod tableau;

pub use formula::{to_nnf, Formula};
pub use lasso::{all_lassos, evaluate_lasso, LassoWord, Letter};
pub use nba::{nba_accepts_lasso, Guard, Literal, Nba, Transition};
pub use parser::{parse, parse_task};
pub use tableau::{translate, translate_over};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LtlError {
    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("the next operator is not allowed in a task formula")]
    NextInTask,
}
