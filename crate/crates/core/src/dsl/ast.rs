use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// A straight-line video program: one call per statement, each binding a
/// fresh output variable.
///
/// Equality is structural: `source_text` and statement line numbers are
/// ignored, so a program compares equal to its reparsed canonical print.
#[derive(Debug, Clone, Default)]
pub struct Program {
    pub statements: Vec<Statement>,
    pub source_text: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Statement {
    pub output_var: String,
    pub function_name: String,
    pub args: Vec<Arg>,
    /// 1-based line in the source the statement was parsed from.
    pub line_no: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub name: String,
    pub value: ArgValue,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArgValue {
    VarRef(String),
    Str(String),
    Num(f64),
    Bool(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("program has no statements")]
pub struct EmptyProgramError;

impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.output_var == other.output_var
            && self.function_name == other.function_name
            && self.args == other.args
    }
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.statements == other.statements
    }
}

impl Arg {
    pub fn new(name: impl Into<String>, value: ArgValue) -> Self {
        Self {
            name: name.into(),
            value,
        }
    }
}

impl ArgValue {
    pub fn var(name: impl Into<String>) -> Self {
        ArgValue::VarRef(name.into())
    }

    pub fn text(s: impl Into<String>) -> Self {
        ArgValue::Str(s.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            ArgValue::VarRef(v) => Some(v),
            _ => None,
        }
    }
}

impl Statement {
    pub fn new(
        output_var: impl Into<String>,
        function_name: impl Into<String>,
        args: Vec<Arg>,
        line_no: usize,
    ) -> Self {
        Self {
            output_var: output_var.into(),
            function_name: function_name.into(),
            args,
            line_no,
        }
    }

    pub fn arg(&self, name: &str) -> Option<&ArgValue> {
        self.args.iter().find(|a| a.name == name).map(|a| &a.value)
    }

    /// Variables referenced by this statement's arguments, in argument order.
    pub fn var_refs(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|a| a.value.as_var())
    }
}

impl Program {
    pub fn new(statements: Vec<Statement>) -> Self {
        Self {
            statements,
            source_text: None,
        }
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// The program's result: the output of its last statement.
    pub fn result_var(&self) -> Result<&str, EmptyProgramError> {
        self.statements
            .last()
            .map(|s| s.output_var.as_str())
            .ok_or(EmptyProgramError)
    }

    /// Variables that are referenced but never assigned anywhere in the program.
    pub fn free_inputs(&self) -> BTreeSet<String> {
        let assigned: BTreeSet<&str> = self
            .statements
            .iter()
            .map(|s| s.output_var.as_str())
            .collect();
        self.statements
            .iter()
            .flat_map(|s| s.var_refs())
            .filter(|v| !assigned.contains(v))
            .map(str::to_owned)
            .collect()
    }

    pub fn outputs(&self) -> impl Iterator<Item = &str> {
        self.statements.iter().map(|s| s.output_var.as_str())
    }

    pub fn function_names(&self) -> impl Iterator<Item = &str> {
        self.statements.iter().map(|s| s.function_name.as_str())
    }

    /// Same statements renumbered 1..=n, with no source text; the shape a
    /// program has after `parse(print(p))`.
    pub fn canonicalized(&self) -> Program {
        let statements = self
            .statements
            .iter()
            .enumerate()
            .map(|(i, s)| Statement {
                line_no: i + 1,
                ..s.clone()
            })
            .collect();
        Program::new(statements)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::print(self))
    }
}

/// Names the parser accepts as free program inputs: `VIDEO`, `VIDEO0`, `VIDEO1`, ...
pub fn is_reserved_input(name: &str) -> bool {
    name.strip_prefix("VIDEO")
        .is_some_and(|rest| rest.bytes().all(|b| b.is_ascii_digit()))
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
