use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use super::ast::{is_reserved_input, Arg, ArgValue, Program, Statement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParseErrorKind {
    UnexpectedToken,
    UnterminatedString,
    MissingEquals,
    MissingParen,
    EmptyProgram,
    DuplicateAssignment,
    UseBeforeDef,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line_no}, column {column}: {message}")]
pub struct ParseError {
    pub line_no: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl ParseError {
    fn new(line_no: usize, column: usize, kind: ParseErrorKind, message: impl Into<String>) -> Self {
        Self {
            line_no,
            column,
            kind,
            message: message.into(),
        }
    }
}

/// Parses program text, collecting every syntax and structural error.
///
/// Blank lines and lines whose first non-blank character is `#` are skipped.
/// A line with a syntax error is reported and skipped; the structural checks
/// (single assignment, use-before-def) then run over the lines that parsed.
pub fn parse(source: &str) -> Result<Program, Vec<ParseError>> {
    let mut errors = Vec::new();
    let mut parsed: Vec<(Statement, Vec<usize>)> = Vec::new();

    for (idx, raw) in source.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match LineParser::new(line, idx + 1).statement() {
            Ok(stmt) => parsed.push(stmt),
            Err(e) => errors.push(e),
        }
    }

    if parsed.is_empty() && errors.is_empty() {
        errors.push(ParseError::new(
            1,
            1,
            ParseErrorKind::EmptyProgram,
            "program has no statements",
        ));
        return Err(errors);
    }

    let mut first_def: HashMap<&str, usize> = HashMap::new();
    for (stmt, _) in &parsed {
        if let Some(prev) = first_def.get(stmt.output_var.as_str()) {
            errors.push(ParseError::new(
                stmt.line_no,
                1,
                ParseErrorKind::DuplicateAssignment,
                format!(
                    "variable '{}' already assigned on line {}",
                    stmt.output_var, prev
                ),
            ));
        } else {
            first_def.insert(&stmt.output_var, stmt.line_no);
        }
    }

    let mut defined: BTreeSet<&str> = BTreeSet::new();
    for (stmt, cols) in &parsed {
        for (arg, col) in stmt.args.iter().zip(cols) {
            if let ArgValue::VarRef(name) = &arg.value {
                if !defined.contains(name.as_str()) && !is_reserved_input(name) {
                    errors.push(ParseError::new(
                        stmt.line_no,
                        *col,
                        ParseErrorKind::UseBeforeDef,
                        format!("variable '{name}' is used before it is defined"),
                    ));
                }
            }
        }
        defined.insert(&stmt.output_var);
    }

    if errors.is_empty() {
        Ok(Program {
            statements: parsed.into_iter().map(|(s, _)| s).collect(),
            source_text: Some(source.to_owned()),
        })
    } else {
        Err(errors)
    }
}

struct LineParser {
    chars: Vec<char>,
    pos: usize,
    line_no: usize,
}

impl LineParser {
    fn new(line: &str, line_no: usize) -> Self {
        Self {
            chars: line.chars().collect(),
            pos: 0,
            line_no,
        }
    }

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn err(&self, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        ParseError::new(self.line_no, self.column(), kind, message)
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(c) => self.err(
                ParseErrorKind::UnexpectedToken,
                format!("expected {expected}, found '{c}'"),
            ),
            None => self.err(
                ParseErrorKind::UnexpectedToken,
                format!("expected {expected}, found end of line"),
            ),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return Err(self.unexpected(what)),
        }
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            self.pos += 1;
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn expect_equals(&mut self, after: &str) -> Result<(), ParseError> {
        if self.peek() == Some('=') {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(
                ParseErrorKind::MissingEquals,
                format!("expected '=' after {after}"),
            ))
        }
    }

    fn statement(mut self) -> Result<(Statement, Vec<usize>), ParseError> {
        self.skip_ws();
        let output_var = self.ident("an output variable name")?;
        self.skip_ws();
        self.expect_equals("output variable")?;
        self.skip_ws();
        let function_name = self.ident("a function name")?;
        self.skip_ws();
        if self.peek() != Some('(') {
            return Err(self.err(
                ParseErrorKind::MissingParen,
                format!("expected '(' after function name '{function_name}'"),
            ));
        }
        self.pos += 1;
        self.skip_ws();

        let mut args: Vec<Arg> = Vec::new();
        let mut cols = Vec::new();
        if self.peek() == Some(')') {
            self.pos += 1;
        } else {
            loop {
                self.skip_ws();
                let name_col = self.column();
                let name = self.ident("an argument name")?;
                if args.iter().any(|a| a.name == name) {
                    return Err(ParseError::new(
                        self.line_no,
                        name_col,
                        ParseErrorKind::DuplicateAssignment,
                        format!("argument '{name}' given more than once"),
                    ));
                }
                self.skip_ws();
                self.expect_equals("argument name")?;
                self.skip_ws();
                cols.push(self.column());
                let value = self.value()?;
                args.push(Arg { name, value });
                self.skip_ws();
                match self.peek() {
                    Some(',') => self.pos += 1,
                    Some(')') => {
                        self.pos += 1;
                        break;
                    }
                    None => {
                        return Err(self.err(
                            ParseErrorKind::MissingParen,
                            "expected ')' before end of line",
                        ))
                    }
                    Some(_) => return Err(self.unexpected("',' or ')'")),
                }
            }
        }
        self.skip_ws();
        if self.peek().is_some() {
            return Err(self.unexpected("end of line"));
        }
        Ok((
            Statement {
                output_var,
                function_name,
                args,
                line_no: self.line_no,
            },
            cols,
        ))
    }

    fn value(&mut self) -> Result<ArgValue, ParseError> {
        match self.peek() {
            Some(q @ ('\'' | '"')) => self.string(q),
            Some(c) if c.is_ascii_digit() || c == '-' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let id = self.ident("a value")?;
                Ok(match id.as_str() {
                    "true" => ArgValue::Bool(true),
                    "false" => ArgValue::Bool(false),
                    _ => ArgValue::VarRef(id),
                })
            }
            _ => Err(self.unexpected("a value")),
        }
    }

    fn string(&mut self, quote: char) -> Result<ArgValue, ParseError> {
        let open_col = self.column();
        self.pos += 1;
        let mut out = String::new();
        loop {
            match self.peek() {
                None => {
                    return Err(ParseError::new(
                        self.line_no,
                        open_col,
                        ParseErrorKind::UnterminatedString,
                        "string literal is not terminated on this line",
                    ))
                }
                Some('\\') => {
                    self.pos += 1;
                    let escaped = match self.peek() {
                        Some('\'') => '\'',
                        Some('"') => '"',
                        Some('\\') => '\\',
                        Some('n') => '\n',
                        None => {
                            return Err(ParseError::new(
                                self.line_no,
                                open_col,
                                ParseErrorKind::UnterminatedString,
                                "string literal is not terminated on this line",
                            ))
                        }
                        Some(c) => {
                            return Err(self.err(
                                ParseErrorKind::UnexpectedToken,
                                format!("unknown escape sequence '\\{c}'"),
                            ))
                        }
                    };
                    out.push(escaped);
                    self.pos += 1;
                }
                Some(c) if c == quote => {
                    self.pos += 1;
                    return Ok(ArgValue::Str(out));
                }
                Some(c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
    }

    fn number(&mut self) -> Result<ArgValue, ParseError> {
        let start = self.pos;
        let start_col = self.column();
        if self.peek() == Some('-') {
            self.pos += 1;
        }
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.peek().is_some_and(|c| c.is_ascii_digit()) {
                p.pos += 1;
            }
            p.pos > s
        };
        if !digits(self) {
            return Err(self.unexpected("a digit"));
        }
        if self.peek() == Some('.') {
            self.pos += 1;
            if !digits(self) {
                return Err(self.unexpected("a digit after '.'"));
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            if !digits(self) {
                return Err(self.unexpected("an exponent"));
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(ArgValue::Num(v)),
            _ => Err(ParseError::new(
                self.line_no,
                start_col,
                ParseErrorKind::UnexpectedToken,
                format!("number '{text}' is out of range"),
            )),
        }
    }
}
