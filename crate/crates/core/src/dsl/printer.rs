use super::ast::{ArgValue, Program, Statement};

/// Largest magnitude below which integral numbers print without a fraction.
const EXACT_INT_LIMIT: f64 = 9_007_199_254_740_992.0; // 2^53

/// Canonical text: one statement per line, no spaces around `=` or `,`,
/// single-quoted strings, no trailing newline.
pub fn print(program: &Program) -> String {
    program
        .statements
        .iter()
        .map(print_statement)
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn print_statement(stmt: &Statement) -> String {
    let mut out = String::with_capacity(32 + stmt.args.len() * 16);
    out.push_str(&stmt.output_var);
    out.push('=');
    out.push_str(&stmt.function_name);
    out.push('(');
    for (i, arg) in stmt.args.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&arg.name);
        out.push('=');
        out.push_str(&print_value(&arg.value));
    }
    out.push(')');
    out
}

pub fn print_value(value: &ArgValue) -> String {
    match value {
        ArgValue::VarRef(v) => v.clone(),
        ArgValue::Str(s) => quote(s),
        ArgValue::Num(n) => format_number(*n),
        ArgValue::Bool(b) => b.to_string(),
    }
}

/// Single-quoted literal with `\\`, `\'` and `\n` escaped.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

pub fn format_number(n: f64) -> String {
    if n.fract() == 0.0 && n.abs() < EXACT_INT_LIMIT {
        format!("{}", n as i64)
    } else {
        // Debug formatting is the shortest representation that round-trips.
        format!("{n:?}")
    }
}
