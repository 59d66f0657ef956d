//! Naive validity check used to cross-examine [`super::is_valid`] in tests.
//!
//! Shares no code with the main validator: every variable reference is
//! resolved by rescanning earlier statements, and nothing is cached.

use std::collections::BTreeMap;

use crate::dsl::{ArgValue, Program};
use crate::registry::{Registry, SemType};

#[derive(Clone, Copy, PartialEq)]
enum Resolved {
    Known(SemType),
    FromBadCall,
    Unbound,
}

fn resolve(program: &Program, before: usize, var: &str, registry: &Registry, inputs: &BTreeMap<String, SemType>) -> Resolved {
    let mut j = before;
    while j > 0 {
        j -= 1;
        let s = &program.statements[j];
        if s.output_var == var {
            return match registry.lookup(&s.function_name) {
                Some(sig) => Resolved::Known(sig.returns),
                None => Resolved::FromBadCall,
            };
        }
    }
    match inputs.get(var) {
        Some(t) => Resolved::Known(*t),
        None => Resolved::Unbound,
    }
}

fn compatible(expected: SemType, actual: SemType) -> bool {
    matches!(expected, SemType::Any) || matches!(actual, SemType::Any) || expected == actual
}

/// Intended for programs of at most a handful of statements.
pub fn brute_force_oracle(program: &Program, registry: &Registry, inputs: &BTreeMap<String, SemType>) -> bool {
    for i in 0..program.statements.len() {
        let stmt = &program.statements[i];
        for arg in &stmt.args {
            if let ArgValue::VarRef(v) = &arg.value {
                if resolve(program, i, v, registry, inputs) == Resolved::Unbound {
                    return false;
                }
            }
        }
        let Some(sig) = registry.lookup(&stmt.function_name) else {
            return false;
        };
        for p in &sig.params {
            let given = stmt.args.iter().filter(|a| a.name == p.name).count();
            if p.required && given == 0 {
                return false;
            }
        }
        for arg in &stmt.args {
            let Some(p) = sig.params.iter().find(|p| p.name == arg.name) else {
                return false;
            };
            let actual = match &arg.value {
                ArgValue::VarRef(v) => match resolve(program, i, v, registry, inputs) {
                    Resolved::Known(t) => t,
                    Resolved::FromBadCall => return false,
                    Resolved::Unbound => return false,
                },
                ArgValue::Str(_) => SemType::Text,
                ArgValue::Num(_) => SemType::Number,
                ArgValue::Bool(_) => SemType::Bool,
            };
            if !compatible(p.ty, actual) {
                return false;
            }
        }
    }
    true
}
