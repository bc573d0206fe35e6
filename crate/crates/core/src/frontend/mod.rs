// SPDX-License-Identifier: Apache-2.0

//! Front end for the mini SSA language.
//!
//! The language has one statement per line, `#` comments, and only the
//! constructs a null-dereference checker needs: null constants, copies,
//! phi merges, calls, `if`/`else` on null comparisons, dereferences and a
//! single `return`. Statement ids are source line numbers and must be unique
//! across the whole program, so a vertex built from a statement can always be
//! named `v_line`.

mod callgraph;
mod parse;
mod print;

pub use callgraph::{CallEdge, CallGraph, SccId};
pub use parse::{parse_program, ParseError};
pub use print::print_program;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Index of a function inside [`ProgramIR::functions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FuncId(pub u32);

impl FuncId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramIR {
    pub functions: Vec<FunctionIR>,
    /// Functions that no other function calls, in declaration order.
    pub roots: Vec<FuncId>,
}

impl ProgramIR {
    pub fn function(&self, id: FuncId) -> &FunctionIR {
        &self.functions[id.index()]
    }

    pub fn lookup(&self, name: &str) -> Option<FuncId> {
        self.functions
            .iter()
            .position(|f| f.name == name)
            .map(|i| FuncId(i as u32))
    }

    pub fn statement_count(&self) -> usize {
        self.functions.iter().map(|f| count_stmts(&f.body)).sum()
    }
}

fn count_stmts(block: &[Stmt]) -> usize {
    block
        .iter()
        .map(|s| match &s.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => 1 + count_stmts(then_block) + else_block.as_deref().map_or(0, count_stmts),
            _ => 1,
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionIR {
    pub name: String,
    /// Line of the `func` keyword; formal parameters are numbered with it.
    pub line: u32,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    /// Variable named by the (single) `return` statement, if any.
    pub ret: Option<String>,
}

impl FunctionIR {
    /// Visit every statement in source order, descending into branches.
    pub fn walk<'a>(&'a self, mut visit: impl FnMut(&'a Stmt)) {
        fn go<'a>(block: &'a [Stmt], visit: &mut impl FnMut(&'a Stmt)) {
            for s in block {
                visit(s);
                if let StmtKind::If {
                    then_block,
                    else_block,
                    ..
                } = &s.kind
                {
                    go(then_block, visit);
                    if let Some(e) = else_block {
                        go(e, visit);
                    }
                }
            }
        }
        go(&self.body, &mut visit);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub line: u32,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    /// `x = null`
    Null { dst: String },
    /// `x = y`
    Copy { dst: String, src: String },
    /// `x = phi(a, b)`
    Phi { dst: String, lhs: String, rhs: String },
    /// `x = call f(args)` or `call f(args)`
    Call {
        dst: Option<String>,
        callee: String,
        args: Vec<String>,
    },
    If {
        cond: Condition,
        then_block: Vec<Stmt>,
        else_block: Option<Vec<Stmt>>,
    },
    Deref { var: String },
    Return { var: String },
}

impl StmtKind {
    pub fn defined_var(&self) -> Option<&str> {
        match self {
            StmtKind::Null { dst } | StmtKind::Copy { dst, .. } | StmtKind::Phi { dst, .. } => {
                Some(dst)
            }
            StmtKind::Call { dst, .. } => dst.as_deref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        }
    }

    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Ge => CmpOp::Lt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Null,
    Var(String),
    Int(i64),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Null => f.write_str("null"),
            Operand::Var(v) => f.write_str(v),
            Operand::Int(i) => write!(f, "{i}"),
        }
    }
}

/// Branch condition `var op rhs`. Only `==`/`!=` against `null` is
/// interpreted; everything else is kept as an opaque token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub var: String,
    pub op: CmpOp,
    pub rhs: Operand,
}

impl Condition {
    pub fn is_null_test(&self) -> bool {
        self.rhs == Operand::Null && matches!(self.op, CmpOp::Eq | CmpOp::Ne)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.var, self.op.symbol(), self.rhs)
    }
}

/// Errors raised while reading or validating a program.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error(transparent)]
    Syntax(#[from] ParseError),
    #[error("line {line}: variable `{var}` in `{func}` is defined more than once")]
    Redefined { func: String, var: String, line: u32 },
    #[error("line {line}: variable `{var}` in `{func}` is used before it is defined")]
    UndefinedVar { func: String, var: String, line: u32 },
    #[error("line {line}: call to unknown function `{callee}`")]
    UnresolvedCallee { callee: String, line: u32 },
    #[error("line {line}: function `{name}` is already defined")]
    DuplicateFunction { name: String, line: u32 },
    #[error("line {line}: `{callee}` takes {expected} argument(s), got {found}")]
    Arity {
        callee: String,
        line: u32,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: result of `{callee}` is used but it has no return statement")]
    NoReturnValue { callee: String, line: u32 },
    #[error("line {line}: function `{func}` has more than one return statement")]
    MultipleReturns { func: String, line: u32 },
    #[error("line {line}: more than one statement starts on this line")]
    DuplicateLine { line: u32 },
    #[error("line {line}: phi must directly follow an if/else merge")]
    MisplacedPhi { line: u32 },
}

/// Validate SSA and call-graph well-formedness and fill in `roots`.
pub(crate) fn validate(functions: Vec<FunctionIR>) -> Result<ProgramIR, FrontendError> {
    let mut by_name: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, f) in functions.iter().enumerate() {
        if by_name.insert(&f.name, i).is_some() {
            return Err(FrontendError::DuplicateFunction {
                name: f.name.clone(),
                line: f.line,
            });
        }
    }

    let mut seen_lines: BTreeMap<u32, ()> = BTreeMap::new();
    let mut called = vec![false; functions.len()];
    for (fi, f) in functions.iter().enumerate() {
        if seen_lines.insert(f.line, ()).is_some() {
            return Err(FrontendError::DuplicateLine { line: f.line });
        }
        let mut defined: BTreeMap<&str, u32> = BTreeMap::new();
        for p in &f.params {
            if defined.insert(p, f.line).is_some() {
                return Err(FrontendError::Redefined {
                    func: f.name.clone(),
                    var: p.clone(),
                    line: f.line,
                });
            }
        }
        let mut returns = 0usize;
        let mut err = None;
        check_block(&f.body, &mut |s| {
            if err.is_some() {
                return;
            }
            if seen_lines.insert(s.line, ()).is_some() {
                err = Some(FrontendError::DuplicateLine { line: s.line });
                return;
            }
            let uses: Vec<&str> = match &s.kind {
                StmtKind::Null { .. } => vec![],
                StmtKind::Copy { src, .. } => vec![src],
                StmtKind::Phi { lhs, rhs, .. } => vec![lhs, rhs],
                StmtKind::Call { args, .. } => args.iter().map(String::as_str).collect(),
                StmtKind::If { cond, .. } => {
                    let mut u = vec![cond.var.as_str()];
                    if let Operand::Var(v) = &cond.rhs {
                        u.push(v);
                    }
                    u
                }
                StmtKind::Deref { var } | StmtKind::Return { var } => vec![var],
            };
            for u in uses {
                if !defined.contains_key(u) {
                    err = Some(FrontendError::UndefinedVar {
                        func: f.name.clone(),
                        var: u.to_string(),
                        line: s.line,
                    });
                    return;
                }
            }
            if let StmtKind::Call { dst, callee, args } = &s.kind {
                match by_name.get(callee.as_str()) {
                    None => {
                        err = Some(FrontendError::UnresolvedCallee {
                            callee: callee.clone(),
                            line: s.line,
                        });
                        return;
                    }
                    Some(&ci) => {
                        if ci != fi {
                            called[ci] = true;
                        }
                        let target = &functions[ci];
                        if target.params.len() != args.len() {
                            err = Some(FrontendError::Arity {
                                callee: callee.clone(),
                                line: s.line,
                                expected: target.params.len(),
                                found: args.len(),
                            });
                            return;
                        }
                        if dst.is_some() && target.ret.is_none() {
                            err = Some(FrontendError::NoReturnValue {
                                callee: callee.clone(),
                                line: s.line,
                            });
                            return;
                        }
                    }
                }
            }
            if let StmtKind::Return { .. } = s.kind {
                returns += 1;
                if returns > 1 {
                    err = Some(FrontendError::MultipleReturns {
                        func: f.name.clone(),
                        line: s.line,
                    });
                    return;
                }
            }
            if let Some(d) = s.kind.defined_var() {
                if defined.insert(d, s.line).is_some() {
                    err = Some(FrontendError::Redefined {
                        func: f.name.clone(),
                        var: d.to_string(),
                        line: s.line,
                    });
                }
            }
        })?;
        if let Some(e) = err {
            return Err(e);
        }
    }

    let roots = called
        .iter()
        .enumerate()
        .filter(|(_, c)| !**c)
        .map(|(i, _)| FuncId(i as u32))
        .collect();
    Ok(ProgramIR { functions, roots })
}

/// Walks a block in order, checking phi placement before handing each
/// statement to `visit`.
fn check_block<'a>(
    block: &'a [Stmt],
    visit: &mut impl FnMut(&'a Stmt),
) -> Result<(), FrontendError> {
    let mut prev_allows_phi = false;
    for s in block {
        if let StmtKind::Phi { .. } = s.kind {
            if !prev_allows_phi {
                return Err(FrontendError::MisplacedPhi { line: s.line });
            }
        }
        visit(s);
        prev_allows_phi = matches!(s.kind, StmtKind::If { .. } | StmtKind::Phi { .. });
        if let StmtKind::If {
            then_block,
            else_block,
            ..
        } = &s.kind
        {
            check_block(then_block, visit)?;
            if let Some(e) = else_block {
                check_block(e, visit)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn redefinition_is_rejected() {
        let err = parse_program("func f() {\n x = null\n x = null\n}\n").unwrap_err();
        assert!(matches!(err, FrontendError::Redefined { line: 3, .. }), "{err}");
    }

    #[test]
    fn parameter_shadowing_is_a_redefinition() {
        let err = parse_program("func f(x) {\n x = null\n}\n").unwrap_err();
        assert!(matches!(err, FrontendError::Redefined { .. }));
    }

    #[test]
    fn unresolved_callee() {
        let err = parse_program("func f() {\n call g()\n}\n").unwrap_err();
        assert_eq!(
            err,
            FrontendError::UnresolvedCallee {
                callee: "g".into(),
                line: 2
            }
        );
    }

    #[test]
    fn duplicate_function() {
        let err = parse_program("func f() {\n}\nfunc f() {\n}\n").unwrap_err();
        assert!(matches!(err, FrontendError::DuplicateFunction { line: 3, .. }));
    }

    #[test]
    fn use_before_def() {
        let err = parse_program("func f() {\n deref x\n x = null\n}\n").unwrap_err();
        assert!(matches!(err, FrontendError::UndefinedVar { line: 2, .. }));
    }

    #[test]
    fn two_returns() {
        let src = "func f(a) {\n if (a == null) {\n return a }\n return a\n}\n";
        let err = parse_program(src).unwrap_err();
        assert!(matches!(err, FrontendError::MultipleReturns { line: 4, .. }));
    }

    #[test]
    fn statements_must_start_on_distinct_lines() {
        let err = parse_program("func f() { x = null deref x }").unwrap_err();
        assert!(matches!(err, FrontendError::DuplicateLine { .. }));
    }

    #[test]
    fn result_of_void_function() {
        let src = "func g() {\n}\nfunc f() {\n x = call g()\n}\n";
        let err = parse_program(src).unwrap_err();
        assert!(matches!(err, FrontendError::NoReturnValue { .. }));
    }

    #[test]
    fn phi_needs_a_join() {
        let src = "func f() {\n a = null\n b = null\n c = phi(a, b)\n}\n";
        assert!(matches!(
            parse_program(src).unwrap_err(),
            FrontendError::MisplacedPhi { line: 4 }
        ));
        let ok = "func f(p) {\n if (p == null) {\n a = null } else {\n b = p }\n c = phi(a, b)\n}\n";
        parse_program(ok).unwrap();
    }

    #[test]
    fn arity_mismatch() {
        let src = "func g(a) {\n}\nfunc f() {\n call g()\n}\n";
        assert!(matches!(
            parse_program(src).unwrap_err(),
            FrontendError::Arity { expected: 1, found: 0, .. }
        ));
    }

    #[test]
    fn roots_exclude_called_functions_but_not_self_recursion() {
        let src = "func f() {\n call f()\n}\nfunc g() {\n call f()\n}\n";
        let p = parse_program(src).unwrap();
        assert_eq!(p.roots, vec![FuncId(1)]);
        let lonely = parse_program("func r() {\n call r()\n}\n").unwrap();
        assert_eq!(lonely.roots, vec![FuncId(0)]);
    }
}
