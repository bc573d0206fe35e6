// SPDX-License-Identifier: Apache-2.0

//! Seeded random program generator for differential testing.
//!
//! Programs have at most 12 functions and 60 statements. Calls mostly go
//! to later functions so the call graph is layered, with the occasional
//! back edge to make recursive SCCs. Variables defined inside a branch are
//! only visible after the branch through a phi.

use crate::frontend::{
    parse_program, print_program, CmpOp, Condition, FunctionIR, Operand, ProgramIR, Stmt,
    StmtKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_FUNCTIONS: usize = 12;
pub const MAX_STATEMENTS: usize = 60;

struct Sig {
    params: usize,
    returns: bool,
}

struct Gen {
    rng: ChaCha8Rng,
    sigs: Vec<Sig>,
    line: u32,
    budget: usize,
    fresh: usize,
}

impl Gen {
    fn next_line(&mut self) -> u32 {
        self.line += 1;
        self.line
    }

    fn var(&mut self) -> String {
        self.fresh += 1;
        format!("v{}", self.fresh)
    }

    fn pick(&mut self, scope: &[String]) -> String {
        scope[self.rng.gen_range(0..scope.len())].clone()
    }

    /// Make sure at least one variable is in scope. Charged against the
    /// budget unless `reserved`; fails when nothing is left to charge.
    fn ensure_var(&mut self, scope: &mut Vec<String>, out: &mut Vec<Stmt>, reserved: bool) -> bool {
        if scope.is_empty() {
            if !reserved {
                if self.budget == 0 {
                    return false;
                }
                self.budget -= 1;
            }
            let dst = self.var();
            out.push(Stmt {
                line: self.next_line(),
                kind: StmtKind::Null { dst: dst.clone() },
            });
            scope.push(dst);
        }
        true
    }

    fn null_def(&mut self, scope: &mut Vec<String>, out: &mut Vec<Stmt>) {
        let dst = self.var();
        out.push(Stmt {
            line: self.next_line(),
            kind: StmtKind::Null { dst: dst.clone() },
        });
        scope.push(dst);
    }

    fn block(&mut self, fi: usize, scope: &mut Vec<String>, depth: usize, len: usize) -> Vec<Stmt> {
        let mut out = Vec::new();
        for _ in 0..len {
            if self.budget == 0 {
                break;
            }
            self.budget -= 1;
            let roll = self.rng.gen_range(0..100);
            match roll {
                0..=19 => self.null_def(scope, &mut out),
                20..=34 if !scope.is_empty() => {
                    let src = self.pick(scope);
                    let dst = self.var();
                    out.push(Stmt {
                        line: self.next_line(),
                        kind: StmtKind::Copy {
                            dst: dst.clone(),
                            src,
                        },
                    });
                    scope.push(dst);
                }
                35..=59 => self.call(fi, scope, &mut out),
                60..=74 if depth < 2 => self.branch(fi, scope, depth, &mut out),
                _ if !scope.is_empty() => {
                    let var = self.pick(scope);
                    out.push(Stmt {
                        line: self.next_line(),
                        kind: StmtKind::Deref { var },
                    });
                }
                _ => self.null_def(scope, &mut out),
            }
        }
        out
    }

    fn call(&mut self, fi: usize, scope: &mut Vec<String>, out: &mut Vec<Stmt>) {
        let n = self.sigs.len();
        let callee = if fi + 1 < n && self.rng.gen_bool(0.9) {
            self.rng.gen_range(fi + 1..n)
        } else {
            self.rng.gen_range(0..n)
        };
        if self.sigs[callee].params > 0 && !self.ensure_var(scope, out, false) {
            self.null_def(scope, out);
            return;
        }
        let args = (0..self.sigs[callee].params)
            .map(|_| self.pick(scope))
            .collect();
        let dst = (self.sigs[callee].returns && self.rng.gen_bool(0.8)).then(|| self.var());
        out.push(Stmt {
            line: self.next_line(),
            kind: StmtKind::Call {
                dst: dst.clone(),
                callee: format!("f{callee}"),
                args,
            },
        });
        if let Some(d) = dst {
            scope.push(d);
        }
    }

    fn branch(&mut self, fi: usize, scope: &mut Vec<String>, depth: usize, out: &mut Vec<Stmt>) {
        if !self.ensure_var(scope, out, false) {
            self.null_def(scope, out);
            return;
        }
        let var = self.pick(scope);
        let cond = match self.rng.gen_range(0..10) {
            0..=3 => Condition {
                var,
                op: CmpOp::Eq,
                rhs: Operand::Null,
            },
            4..=8 => Condition {
                var,
                op: CmpOp::Ne,
                rhs: Operand::Null,
            },
            _ => Condition {
                var,
                op: CmpOp::Gt,
                rhs: Operand::Int(1),
            },
        };
        let line = self.next_line();
        let mut then_scope = scope.clone();
        let then_len = self.rng.gen_range(1..=3);
        let then_block = self.block(fi, &mut then_scope, depth + 1, then_len);
        let mut else_scope = scope.clone();
        let else_block = if self.rng.gen_bool(0.5) {
            let len = self.rng.gen_range(1..=3);
            Some(self.block(fi, &mut else_scope, depth + 1, len))
        } else {
            None
        };
        let then_new = then_scope.get(scope.len()..).unwrap_or_default().to_vec();
        let else_new = else_scope.get(scope.len()..).unwrap_or_default().to_vec();
        out.push(Stmt {
            line,
            kind: StmtKind::If {
                cond,
                then_block,
                else_block,
            },
        });
        if !then_new.is_empty() && self.budget > 0 && self.rng.gen_bool(0.6) {
            self.budget -= 1;
            let lhs = then_new[self.rng.gen_range(0..then_new.len())].clone();
            let rhs = if else_new.is_empty() {
                self.pick(scope)
            } else {
                else_new[self.rng.gen_range(0..else_new.len())].clone()
            };
            let dst = self.var();
            out.push(Stmt {
                line: self.next_line(),
                kind: StmtKind::Phi {
                    dst: dst.clone(),
                    lhs,
                    rhs,
                },
            });
            scope.push(dst);
        }
    }
}

fn function(g: &mut Gen, fi: usize, stmts: usize) -> FunctionIR {
    let line = g.next_line();
    let params: Vec<String> = (0..g.sigs[fi].params).map(|i| format!("p{i}")).collect();
    let mut scope = params.clone();
    let mut body = g.block(fi, &mut scope, 0, stmts);
    let mut ret = None;
    if g.sigs[fi].returns {
        g.ensure_var(&mut scope, &mut body, true);
        let var = g.pick(&scope);
        body.push(Stmt {
            line: g.next_line(),
            kind: StmtKind::Return { var: var.clone() },
        });
        ret = Some(var);
    }
    // leave a line for the closing brace
    g.line += 1;
    FunctionIR {
        name: format!("f{fi}"),
        line,
        params,
        body,
        ret,
    }
}

/// Random program for `seed`, already validated.
pub fn generate(seed: u64) -> ProgramIR {
    let src = generate_source(seed);
    parse_program(&src).expect("generated programs are well formed")
}

pub fn generate_source(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=MAX_FUNCTIONS);
    let sigs = (0..n)
        .map(|_| Sig {
            params: rng.gen_range(0..=2),
            returns: rng.gen_bool(0.7),
        })
        .collect();
    let mut g = Gen {
        rng,
        sigs,
        line: 0,
        // each function keeps two statements back for its return
        budget: MAX_STATEMENTS - 2 * n,
        fresh: 0,
    };
    let mut functions = Vec::with_capacity(n);
    for fi in 0..n {
        let share = (g.budget / (n - fi)).max(1);
        let len = g.rng.gen_range(1..=share.min(10));
        functions.push(function(&mut g, fi, len));
    }
    let p = ProgramIR {
        functions,
        roots: Vec::new(),
    };
    print_program(&p)
}
