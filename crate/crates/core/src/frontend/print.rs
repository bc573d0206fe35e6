// SPDX-License-Identifier: Apache-2.0

use super::{FunctionIR, ProgramIR, Stmt, StmtKind};

/// Canonical printer. Every statement is placed back on its original line
/// (closing braces share the line of the last statement in a block), so
/// re-parsing the output yields the same ids.
pub fn print_program(p: &ProgramIR) -> String {
    let mut w = LineWriter::default();
    for f in &p.functions {
        print_function(&mut w, f);
    }
    w.finish()
}

#[derive(Default)]
struct LineWriter {
    out: String,
    line: u32,
    line_empty: bool,
}

impl LineWriter {
    fn start(&mut self, line: u32, depth: usize) {
        if self.line == 0 {
            self.line = 1;
            self.line_empty = true;
        }
        if line <= self.line && !self.line_empty {
            // Lines are strictly increasing in a valid program; fall back to
            // appending on the current line.
            self.out.push(' ');
            return;
        }
        while self.line < line {
            self.out.push('\n');
            self.line += 1;
        }
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.line_empty = false;
    }

    fn text(&mut self, s: &str) {
        self.out.push_str(s);
        self.line_empty = false;
    }

    fn finish(mut self) -> String {
        if !self.out.is_empty() {
            self.out.push('\n');
        }
        self.out
    }
}

fn print_function(w: &mut LineWriter, f: &FunctionIR) {
    w.start(f.line, 0);
    w.text(&format!("func {}({}) {{", f.name, f.params.join(", ")));
    print_block(w, &f.body, 1);
    w.text(" }");
}

fn print_block(w: &mut LineWriter, block: &[Stmt], depth: usize) {
    for s in block {
        w.start(s.line, depth);
        match &s.kind {
            StmtKind::Null { dst } => w.text(&format!("{dst} = null")),
            StmtKind::Copy { dst, src } => w.text(&format!("{dst} = {src}")),
            StmtKind::Phi { dst, lhs, rhs } => w.text(&format!("{dst} = phi({lhs}, {rhs})")),
            StmtKind::Call { dst, callee, args } => {
                if let Some(d) = dst {
                    w.text(&format!("{d} = "));
                }
                w.text(&format!("call {callee}({})", args.join(", ")));
            }
            StmtKind::Deref { var } => w.text(&format!("deref {var}")),
            StmtKind::Return { var } => w.text(&format!("return {var}")),
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                w.text(&format!("if ({cond}) {{"));
                print_block(w, then_block, depth + 1);
                w.text(" }");
                if let Some(e) = else_block {
                    w.text(" else {");
                    print_block(w, e, depth + 1);
                    w.text(" }");
                }
            }
        }
    }
}
