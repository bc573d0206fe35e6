// SPDX-License-Identifier: Apache-2.0

use super::{validate, CmpOp, Condition, FrontendError, FunctionIR, Operand, ProgramIR, Stmt, StmtKind};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: expected {expected}, found {found}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Func,
    Null,
    Phi,
    Call,
    If,
    Else,
    Deref,
    Return,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Assign,
    Cmp(CmpOp),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(i) => write!(f, "integer `{i}`"),
            Tok::Func => f.write_str("`func`"),
            Tok::Null => f.write_str("`null`"),
            Tok::Phi => f.write_str("`phi`"),
            Tok::Call => f.write_str("`call`"),
            Tok::If => f.write_str("`if`"),
            Tok::Else => f.write_str("`else`"),
            Tok::Deref => f.write_str("`deref`"),
            Tok::Return => f.write_str("`return`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Assign => f.write_str("`=`"),
            Tok::Cmp(op) => write!(f, "`{}`", op.symbol()),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    for (li, text) in src.lines().enumerate() {
        let line = li as u32 + 1;
        let chars: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i as u32 + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let (tok, len) = match c {
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '{' => (Tok::LBrace, 1),
                '}' => (Tok::RBrace, 1),
                ',' => (Tok::Comma, 1),
                '=' if two == "==" => (Tok::Cmp(CmpOp::Eq), 2),
                '=' => (Tok::Assign, 1),
                '!' if two == "!=" => (Tok::Cmp(CmpOp::Ne), 2),
                '<' if two == "<=" => (Tok::Cmp(CmpOp::Le), 2),
                '<' => (Tok::Cmp(CmpOp::Lt), 1),
                '>' if two == ">=" => (Tok::Cmp(CmpOp::Ge), 2),
                '>' => (Tok::Cmp(CmpOp::Gt), 1),
                c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) => {
                    let start = i;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    let s: String = chars[start..i].iter().collect();
                    let v = s.parse::<i64>().map_err(|_| ParseError {
                        line,
                        col,
                        expected: "integer literal".into(),
                        found: format!("`{s}`"),
                    })?;
                    out.push(Spanned { tok: Tok::Int(v), line, col });
                    continue;
                }
                c if c.is_alphabetic() || c == '_' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    let word: String = chars[start..i].iter().collect();
                    let tok = match word.as_str() {
                        "func" => Tok::Func,
                        "null" => Tok::Null,
                        "phi" => Tok::Phi,
                        "call" => Tok::Call,
                        "if" => Tok::If,
                        "else" => Tok::Else,
                        "deref" => Tok::Deref,
                        "return" => Tok::Return,
                        _ => Tok::Ident(word),
                    };
                    out.push(Spanned { tok, line, col });
                    continue;
                }
                other => {
                    return Err(ParseError {
                        line,
                        col,
                        expected: "a token".into(),
                        found: format!("character `{other}`"),
                    })
                }
            };
            out.push(Spanned { tok, line, col });
            i += len;
        }
    }
    let last = src.lines().count() as u32;
    out.push(Spanned {
        tok: Tok::Eof,
        line: last.max(1),
        col: 1,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        let t = self.peek();
        ParseError {
            line: t.line,
            col: t.col,
            expected: expected.to_string(),
            found: t.tok.to_string(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Spanned, ParseError> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            Err(self.error(&tok.to_string()))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn name_list(&mut self) -> Result<Vec<String>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut names = Vec::new();
        if self.peek().tok != Tok::RParen {
            names.push(self.ident()?);
            while self.peek().tok == Tok::Comma {
                self.bump();
                names.push(self.ident()?);
            }
        }
        self.expect(Tok::RParen)?;
        Ok(names)
    }

    fn function(&mut self) -> Result<FunctionIR, ParseError> {
        let head = self.expect(Tok::Func)?;
        let name = self.ident()?;
        let params = self.name_list()?;
        self.expect(Tok::LBrace)?;
        let body = self.block_body()?;
        let mut ret = None;
        visit_returns(&body, &mut |v| {
            if ret.is_none() {
                ret = Some(v.to_string());
            }
        });
        Ok(FunctionIR {
            name,
            line: head.line,
            params,
            body,
            ret,
        })
    }

    /// Statements up to and including the closing brace.
    fn block_body(&mut self) -> Result<Vec<Stmt>, ParseError> {
        let mut body = Vec::new();
        loop {
            match self.peek().tok {
                Tok::RBrace => {
                    self.bump();
                    return Ok(body);
                }
                Tok::Eof => return Err(self.error("`}`")),
                _ => body.push(self.statement()?),
            }
        }
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        let start = self.peek().clone();
        let line = start.line;
        let kind = match start.tok {
            Tok::Ident(dst) => {
                self.bump();
                self.expect(Tok::Assign)?;
                match self.peek().tok.clone() {
                    Tok::Null => {
                        self.bump();
                        StmtKind::Null { dst }
                    }
                    Tok::Ident(src) => {
                        self.bump();
                        StmtKind::Copy { dst, src }
                    }
                    Tok::Phi => {
                        self.bump();
                        let args = self.name_list()?;
                        if args.len() != 2 {
                            return Err(ParseError {
                                line,
                                col: start.col,
                                expected: "exactly two phi operands".into(),
                                found: format!("{} operand(s)", args.len()),
                            });
                        }
                        let mut it = args.into_iter();
                        StmtKind::Phi {
                            dst,
                            lhs: it.next().unwrap(),
                            rhs: it.next().unwrap(),
                        }
                    }
                    Tok::Call => {
                        self.bump();
                        let callee = self.ident()?;
                        let args = self.name_list()?;
                        StmtKind::Call {
                            dst: Some(dst),
                            callee,
                            args,
                        }
                    }
                    _ => return Err(self.error("`null`, identifier, `phi` or `call`")),
                }
            }
            Tok::Call => {
                self.bump();
                let callee = self.ident()?;
                let args = self.name_list()?;
                StmtKind::Call {
                    dst: None,
                    callee,
                    args,
                }
            }
            Tok::If => {
                self.bump();
                self.expect(Tok::LParen)?;
                let var = self.ident()?;
                let op = match self.peek().tok {
                    Tok::Cmp(op) => {
                        self.bump();
                        op
                    }
                    _ => return Err(self.error("comparison operator")),
                };
                let rhs = match self.peek().tok.clone() {
                    Tok::Null => Operand::Null,
                    Tok::Ident(v) => Operand::Var(v),
                    Tok::Int(i) => Operand::Int(i),
                    _ => return Err(self.error("`null`, identifier or integer")),
                };
                self.bump();
                if rhs == Operand::Null && !matches!(op, CmpOp::Eq | CmpOp::Ne) {
                    return Err(ParseError {
                        line,
                        col: start.col,
                        expected: "`==` or `!=` before `null`".into(),
                        found: format!("`{}`", op.symbol()),
                    });
                }
                self.expect(Tok::RParen)?;
                self.expect(Tok::LBrace)?;
                let then_block = self.block_body()?;
                let else_block = if self.peek().tok == Tok::Else {
                    self.bump();
                    self.expect(Tok::LBrace)?;
                    Some(self.block_body()?)
                } else {
                    None
                };
                StmtKind::If {
                    cond: Condition { var, op, rhs },
                    then_block,
                    else_block,
                }
            }
            Tok::Deref => {
                self.bump();
                StmtKind::Deref { var: self.ident()? }
            }
            Tok::Return => {
                self.bump();
                StmtKind::Return { var: self.ident()? }
            }
            _ => return Err(self.error("statement")),
        };
        Ok(Stmt { line, kind })
    }
}

fn visit_returns(block: &[Stmt], f: &mut impl FnMut(&str)) {
    for s in block {
        match &s.kind {
            StmtKind::Return { var } => f(var),
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                visit_returns(then_block, f);
                if let Some(e) = else_block {
                    visit_returns(e, f);
                }
            }
            _ => {}
        }
    }
}

/// Parse and validate a whole program.
pub fn parse_program(src: &str) -> Result<ProgramIR, FrontendError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let mut functions = Vec::new();
    while p.peek().tok != Tok::Eof {
        if p.peek().tok != Tok::Func {
            return Err(p.error("`func`").into());
        }
        functions.push(p.function()?);
    }
    validate(functions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input() {
        let p = parse_program("").unwrap();
        assert!(p.functions.is_empty());
        assert!(p.roots.is_empty());
        let only_comments = parse_program("# nothing here\n\n   # still nothing\n").unwrap();
        assert!(only_comments.functions.is_empty());
    }

    #[test]
    fn statements_take_their_source_line() {
        let src = "# header\nfunc main(x) {\n  y = x\n\n  if (y != null) {\n    deref y }\n  return y\n}\n";
        let p = parse_program(src).unwrap();
        let f = &p.functions[0];
        assert_eq!(f.line, 2);
        let lines: Vec<u32> = {
            let mut v = vec![];
            f.walk(|s| v.push(s.line));
            v
        };
        assert_eq!(lines, vec![3, 5, 6, 7]);
        assert_eq!(f.ret.as_deref(), Some("y"));
    }

    #[test]
    fn syntax_error_reports_position_and_expectation() {
        let err = parse_program("func f() {\n  x = \n}\n").unwrap_err();
        match err {
            FrontendError::Syntax(e) => {
                assert_eq!((e.line, e.col), (3, 1));
                assert!(e.expected.contains("null"), "{e}");
                assert_eq!(e.found, "`}`");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unterminated_function() {
        let err = parse_program("func f() {\n x = null\n").unwrap_err();
        assert!(matches!(err, FrontendError::Syntax(ParseError { ref expected, .. }) if expected == "`}`"));
    }

    #[test]
    fn opaque_conditions_parse() {
        let src = "func f(x) {\n if (x > 1) {\n deref x }\n if (x <= -3) {\n deref x } else {\n return x }\n}\n";
        let p = parse_program(src).unwrap();
        let mut conds = vec![];
        p.functions[0].walk(|s| {
            if let StmtKind::If { cond, .. } = &s.kind {
                conds.push(cond.to_string());
            }
        });
        assert_eq!(conds, vec!["x > 1", "x <= -3"]);
    }

    #[test]
    fn ordering_comparison_against_null_is_rejected() {
        assert!(parse_program("func f(x) {\n if (x < null) {\n }\n}\n").is_err());
    }

    #[test]
    fn two_function_fixture() {
        let src = include_str!("../../corpus/id_call.vf");
        let p = parse_program(src).unwrap();
        assert_eq!(p.functions.len(), 2);
        let cg = super::super::CallGraph::build(&p);
        assert_eq!(cg.edges().len(), 1);
    }
}
