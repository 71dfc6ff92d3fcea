use super::lexer::{Tok, Token};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    None,
    Name(String),
    List(Vec<Expr>),
    Unary(&'static str, Box<Expr>),
    Binary(&'static str, Box<Expr>, Box<Expr>),
    /// Chained comparison `a < b <= c`.
    Compare(Box<Expr>, Vec<(&'static str, Expr)>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    IfElse {
        cond: Box<Expr>,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
    Call(String, Vec<Expr>),
    Attr(String, String),
    Index(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Assign(String, Expr),
    AugAssign(String, &'static str, Expr),
    Expr(Expr),
    Pass,
    Import(Vec<String>),
    While(Expr, Vec<Stmt>),
    If(Expr, Vec<Stmt>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseError {
    Syntax(String),
    /// Statically detected use of something outside the allowed surface.
    Forbidden(String),
}

/// Builtins that would reach outside the interpreter.
const FORBIDDEN_NAMES: &[&str] = &[
    "open", "exec", "eval", "compile", "input", "globals", "locals", "vars", "getattr", "setattr",
    "delattr", "breakpoint", "exit", "quit", "help", "memoryview",
];

pub const ALLOWED_MODULES: &[&str] = &["math"];

pub fn parse(tokens: &[Token]) -> Result<Vec<Stmt>, ParseError> {
    let mut p = Parser { tokens, pos: 0 };
    let mut out = Vec::new();
    while !p.at(&Tok::Eof) {
        if p.eat(&Tok::Newline) {
            continue;
        }
        out.extend(p.statement_line()?);
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn line(&self) -> usize {
        self.tokens[self.pos].line
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == kw)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error<T>(&self, msg: impl AsRef<str>) -> Result<T, ParseError> {
        Err(ParseError::Syntax(format!(
            "SyntaxError: {} (line {})",
            msg.as_ref(),
            self.line()
        )))
    }

    fn expect_op(&mut self, op: &str) -> Result<(), ParseError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            self.error(format!("expected '{op}', found {:?}", self.peek()))
        }
    }

    fn name(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Name(n) => {
                self.pos += 1;
                check_name(&n)?;
                Ok(n)
            }
            other => self.error(format!("expected a name, found {other:?}")),
        }
    }

    fn statement_line(&mut self) -> Result<Vec<Stmt>, ParseError> {
        let stmts = if self.at_kw("while") || self.at_kw("if") {
            let is_while = self.eat_kw("while");
            if !is_while {
                self.pos += 1;
            }
            let cond = self.expr()?;
            self.expect_op(":")?;
            if self.at(&Tok::Newline) {
                return self.error("block bodies must stay on the same line");
            }
            let body = self.simple_list()?;
            if self.at_kw("else") || self.at_kw("elif") {
                return self.error("else blocks are not supported");
            }
            vec![if is_while {
                Stmt::While(cond, body)
            } else {
                Stmt::If(cond, body)
            }]
        } else {
            self.simple_list()?
        };
        if !self.eat(&Tok::Newline) && !self.at(&Tok::Eof) {
            return self.error(format!("unexpected {:?}", self.peek()));
        }
        Ok(stmts)
    }

    fn simple_list(&mut self) -> Result<Vec<Stmt>, ParseError> {
        let mut out = vec![self.simple()?];
        while self.eat_op(";") {
            if self.at(&Tok::Newline) || self.at(&Tok::Eof) {
                break;
            }
            out.push(self.simple()?);
        }
        Ok(out)
    }

    fn simple(&mut self) -> Result<Stmt, ParseError> {
        if self.eat_kw("pass") {
            return Ok(Stmt::Pass);
        }
        if self.at_kw("import") || self.at_kw("from") {
            return self.import();
        }
        for kw in ["def", "class", "for", "with", "try", "lambda", "del", "global", "return"] {
            if self.at_kw(kw) {
                return self.error(format!("'{kw}' is not supported"));
            }
        }
        if let Tok::Name(n) = self.peek().clone() {
            if let Tok::Op(op) = self.peek_at(1) {
                let op = *op;
                if op == "=" || (op.len() >= 2 && op.ends_with('=') && !matches!(op, "==" | "!=" | "<=" | ">=")) {
                    check_name(&n)?;
                    self.pos += 2;
                    let value = self.expr()?;
                    return Ok(if op == "=" {
                        Stmt::Assign(n, value)
                    } else {
                        Stmt::AugAssign(n, aug_base(op), value)
                    });
                }
            }
        }
        Ok(Stmt::Expr(self.expr()?))
    }

    fn import(&mut self) -> Result<Stmt, ParseError> {
        let from = self.eat_kw("from");
        if !from {
            self.pos += 1;
        }
        let mut modules = vec![self.dotted()?];
        if from {
            if !self.eat_kw("import") {
                return self.error("expected 'import'");
            }
            // `from math import sqrt` binds names the interpreter does not track
            let module = &modules[0];
            if ALLOWED_MODULES.contains(&module.as_str()) {
                return self.error("from-imports are not supported; use `import math`");
            }
        } else {
            while self.eat_op(",") {
                modules.push(self.dotted()?);
            }
        }
        for m in &modules {
            let root = m.split('.').next().unwrap_or_default();
            if !ALLOWED_MODULES.contains(&root) {
                return Err(ParseError::Forbidden(format!(
                    "ImportError: module '{m}' is not allowed"
                )));
            }
        }
        while !self.at(&Tok::Newline) && !self.at(&Tok::Eof) && !self.at_op(";") {
            self.pos += 1;
        }
        Ok(Stmt::Import(modules))
    }

    fn dotted(&mut self) -> Result<String, ParseError> {
        let mut parts = vec![match self.peek().clone() {
            Tok::Name(n) => {
                self.pos += 1;
                n
            }
            other => return self.error(format!("expected module name, found {other:?}")),
        }];
        while self.eat_op(".") {
            match self.peek().clone() {
                Tok::Name(n) => {
                    self.pos += 1;
                    parts.push(n);
                }
                other => return self.error(format!("expected module name, found {other:?}")),
            }
        }
        Ok(parts.join("."))
    }

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        let value = self.or_expr()?;
        if self.eat_kw("if") {
            let cond = self.or_expr()?;
            if !self.eat_kw("else") {
                return self.error("conditional expression needs 'else'");
            }
            let otherwise = self.expr()?;
            return Ok(Expr::IfElse {
                cond: Box::new(cond),
                then: Box::new(value),
                otherwise: Box::new(otherwise),
            });
        }
        Ok(value)
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.eat_kw("or") {
            lhs = Expr::Or(Box::new(lhs), Box::new(self.and_expr()?));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.not_expr()?;
        while self.eat_kw("and") {
            lhs = Expr::And(Box::new(lhs), Box::new(self.not_expr()?));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.eat_kw("not") {
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let first = self.arith()?;
        let mut rest = Vec::new();
        loop {
            let op = match self.peek() {
                Tok::Op(op @ ("==" | "!=" | "<" | "<=" | ">" | ">=")) => *op,
                Tok::Name(n) if n == "in" => "in",
                Tok::Name(n) if n == "not" && matches!(self.peek_at(1), Tok::Name(m) if m == "in") => {
                    self.pos += 1;
                    "not in"
                }
                _ => break,
            };
            self.pos += 1;
            rest.push((op, self.arith()?));
        }
        Ok(if rest.is_empty() {
            first
        } else {
            Expr::Compare(Box::new(first), rest)
        })
    }

    fn arith(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op(op @ ("+" | "-")) => *op,
                _ => break,
            };
            self.pos += 1;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Op(op @ ("*" | "/" | "//" | "%")) => *op,
                _ => break,
            };
            self.pos += 1;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Op(op @ ("-" | "+")) => {
                let op = *op;
                self.pos += 1;
                Ok(Expr::Unary(op, Box::new(self.factor()?)))
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.postfix()?;
        if self.eat_op("**") {
            // right-associative, binds tighter than unary minus on the left only
            let exp = self.factor()?;
            return Ok(Expr::Binary("**", Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        loop {
            if self.at_op("(") {
                let name = match &e {
                    Expr::Name(n) => n.clone(),
                    Expr::Attr(m, f) => format!("{m}.{f}"),
                    _ => return self.error("only named functions can be called"),
                };
                self.pos += 1;
                let mut args = Vec::new();
                if !self.at_op(")") {
                    loop {
                        if matches!(self.peek(), Tok::Name(_)) && matches!(self.peek_at(1), Tok::Op("=")) {
                            return self.error("keyword arguments are not supported");
                        }
                        args.push(self.expr()?);
                        if !self.eat_op(",") || self.at_op(")") {
                            break;
                        }
                    }
                }
                self.expect_op(")")?;
                e = Expr::Call(name, args);
            } else if self.eat_op("[") {
                let idx = self.expr()?;
                self.expect_op("]")?;
                e = Expr::Index(Box::new(e), Box::new(idx));
            } else if self.eat_op(".") {
                let Expr::Name(module) = &e else {
                    return self.error("attribute access is only supported on modules");
                };
                let field = self.name()?;
                e = Expr::Attr(module.clone(), field);
            } else {
                return Ok(e);
            }
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let tok = self.peek().clone();
        self.pos += 1;
        Ok(match tok {
            Tok::Int(v) => Expr::Int(v),
            Tok::Float(v) => Expr::Float(v),
            Tok::Str(mut s) => {
                // adjacent literals concatenate
                while let Tok::Str(next) = self.peek().clone() {
                    self.pos += 1;
                    s.push_str(&next);
                }
                Expr::Str(s)
            }
            Tok::Name(n) => match n.as_str() {
                "True" => Expr::Bool(true),
                "False" => Expr::Bool(false),
                "None" => Expr::None,
                _ => {
                    check_name(&n)?;
                    Expr::Name(n)
                }
            },
            Tok::Op("(") => {
                let e = self.expr()?;
                if self.at_op(",") {
                    return self.error("tuples are not supported");
                }
                self.expect_op(")")?;
                e
            }
            Tok::Op("[") => {
                let mut items = Vec::new();
                if !self.at_op("]") {
                    loop {
                        items.push(self.expr()?);
                        if !self.eat_op(",") || self.at_op("]") {
                            break;
                        }
                    }
                }
                self.expect_op("]")?;
                Expr::List(items)
            }
            other => {
                self.pos -= 1;
                return self.error(format!("unexpected {other:?}"));
            }
        })
    }
}

fn check_name(n: &str) -> Result<(), ParseError> {
    if n.starts_with("__") || FORBIDDEN_NAMES.contains(&n) {
        return Err(ParseError::Forbidden(format!(
            "PermissionError: use of '{n}' is not allowed"
        )));
    }
    Ok(())
}

fn aug_base(op: &'static str) -> &'static str {
    match op {
        "+=" => "+",
        "-=" => "-",
        "*=" => "*",
        "/=" => "/",
        "//=" => "//",
        "%=" => "%",
        "**=" => "**",
        _ => unreachable!("not an augmented assignment: {op}"),
    }
}
