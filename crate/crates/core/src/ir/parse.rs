//! Reader for the Prolog-style module syntax.
//!
//! ```text
//! :- module(bitops, [xor/3]).
//! :- use_module(other).
//! head :- goal, goal.
//! ```
//!
//! Terms are variables, integers, atoms (plain or quoted), compound terms and
//! list notation. The only infix operator is `=` between two body terms. `_`
//! is anonymous: every occurrence gets a distinct name.

use super::module::Module;
use super::term::{is_primitive, sym, Atom, Clause, Literal, PredSig, Sym, Term, CONS, NIL};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Var(String),
    Name(String),
    Int(i64),
    Punct(&'static str),
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { chars: text.chars().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Syntax { line: self.line, col: self.col, msg: msg.into() }
    }

    fn skip_layout(&mut self) -> Result<()> {
        loop {
            match self.chars.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                Some('/') => {
                    let mut ahead = self.chars.clone();
                    ahead.next();
                    if ahead.peek() != Some(&'*') {
                        return Ok(());
                    }
                    self.bump();
                    self.bump();
                    let mut prev = ' ';
                    loop {
                        match self.bump() {
                            Some('/') if prev == '*' => break,
                            Some(c) => prev = c,
                            None => return Err(self.err("unterminated block comment")),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn tokens(mut self) -> Result<Vec<Token>> {
        let mut out = Vec::new();
        loop {
            self.skip_layout()?;
            let (line, col) = (self.line, self.col);
            let Some(&c) = self.chars.peek() else {
                out.push(Token { tok: Tok::End, line, col });
                return Ok(out);
            };
            let tok = if c.is_ascii_uppercase() || c == '_' {
                Tok::Var(self.word())
            } else if c.is_ascii_lowercase() {
                Tok::Name(self.word())
            } else if c.is_ascii_digit() {
                Tok::Int(self.int(false)?)
            } else if c == '\'' {
                Tok::Name(self.quoted()?)
            } else {
                self.bump();
                match c {
                    ':' if self.chars.peek() == Some(&'-') => {
                        self.bump();
                        Tok::Punct(":-")
                    }
                    '-' if self.chars.peek().is_some_and(char::is_ascii_digit) => {
                        Tok::Int(self.int(true)?)
                    }
                    '(' => Tok::Punct("("),
                    ')' => Tok::Punct(")"),
                    '[' => Tok::Punct("["),
                    ']' => Tok::Punct("]"),
                    '|' => Tok::Punct("|"),
                    ',' => Tok::Punct(","),
                    '.' => Tok::Punct("."),
                    '=' => Tok::Punct("="),
                    '/' => Tok::Punct("/"),
                    other => {
                        return Err(Error::Syntax {
                            line,
                            col,
                            msg: format!("unexpected character `{other}`"),
                        })
                    }
                }
            };
            out.push(Token { tok, line, col });
        }
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn int(&mut self, negative: bool) -> Result<i64> {
        let mut s = String::new();
        if negative {
            s.push('-');
        }
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_digit() {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s.parse().map_err(|_| self.err(format!("integer out of range: {s}")))
    }

    fn quoted(&mut self) -> Result<String> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                Some('\\') => match self.bump() {
                    Some(c) => s.push(c),
                    None => return Err(self.err("unterminated quoted atom")),
                },
                Some('\'') => return Ok(s),
                Some(c) => s.push(c),
                None => return Err(self.err("unterminated quoted atom")),
            }
        }
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    anon: usize,
}

enum Item {
    Module { name: Sym, exports: Vec<PredSig>, line: usize, col: usize },
    Import(Sym),
    Clause(Clause),
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        Ok(Parser { toks: Lexer::new(text).tokens()?, pos: 0, anon: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, msg: impl Into<String>) -> Error {
        let t = &self.toks[self.pos];
        Error::Syntax { line: t.line, col: t.col, msg: msg.into() }
    }

    fn expect(&mut self, p: &'static str) -> Result<()> {
        if *self.peek() == Tok::Punct(p) {
            self.next();
            Ok(())
        } else {
            Err(self.err_here(format!("expected `{p}`, found {}", describe(self.peek()))))
        }
    }

    fn eat(&mut self, p: &'static str) -> bool {
        if *self.peek() == Tok::Punct(p) {
            self.next();
            true
        } else {
            false
        }
    }

    fn at_end(&self) -> bool {
        *self.peek() == Tok::End
    }

    fn item(&mut self) -> Result<Item> {
        if *self.peek() == Tok::Punct(":-") {
            let start = self.next();
            let item = self.directive(start.line, start.col)?;
            self.expect(".")?;
            return Ok(item);
        }
        let head = match self.term()? {
            Term::Const(name) => Atom { pred: name, args: vec![] },
            Term::Compound(name, args) if &*name != CONS => Atom { pred: name, args },
            other => return Err(self.err_here(format!("clause head must be an atom, found `{other}`"))),
        };
        let mut body = Vec::new();
        if self.eat(":-") {
            loop {
                body.push(self.goal()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(".")?;
        Ok(Item::Clause(Clause::new(head, body)))
    }

    fn directive(&mut self, line: usize, col: usize) -> Result<Item> {
        let name = match self.next().tok {
            Tok::Name(n) => n,
            other => return Err(self.err_here(format!("expected directive, found {}", describe(&other)))),
        };
        self.expect("(")?;
        let item = match name.as_str() {
            "module" => {
                let mod_name = self.name()?;
                self.expect(",")?;
                self.expect("[")?;
                let mut exports = Vec::new();
                if !self.eat("]") {
                    loop {
                        let pred = self.name()?;
                        self.expect("/")?;
                        let arity = match self.next().tok {
                            Tok::Int(a) if a >= 0 => a as usize,
                            other => {
                                return Err(self.err_here(format!("expected arity, found {}", describe(&other))))
                            }
                        };
                        exports.push(PredSig { name: sym(&pred), arity });
                        if !self.eat(",") {
                            break;
                        }
                    }
                    self.expect("]")?;
                }
                Item::Module { name: sym(&mod_name), exports, line, col }
            }
            "use_module" => Item::Import(sym(&self.name()?)),
            other => return Err(Error::Syntax { line, col, msg: format!("unsupported directive `{other}`") }),
        };
        self.expect(")")?;
        Ok(item)
    }

    fn name(&mut self) -> Result<String> {
        match self.next().tok {
            Tok::Name(n) => Ok(n),
            other => Err(self.err_here(format!("expected a name, found {}", describe(&other)))),
        }
    }

    fn goal(&mut self) -> Result<Literal> {
        let lhs = self.term()?;
        if self.eat("=") {
            let rhs = self.term()?;
            return Ok(Literal::unify(lhs, rhs));
        }
        let (name, args) = match lhs {
            Term::Const(n) => (n, vec![]),
            Term::Compound(n, args) if &*n != CONS => (n, args),
            other => return Err(self.err_here(format!("`{other}` is not a goal"))),
        };
        if is_primitive(&name, args.len()) {
            Ok(Literal::Prim { op: name, args })
        } else {
            Ok(Literal::Call(Atom { pred: name, args }))
        }
    }

    fn term(&mut self) -> Result<Term> {
        let t = self.next();
        match t.tok {
            Tok::Var(v) if v == "_" => {
                self.anon += 1;
                Ok(Term::Var(sym(&format!("_G{}", self.anon))))
            }
            Tok::Var(v) => Ok(Term::Var(sym(&v))),
            Tok::Int(i) => Ok(Term::Int(i)),
            Tok::Name(n) => {
                if self.eat("(") {
                    let mut args = vec![self.term()?];
                    while self.eat(",") {
                        args.push(self.term()?);
                    }
                    self.expect(")")?;
                    Ok(Term::Compound(sym(&n), args))
                } else {
                    Ok(Term::Const(sym(&n)))
                }
            }
            Tok::Punct("[") => self.list(),
            Tok::Punct("(") => {
                let inner = self.term()?;
                self.expect(")")?;
                Ok(inner)
            }
            other => Err(Error::Syntax { line: t.line, col: t.col, msg: format!("expected a term, found {}", describe(&other)) }),
        }
    }

    fn list(&mut self) -> Result<Term> {
        if self.eat("]") {
            return Ok(Term::Const(sym(NIL)));
        }
        let mut items = vec![self.term()?];
        while self.eat(",") {
            items.push(self.term()?);
        }
        let tail = if self.eat("|") { self.term()? } else { Term::Const(sym(NIL)) };
        self.expect("]")?;
        Ok(items
            .into_iter()
            .rev()
            .fold(tail, |acc, item| Term::Compound(sym(CONS), vec![item, acc])))
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Var(v) => format!("variable `{v}`"),
        Tok::Name(n) => format!("`{n}`"),
        Tok::Int(i) => format!("`{i}`"),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::End => "end of input".into(),
    }
}

/// Parses one module source. Clauses are returned as written (not normalized).
pub fn parse_module(text: &str) -> Result<Module> {
    let mut p = Parser::new(text)?;
    let mut module: Option<Module> = None;
    let mut imports = Vec::new();
    let mut clauses = Vec::new();
    while !p.at_end() {
        match p.item()? {
            Item::Module { name, exports, line, col } => {
                if module.is_some() {
                    return Err(Error::DuplicateModuleDecl { line, col });
                }
                let mut m = Module::new(&name);
                m.exports = exports.into_iter().collect();
                module = Some(m);
            }
            Item::Import(name) => imports.push(name),
            Item::Clause(c) => clauses.push(c),
        }
    }
    let mut m = module.ok_or(Error::MissingModuleDecl)?;
    m.imports = imports.into_iter().collect();
    m.clauses = clauses;
    Ok(m)
}

/// Parses a single clause such as `xor(1,1,0).`; the final period is optional.
pub fn parse_clause(text: &str) -> Result<Clause> {
    let trimmed = text.trim();
    let owned;
    let text = if trimmed.ends_with('.') {
        trimmed
    } else {
        owned = format!("{trimmed}.");
        &owned
    };
    let mut p = Parser::new(text)?;
    let item = p.item()?;
    if !p.at_end() {
        return Err(p.err_here("trailing input after clause"));
    }
    match item {
        Item::Clause(c) => Ok(c),
        _ => Err(Error::Syntax { line: 1, col: 1, msg: "expected a clause, found a directive".into() }),
    }
}
