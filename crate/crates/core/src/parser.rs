//! Concrete syntax for programs and stores.
//!
//! ```text
//! program   ::= rule*
//! rule      ::= [ident "@"] heads ("<=>" | "==>") [guard "|"] body "."
//! heads     ::= patterns ["\" patterns]
//! body      ::= "true" | patterns
//! patterns  ::= pattern ("," pattern)*
//! pattern   ::= atom | "{" atom ["|" guard] "}" binders
//! binders   ::= "#" "{" vars "in" term "}"
//! vars      ::= Var ("," Var)* | "(" Var ("," Var)* ")"
//! atom      ::= ident ["(" term ("," term)* ")"]
//! guard     ::= conjunct ("," conjunct)*
//! conjunct  ::= "true" | "forall" "{" guard "}" binders | term rel term
//! rel       ::= "=" | "!=" | "<" | "<=" | ">" | ">=" | "in"
//! term      ::= sum ("++" sum)*
//! sum       ::= product (("+" | "-") product)*
//! product   ::= unary ("*" unary)*
//! unary     ::= "-" unary | primary
//! primary   ::= int | "infty" | "true" | "false" | Var | ident
//!             | ("min" | "max") "(" term "," term ")"
//!             | "reduce" "(" ("min" | "max" | "sum" | "count") "," term "," term ")"
//!             | "(" ")" | "(" term ")" | "(" term "," [term ("," term)*] ")"
//!             | "[" [term ("," term)*] "]" | "{" term ["|" guard] "}" binders
//! store     ::= (atom ("," atom)* ".")*
//! ```
//!
//! Variables start with an uppercase letter or `_`; `%` starts a line comment.
//! With `<=>`, a rule without `\` has only simplified heads; `==>` makes every
//! head propagated. Unnamed rules are named `r<k>` after their position.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, ParseError};
use crate::eval::eval;
use crate::store::Store;
use crate::syntax::{Atom, Comprehension, Pattern, Program, Rule};
use crate::term::{Guard, GuardComp, Name, PrimOp, ReduceFn, Rel, Subst, Term, TermComp};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

const PUNCTS: [&str; 24] = [
    "<=>", "==>", "++", "!=", "<=", ">=", "(", ")", "[", "]", "{", "}", ",", ".", "|", "\\", "@",
    "#", "+", "-", "*", "=", "<", ">",
];

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let (mut line, mut column) = (1usize, 1usize);
    let mut rest = text;
    let advance = |s: &str, line: &mut usize, column: &mut usize| {
        for c in s.chars() {
            if c == '\n' {
                *line += 1;
                *column = 1;
            } else {
                *column += 1;
            }
        }
    };
    while let Some(c) = rest.chars().next() {
        if c.is_whitespace() {
            advance(&rest[..c.len_utf8()], &mut line, &mut column);
            rest = &rest[c.len_utf8()..];
            continue;
        }
        if c == '%' {
            let end = rest.find('\n').unwrap_or(rest.len());
            advance(&rest[..end], &mut line, &mut column);
            rest = &rest[end..];
            continue;
        }
        let (tok, len) = if c.is_ascii_digit() {
            let len = rest
                .find(|c: char| !c.is_ascii_digit())
                .unwrap_or(rest.len());
            let v = rest[..len].parse::<i64>().map_err(|_| ParseError {
                line,
                column,
                message: format!("integer literal {} out of range", &rest[..len]),
            })?;
            (Tok::Int(v), len)
        } else if c.is_alphabetic() || c == '_' {
            let len = rest
                .find(|c: char| !(c.is_alphanumeric() || c == '_'))
                .unwrap_or(rest.len());
            let word = rest[..len].to_owned();
            if c.is_uppercase() || c == '_' {
                (Tok::Var(word), len)
            } else {
                (Tok::Ident(word), len)
            }
        } else if let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            (Tok::Punct(p), p.len())
        } else {
            return Err(ParseError {
                line,
                column,
                message: format!("unexpected character {c:?}"),
            });
        };
        out.push(Token { tok, line, column });
        advance(&rest[..len], &mut line, &mut column);
        rest = &rest[len..];
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) | Tok::Var(s) => format!("`{s}`"),
        Tok::Int(v) => format!("`{v}`"),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::Eof => "end of input".to_owned(),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn error(&self, message: String) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError {
            line: t.line,
            column: t.column,
            message,
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        self.error(format!(
            "expected {wanted}, found {}",
            describe(self.peek())
        ))
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_ident(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(q) if q == w)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> PResult<()> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    fn expect_keyword(&mut self, w: &str) -> PResult<()> {
        if self.is_ident(w) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{w}`")))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("a predicate name")),
        }
    }

    fn program(&mut self) -> PResult<Program> {
        let mut rules = Vec::new();
        while *self.peek() != Tok::Eof {
            let k = rules.len() + 1;
            rules.push(self.rule(k)?);
        }
        Ok(Program::new(rules))
    }

    fn rule(&mut self, k: usize) -> PResult<Rule> {
        let name = match (self.peek().clone(), self.peek_at(1)) {
            (Tok::Ident(n), Tok::Punct("@")) => {
                self.pos += 2;
                n
            }
            _ => format!("r{k}"),
        };
        let first = self.patterns()?;
        let (mut propagated, mut simplified) = if self.eat("\\") {
            (first, self.patterns()?)
        } else {
            (Vec::new(), first)
        };
        if self.eat("==>") {
            propagated.append(&mut simplified);
        } else if !self.eat("<=>") {
            return Err(self.unexpected("`<=>` or `==>`"));
        }
        let start = self.pos;
        let guard = match self.guard() {
            Ok(g) if self.eat("|") => g,
            attempt => {
                let guard_pos = self.pos;
                self.pos = start;
                match self.body_then_dot() {
                    Ok(body) => {
                        return Ok(Rule {
                            name,
                            propagated,
                            simplified,
                            guard: Guard::True,
                            body,
                        })
                    }
                    Err(e) => {
                        // Report whichever reading got further.
                        if attempt.is_ok() && guard_pos > self.pos {
                            self.pos = guard_pos;
                            return Err(self.unexpected("`|`"));
                        }
                        return Err(e);
                    }
                }
            }
        };
        let body = self.body_then_dot()?;
        Ok(Rule {
            name,
            propagated,
            simplified,
            guard,
            body,
        })
    }

    fn body_then_dot(&mut self) -> PResult<Vec<Pattern>> {
        let body = if self.is_ident("true") && matches!(self.peek_at(1), Tok::Punct(".")) {
            self.pos += 1;
            Vec::new()
        } else {
            self.patterns()?
        };
        self.expect(".")?;
        Ok(body)
    }

    fn patterns(&mut self) -> PResult<Vec<Pattern>> {
        let mut out = alloc::vec![self.pattern()?];
        while self.eat(",") {
            out.push(self.pattern()?);
        }
        Ok(out)
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        if self.eat("{") {
            let atom = self.atom()?;
            let guard = if self.eat("|") {
                self.guard()?
            } else {
                Guard::True
            };
            self.expect("}")?;
            let (binders, domain) = self.binders()?;
            Ok(Pattern::Comp(Comprehension::new(
                atom, guard, binders, domain,
            )))
        } else {
            Ok(Pattern::Atom(self.atom()?))
        }
    }

    fn atom(&mut self) -> PResult<Atom> {
        let pred = self.ident()?;
        let mut args = Vec::new();
        if self.eat("(") {
            args.push(self.term()?);
            while self.eat(",") {
                args.push(self.term()?);
            }
            self.expect(")")?;
        }
        Ok(Atom { pred, args })
    }

    fn binders(&mut self) -> PResult<(Vec<Name>, Term)> {
        self.expect("#")?;
        self.expect("{")?;
        let parenthesized = self.eat("(");
        let mut binders = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Var(v) => {
                    self.pos += 1;
                    binders.push(v);
                }
                _ => return Err(self.unexpected("a binder variable")),
            }
            if !self.eat(",") {
                break;
            }
        }
        if parenthesized {
            self.expect(")")?;
        }
        self.expect_keyword("in")?;
        let domain = self.term()?;
        self.expect("}")?;
        Ok((binders, domain))
    }

    fn guard(&mut self) -> PResult<Guard> {
        let mut parts = alloc::vec![self.conjunct()?];
        while self.is_punct(",") {
            let save = self.pos;
            self.pos += 1;
            match self.conjunct() {
                Ok(g) => parts.push(g),
                Err(e) => {
                    self.pos = save;
                    return Err(e);
                }
            }
        }
        Ok(Guard::and(parts))
    }

    fn conjunct(&mut self) -> PResult<Guard> {
        if self.is_ident("forall") && matches!(self.peek_at(1), Tok::Punct("{")) {
            self.pos += 2;
            let body = self.guard()?;
            self.expect("}")?;
            let (binders, domain) = self.binders()?;
            return Ok(Guard::ConjComp(Box::new(GuardComp {
                binders,
                domain,
                body,
            })));
        }
        let lhs = self.term()?;
        let rel = match self.peek() {
            Tok::Punct("=") => Rel::Eq,
            Tok::Punct("!=") => Rel::Ne,
            Tok::Punct("<") => Rel::Lt,
            Tok::Punct("<=") => Rel::Le,
            Tok::Punct(">") => Rel::Gt,
            Tok::Punct(">=") => Rel::Ge,
            Tok::Ident(w) if w == "in" => Rel::In,
            _ if lhs == Term::Bool(true) => return Ok(Guard::True),
            _ => return Err(self.unexpected("a relation")),
        };
        self.pos += 1;
        let rhs = self.term()?;
        Ok(Guard::Atomic(rel, lhs, rhs))
    }

    fn term(&mut self) -> PResult<Term> {
        let mut t = self.sum()?;
        while self.eat("++") {
            t = Term::Union(Box::new(t), Box::new(self.sum()?));
        }
        Ok(t)
    }

    fn sum(&mut self) -> PResult<Term> {
        let mut t = self.product()?;
        loop {
            let op = if self.eat("+") {
                PrimOp::Add
            } else if self.eat("-") {
                PrimOp::Sub
            } else {
                return Ok(t);
            };
            t = Term::Prim(op, alloc::vec![t, self.product()?]);
        }
    }

    fn product(&mut self) -> PResult<Term> {
        let mut t = self.unary()?;
        while self.eat("*") {
            t = Term::Prim(PrimOp::Mul, alloc::vec![t, self.unary()?]);
        }
        Ok(t)
    }

    fn unary(&mut self) -> PResult<Term> {
        if self.eat("-") {
            if let Tok::Int(v) = *self.peek() {
                self.pos += 1;
                return Ok(Term::Int(-v));
            }
            return Ok(Term::Prim(PrimOp::Neg, alloc::vec![self.unary()?]));
        }
        self.primary()
    }

    fn term_list(&mut self, close: &str) -> PResult<Vec<Term>> {
        let mut out = Vec::new();
        if self.eat(close) {
            return Ok(out);
        }
        out.push(self.term()?);
        while self.eat(",") {
            if self.is_punct(close) {
                break;
            }
            out.push(self.term()?);
        }
        self.expect(close)?;
        Ok(out)
    }

    fn primary(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.pos += 1;
                Ok(Term::Int(v))
            }
            Tok::Var(v) => {
                self.pos += 1;
                Ok(Term::Var(v))
            }
            Tok::Ident(w) => {
                self.pos += 1;
                let call = self.is_punct("(");
                match w.as_str() {
                    "infty" => Ok(Term::Infty),
                    "true" => Ok(Term::Bool(true)),
                    "false" => Ok(Term::Bool(false)),
                    "min" | "max" if call => {
                        self.pos += 1;
                        let a = self.term()?;
                        self.expect(",")?;
                        let b = self.term()?;
                        self.expect(")")?;
                        let op = if w == "min" { PrimOp::Min } else { PrimOp::Max };
                        Ok(Term::Prim(op, alloc::vec![a, b]))
                    }
                    "reduce" if call => {
                        self.pos += 1;
                        let fname = self.ident()?;
                        let func = ReduceFn::from_name(&fname).ok_or_else(|| {
                            self.error(format!("unknown reduce function `{fname}`"))
                        })?;
                        self.expect(",")?;
                        let unit = self.term()?;
                        self.expect(",")?;
                        let domain = self.term()?;
                        self.expect(")")?;
                        Ok(Term::Reduce(func, Box::new(unit), Box::new(domain)))
                    }
                    _ => Ok(Term::Sym(w)),
                }
            }
            Tok::Punct("(") => {
                self.pos += 1;
                if self.eat(")") {
                    return Ok(Term::Tuple(Vec::new()));
                }
                let first = self.term()?;
                if self.eat(")") {
                    return Ok(first);
                }
                self.expect(",")?;
                let mut items = alloc::vec![first];
                items.extend(self.term_list(")")?);
                Ok(Term::Tuple(items))
            }
            Tok::Punct("[") => {
                self.pos += 1;
                let items = self.term_list("]")?;
                Ok(if items.iter().all(Term::is_value) {
                    Term::mset(items)
                } else {
                    Term::MSet(items)
                })
            }
            Tok::Punct("{") => {
                self.pos += 1;
                let template = self.term()?;
                let guard = if self.eat("|") {
                    self.guard()?
                } else {
                    Guard::True
                };
                self.expect("}")?;
                let (binders, domain) = self.binders()?;
                Ok(Term::Comp(Box::new(TermComp {
                    template,
                    guard,
                    binders,
                    domain,
                })))
            }
            _ => Err(self.unexpected("a term")),
        }
    }
}

/// Parses a program. Scope errors are reported separately by
/// [`crate::syntax::check_well_formed`].
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    p.program()
}

/// Parses a store: atoms separated by commas, each group ended by a period.
/// Arguments are evaluated, so `p(1 + 2)` stores `p(3)`.
pub fn parse_store(text: &str) -> Result<Store, Error> {
    let atoms = parse_atoms(text)?;
    let env = Subst::new();
    let mut out = Vec::with_capacity(atoms.len());
    for a in atoms {
        let args = a
            .args
            .iter()
            .map(|t| eval(t, &env))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(Atom { pred: a.pred, args });
    }
    Ok(Store::from_atoms(out))
}

/// Parses a list of (possibly non-ground) patterns in store syntax, as used for initial goals.
pub fn parse_atoms(text: &str) -> Result<Vec<Atom>, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let mut out = Vec::new();
    while *p.peek() != Tok::Eof {
        out.push(p.atom()?);
        while p.eat(",") {
            out.push(p.atom()?);
        }
        p.expect(".")?;
    }
    Ok(out)
}

/// Parses a single term, for tests and tools.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let t = p.term()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok(t)
}

/// Parses a single guard, for tests and tools.
pub fn parse_guard(text: &str) -> Result<Guard, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let g = p.guard()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::EvalError;
    use alloc::vec;

    const PIVOT: &str =
        "pivotSwap @ swap(X,Y,P), {data(X,D)|D>=P}#{D in Xs}, {data(Y,D)|D<P}#{D in Ys} \
                         <=> {data(Y,D)}#{D in Xs}, {data(X,D)}#{D in Ys}.";

    #[test]
    fn parses_pivot_swap() {
        let p = parse_program(PIVOT).unwrap();
        let r = &p.rules[0];
        assert_eq!(r.name, "pivotSwap");
        assert!(r.propagated.is_empty());
        assert_eq!(r.simplified.len(), 3);
        assert_eq!(r.body.len(), 2);
        let Pattern::Comp(c) = &r.simplified[1] else {
            panic!()
        };
        assert_eq!(c.binders, vec![String::from("D")]);
        assert_eq!(c.domain, Term::var("Xs"));
        assert_eq!(
            c.guard,
            Guard::Atomic(Rel::Ge, Term::var("D"), Term::var("P"))
        );
    }

    #[test]
    fn arrow_makes_propagation_rule() {
        let p = parse_program("r @ p(X) ==> q(X).").unwrap();
        assert_eq!(p.rules[0].propagated.len(), 1);
        assert!(p.rules[0].simplified.is_empty());
    }

    #[test]
    fn unmatched_delimiter_is_located() {
        let e = parse_program("r @ p(X \\ q(X)").unwrap_err();
        assert_eq!((e.line, e.column), (1, 9));
    }

    #[test]
    fn guard_and_body_are_disambiguated() {
        let p = parse_program("r @ p(X) <=> X > 1 | q(X).\ns @ p(X) <=> q(X).\nt @ p(X) <=> true.")
            .unwrap();
        assert_eq!(
            p.rules[0].guard,
            Guard::Atomic(Rel::Gt, Term::var("X"), Term::Int(1))
        );
        assert_eq!(p.rules[1].guard, Guard::True);
        assert!(p.rules[2].body.is_empty());
    }

    #[test]
    fn store_examples() {
        assert_eq!(
            parse_store("data(a,7), data(a,3), swap(a,b,5).")
                .unwrap()
                .len(),
            3
        );
        assert!(parse_store("").unwrap().is_empty());
        assert_eq!(
            parse_store("data(X,1).").unwrap_err(),
            Error::Eval(EvalError::NonGround("X".into()))
        );
    }

    #[test]
    fn terms_and_reduce() {
        assert_eq!(
            parse_term("reduce(min, infty, Ws)").unwrap(),
            Term::Reduce(
                ReduceFn::Min,
                Box::new(Term::Infty),
                Box::new(Term::var("Ws"))
            )
        );
        assert_eq!(parse_term("(1,)").unwrap(), Term::Tuple(vec![Term::Int(1)]));
        assert_eq!(
            parse_term("[2, 1]").unwrap(),
            Term::mset(vec![Term::Int(1), Term::Int(2)])
        );
        assert_eq!(parse_term("-3").unwrap(), Term::Int(-3));
    }

    #[test]
    fn printed_program_parses_back() {
        let src = "removeNonMin @ src(X), {edge(X,Y,W) | W > Wm}#{(Y, W) in Es} <=> Es != [], \
                   Ws = {W}#{Y, W in Es}, Wm = reduce(min, infty, Ws) | src(X).\n\
                   r @ a(X) \\ {b(Y) | forall{Y > Z}#{Z in [1, 2]}}#{Y in Ys} ==> c(X).";
        // The second rule is syntactically valid even if ill-scoped.
        let p = parse_program(src).unwrap();
        let printed = alloc::format!("{p}");
        assert_eq!(parse_program(&printed).unwrap(), p);
    }
}
