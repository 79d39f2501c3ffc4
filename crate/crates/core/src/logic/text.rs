//! Rule text format: `head(X,Y) :- a(X,Z), b(Z,Y).` and facts `p(c1,c2).`

use super::{DefiniteClause, GroundAtom, Literal, SymbolicProgram, Var};
use crate::{Error, Result};

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

fn is_constant(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// Splits `name(a,b)` into its name and raw argument strings.
fn split_term(s: &str, line: usize) -> Result<(&str, Vec<&str>)> {
    let s = s.trim();
    match s.find('(') {
        None => {
            if !is_ident(s) {
                return Err(err(line, format!("invalid predicate name `{s}`")));
            }
            Ok((s, Vec::new()))
        }
        Some(open) => {
            if !s.ends_with(')') {
                return Err(err(line, format!("missing `)` in `{s}`")));
            }
            let name = s[..open].trim();
            if !is_ident(name) {
                return Err(err(line, format!("invalid predicate name `{name}`")));
            }
            let inner = &s[open + 1..s.len() - 1];
            let args: Vec<&str> = inner.split(',').map(str::trim).collect();
            if args.iter().any(|a| a.is_empty()) {
                return Err(err(line, format!("empty argument in `{s}`")));
            }
            if args.len() > 2 {
                return Err(err(line, format!("arity {} exceeds 2 in `{s}`", args.len())));
            }
            Ok((name, args))
        }
    }
}

fn parse_atom_at(s: &str, line: usize) -> Result<GroundAtom> {
    let s = s.trim();
    let s = s.strip_suffix('.').unwrap_or(s);
    let (name, args) = split_term(s, line)?;
    for a in &args {
        if !is_constant(a) {
            return Err(err(line, format!("invalid constant `{a}`")));
        }
    }
    Ok(GroundAtom::new(name, &args))
}

/// Parses a ground atom such as `succ(0,1)` (a trailing `.` is accepted).
pub fn parse_atom(s: &str) -> Result<GroundAtom> {
    parse_atom_at(s, 1)
}

fn parse_literal(s: &str, line: usize) -> Result<Literal> {
    let (name, args) = split_term(s, line)?;
    let mut vars = Vec::with_capacity(args.len());
    for a in args {
        let mut chars = a.chars();
        let v = match (chars.next(), chars.next()) {
            (Some(c), None) => Var::from_char(c),
            _ => None,
        };
        vars.push(v.ok_or_else(|| err(line, format!("expected a variable in X,Y,Z,T, got `{a}`")))?);
    }
    Ok(Literal::new(name, &vars))
}

/// Splits a body on top-level commas.
fn split_body(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_clause_at(s: &str, line: usize) -> Result<DefiniteClause> {
    let s = s.trim();
    let s = s
        .strip_suffix('.')
        .ok_or_else(|| err(line, "clause must end with `.`"))?;
    let (head, body) = s
        .split_once(":-")
        .ok_or_else(|| err(line, "expected `:-`"))?;
    let head = parse_literal(head, line)?;
    let body = split_body(body)
        .into_iter()
        .map(|l| parse_literal(l, line))
        .collect::<Result<Vec<_>>>()?;
    if body.is_empty() || body.len() > 2 {
        return Err(err(line, format!("body must have 1 or 2 literals, got {}", body.len())));
    }
    Ok(DefiniteClause::new(head, body))
}

/// Parses one clause line.
pub fn parse_clause(s: &str) -> Result<DefiniteClause> {
    parse_clause_at(s, 1)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        (!l.is_empty() && !l.starts_with('%') && !l.starts_with('#')).then_some((i + 1, l))
    })
}

/// Parses a mixed listing of clauses and facts.
pub fn parse_rules(text: &str) -> Result<(Vec<DefiniteClause>, Vec<GroundAtom>)> {
    let mut clauses = Vec::new();
    let mut facts = Vec::new();
    for (line, l) in content_lines(text) {
        if l.contains(":-") {
            clauses.push(parse_clause_at(l, line)?);
        } else {
            if !l.ends_with('.') {
                return Err(err(line, "fact must end with `.`"));
            }
            facts.push(parse_atom_at(l, line)?);
        }
    }
    Ok((clauses, facts))
}

/// Parses a program; facts are rejected.
pub fn parse_program(text: &str, target: super::PredicateSymbol) -> Result<SymbolicProgram> {
    let mut clauses = Vec::new();
    for (line, l) in content_lines(text) {
        clauses.push(parse_clause_at(l, line)?);
    }
    Ok(SymbolicProgram::new(target, clauses))
}

/// One clause per line, each terminated by a newline.
pub fn program_to_text(program: &SymbolicProgram) -> String {
    let mut out = String::new();
    for c in &program.clauses {
        out.push_str(&c.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::PredicateSymbol;

    #[test]
    fn clause_text_is_exact() {
        let c = parse_clause("target(X,Y) :- succ(X,Z), succ(Z,Y).").unwrap();
        assert_eq!(c.to_string(), "target(X,Y) :- succ(X,Z), succ(Z,Y).");
        let c = parse_clause("  even(X):-zero(X) .").unwrap();
        assert_eq!(c.to_string(), "even(X) :- zero(X).");
        let c = parse_clause("aux1(X,Y) :- true.").unwrap();
        assert_eq!(c.body[0].arity(), 0);
    }

    #[test]
    fn facts_and_atoms() {
        let (clauses, facts) = parse_rules("% comment\nsucc(0,1).\nzero(0).\ntrue.\np(X) :- zero(X).\n").unwrap();
        assert_eq!(clauses.len(), 1);
        assert_eq!(facts.len(), 3);
        assert_eq!(facts[0].to_string(), "succ(0,1)");
        assert_eq!(facts[2].to_string(), "true");
        assert_eq!(parse_atom("edge(a,b)").unwrap(), GroundAtom::new("edge", &["a", "b"]));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_clause("p(X) :- q(W).").is_err());
        assert!(parse_clause("p(X) :- q(X)").is_err());
        assert!(parse_clause("p(X) :- a(X), b(X), c(X).").is_err());
        assert!(parse_clause("P(X) :- q(X).").is_err());
        assert!(parse_atom("p(a,b,c)").is_err());
        assert!(parse_atom("p(A)").is_err());
        let e = parse_rules("p(a).\nq(X) :- r(X)\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn program_round_trips_through_text() {
        let text = "target(X,Y) :- aux1(X,Z), aux1(Z,Y).\naux1(X,Y) :- mother(X,Y).\naux1(X,Y) :- father(X,Y).\n";
        let p = parse_program(text, PredicateSymbol::target("target", 2)).unwrap();
        assert_eq!(program_to_text(&p), text);
    }
}
