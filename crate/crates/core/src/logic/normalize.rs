use super::{DefiniteClause, Literal};

/// Splits `head <- (a ∧ b) ∨ c` into definite clauses.
///
/// `true` is dropped from the conjunction when the other literal remains; a
/// conjunction mentioning `false` never fires and yields no clause, and the
/// disjunct clause is omitted when it is absent or `false`.
pub fn normalize_aux_clause(
    head: Literal,
    conj: (Literal, Literal),
    disj: Option<Literal>,
) -> Vec<DefiniteClause> {
    let mut out = Vec::with_capacity(2);
    let (a, b) = conj;
    if !a.is_false() && !b.is_false() {
        let body = match (a.is_true(), b.is_true()) {
            (true, true) => vec![a],
            (true, false) => vec![b],
            (false, true) => vec![a],
            (false, false) => vec![a, b],
        };
        out.push(DefiniteClause::new(head.clone(), body));
    }
    if let Some(d) = disj.filter(|d| !d.is_false()) {
        out.push(DefiniteClause::new(head, vec![d]));
    }
    out
}
