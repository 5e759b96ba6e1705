use super::{inventory, Formula, Sort};

/// Renders a formula in the text syntax. Binary connectives are fully
/// parenthesized, so the output parses back to the same tree.
pub fn render(f: &Formula) -> String {
    let mut s = String::new();
    write(f, &mut s);
    s
}

fn write(f: &Formula, s: &mut String) {
    match f {
        Formula::EqInd(a, b) | Formula::EqSet(a, b) => {
            s.push_str(&format!("{a} = {b}"));
        }
        Formula::InSet(a, b) | Formula::InColl(a, b) => {
            s.push_str(&format!("{a} in {b}"));
        }
        Formula::Not(a) => {
            s.push('!');
            if a.is_flat_atom() {
                s.push('(');
                write(a, s);
                s.push(')');
            } else {
                write(a, s);
            }
        }
        Formula::ForallInd(vs, b) | Formula::ForallSet(vs, b) => {
            s.push_str("(forall");
            for v in vs {
                s.push(' ');
                s.push_str(v.name());
            }
            s.push_str(")(");
            write_bare(b, s);
            s.push(')');
        }
        Formula::And(a, b) => binary(a, " & ", b, s),
        Formula::Or(a, b) => binary(a, " | ", b, s),
        Formula::Implies(a, b) => binary(a, " -> ", b, s),
        Formula::Iff(a, b) => binary(a, " <-> ", b, s),
    }
}

fn binary(a: &Formula, op: &str, b: &Formula, s: &mut String) {
    s.push('(');
    write(a, s);
    s.push_str(op);
    write(b, s);
    s.push(')');
}

// Inside quantifier parentheses the outer pair of a binary node is redundant.
fn write_bare(f: &Formula, s: &mut String) {
    let mut inner = String::new();
    write(f, &mut inner);
    let binary = matches!(
        f,
        Formula::And(..) | Formula::Or(..) | Formula::Implies(..) | Formula::Iff(..)
    );
    if binary {
        s.push_str(&inner[1..inner.len() - 1]);
    } else {
        s.push_str(&inner);
    }
}

/// Renders a formula with a header declaring every variable by sort.
pub fn render_document(f: &Formula) -> String {
    let inv = inventory(f);
    let mut out = String::new();
    for (k, sort) in Sort::ALL.into_iter().enumerate() {
        let vars = inv.all(sort);
        if vars.is_empty() {
            continue;
        }
        out.push_str(&format!("sort{k}"));
        for v in vars {
            out.push(' ');
            out.push_str(v.name());
        }
        out.push_str(" ;\n");
    }
    out.push_str("formula: ");
    out.push_str(&render(f));
    out.push('\n');
    out
}
