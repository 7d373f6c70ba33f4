use std::fmt::Write;

use crate::LinearProgram;

/// Renders `lp` in CPLEX LP text format for cross-checking with external
/// solvers.
pub fn write_lp(lp: &LinearProgram) -> String {
    let mut out = String::new();
    let names: Vec<String> = lp.variables().iter().map(|v| sanitize(&v.name)).collect();

    out.push_str("Maximize\n obj:");
    let mut any = false;
    for (j, &c) in lp.objective().iter().enumerate() {
        if c != 0.0 {
            write_term(&mut out, c, &names[j], !any);
            any = true;
        }
    }
    if !any {
        out.push_str(" 0");
    }
    out.push_str("\nSubject To\n");
    for (i, c) in lp.constraints().iter().enumerate() {
        let label = if c.name.is_empty() {
            format!("c{i}")
        } else {
            sanitize(&c.name)
        };
        let _ = write!(out, " {label}:");
        if c.terms.is_empty() {
            out.push_str(" 0");
        }
        for (k, &(v, a)) in c.terms.iter().enumerate() {
            write_term(&mut out, a, &names[v.index()], k == 0);
        }
        let _ = writeln!(out, " {} {}", c.relation, c.rhs);
    }
    out.push_str("Bounds\n");
    for (v, name) in lp.variables().iter().zip(&names) {
        if !v.binary {
            let _ = writeln!(out, " {} <= {} <= {}", v.lower, name, v.upper);
        }
    }
    if lp.has_binaries() {
        out.push_str("Binaries\n");
        for (v, name) in lp.variables().iter().zip(&names) {
            if v.binary {
                let _ = writeln!(out, " {name}");
            }
        }
    }
    out.push_str("End\n");
    out
}

fn write_term(out: &mut String, coef: f64, name: &str, first: bool) {
    if coef < 0.0 {
        let _ = write!(out, " - {} {}", -coef, name);
    } else if first {
        let _ = write!(out, " {coef} {name}");
    } else {
        let _ = write!(out, " + {coef} {name}");
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect()
}
