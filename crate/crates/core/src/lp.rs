//! Minimal writer for the LP text format read by common MIP solvers.

use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(i64, String)>,
    pub sense: Sense,
    pub rhs: i64,
}

/// A minimization model with integer coefficients.
#[derive(Debug, Clone, Default)]
pub struct LpModel {
    pub comment: Vec<String>,
    pub objective: Vec<(i64, String)>,
    pub objective_constant: i64,
    pub rows: Vec<Row>,
    /// Non-negative general integers.
    pub generals: Vec<String>,
    pub binaries: Vec<String>,
}

const TERMS_PER_LINE: usize = 8;

fn write_terms(out: &mut String, terms: &[(i64, String)], constant: Option<i64>) {
    let mut first = true;
    let mut written = 0;
    for (coef, var) in terms {
        if *coef == 0 {
            continue;
        }
        if written > 0 && written % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let (sign, mag) = if *coef < 0 { ("-", -coef) } else { ("+", *coef) };
        if first {
            if sign == "-" {
                out.push_str("- ");
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        if mag == 1 {
            out.push_str(var);
        } else {
            let _ = write!(out, "{mag} {var}");
        }
        first = false;
        written += 1;
    }
    if let Some(c) = constant {
        if c != 0 || first {
            if first {
                let _ = write!(out, "{c}");
            } else if c < 0 {
                let _ = write!(out, " - {}", -c);
            } else {
                let _ = write!(out, " + {c}");
            }
        }
    } else if first {
        out.push('0');
    }
}

impl LpModel {
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn to_lp_string(&self) -> String {
        let mut out = String::new();
        for line in &self.comment {
            let _ = writeln!(out, "\\ {line}");
        }
        out.push_str("Minimize\n obj: ");
        write_terms(&mut out, &self.objective, Some(self.objective_constant));
        out.push_str("\nSubject To\n");
        for row in &self.rows {
            let _ = write!(out, " {}: ", row.name);
            write_terms(&mut out, &row.terms, None);
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", row.rhs);
        }
        if !self.generals.is_empty() {
            out.push_str("Bounds\n");
            for v in &self.generals {
                let _ = writeln!(out, " {v} >= 0");
            }
            out.push_str("General\n");
            for v in &self.generals {
                let _ = writeln!(out, " {v}");
            }
        }
        if !self.binaries.is_empty() {
            out.push_str("Binary\n");
            for v in &self.binaries {
                let _ = writeln!(out, " {v}");
            }
        }
        out.push_str("End\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_signs_and_constants() {
        let m = LpModel {
            comment: vec!["toy".into()],
            objective: vec![(1, "a".into()), (-3, "b".into())],
            objective_constant: 7,
            rows: vec![Row {
                name: "r1".into(),
                terms: vec![(-1, "a".into()), (2, "b".into())],
                sense: Sense::Ge,
                rhs: 4,
            }],
            generals: vec!["a".into()],
            binaries: vec!["b".into()],
        };
        let s = m.to_lp_string();
        assert!(s.contains(" obj: a - 3 b + 7\n"));
        assert!(s.contains(" r1: - a + 2 b >= 4\n"));
        assert!(s.contains("General\n a\n"));
        assert!(s.contains("Binary\n b\n"));
        assert!(s.ends_with("End\n"));
    }

    #[test]
    fn constant_only_objective() {
        let m = LpModel {
            objective_constant: 12,
            ..Default::default()
        };
        assert!(m.to_lp_string().contains(" obj: 12\n"));
    }
}
