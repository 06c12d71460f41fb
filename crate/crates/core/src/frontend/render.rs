//! LaTeX and plain-text rendering of identities and proof traces.

use crate::assembler::QBinomialIdentity;
use crate::expr::{AffineExpr, VarTable};
use crate::qalg::{BracketFraction, QBinomial, SquareBracket, Subscript, SumCoefficient};
use crate::trace::{Orientation, ProofStep, ResidualFactor, RuleKind, Side};

fn base(step: u32) -> String {
    if step == 1 {
        "q".to_string()
    } else {
        format!("q^{{{step}}}")
    }
}

fn affine(e: &AffineExpr, vars: &VarTable) -> String {
    e.display(vars).to_string()
}

pub fn binomial_latex(b: &QBinomial, vars: &VarTable) -> String {
    format!("\\binom{{{}}}{{{}}}_{{{}}}", affine(&b.top, vars), affine(&b.bottom, vars), base(b.step))
}

pub fn residual_latex(r: &ResidualFactor, vars: &VarTable) -> String {
    let e = if r.step == 1 {
        affine(&r.expr, vars)
    } else if r.expr.terms().next().is_none() {
        (r.step as i64 * r.expr.constant_term()).to_string()
    } else {
        format!("{}({})", r.step, affine(&r.expr, vars))
    };
    let inv = if r.orientation == Orientation::Denominator { "^{-1}" } else { "" };
    if e == "1" {
        return format!("\\left(1-q\\right){inv}");
    }
    format!("\\left(1-q^{{{e}}}\\right){inv}")
}

pub fn coeff_latex(c: &SumCoefficient, vars: &VarTable) -> Vec<String> {
    let mut out = Vec::new();
    if !c.sign.is_even() {
        out.push(format!("(-1)^{{{}}}", affine(c.sign.expr(), vars)));
    }
    if !c.q_exp.is_zero() {
        out.push(format!("q^{{{}}}", c.q_exp.latex(vars)));
    }
    out
}

fn join_factors(xs: Vec<String>) -> String {
    if xs.is_empty() {
        "1".to_string()
    } else {
        xs.join(" ")
    }
}

fn bound_latex(id: &QBinomialIdentity) -> String {
    let terms: Vec<String> = id
        .upper_bound
        .iter()
        .map(|b| {
            if b.divisor == 1 {
                affine(&b.expr, &id.vars)
            } else {
                format!("\\left\\lfloor \\frac{{{}}}{{{}}} \\right\\rfloor", affine(&b.expr, &id.vars), b.divisor)
            }
        })
        .collect();
    match terms.len() {
        0 => "\\infty".to_string(),
        1 => terms[0].clone(),
        _ => format!("\\min({})", terms.join(", ")),
    }
}

/// `\sum_{n=0}^{\min(...)} coeff binomials = residuals binomials`, with
/// residual factors written first on each side.
pub fn identity_latex(id: &QBinomialIdentity) -> String {
    let v = &id.vars;
    let mut lhs: Vec<String> = id.lhs_residuals.iter().map(|r| residual_latex(r, v)).collect();
    lhs.extend(coeff_latex(&id.coeff, v));
    lhs.extend(id.lhs_binomials.iter().map(|b| binomial_latex(b, v)));
    let mut rhs: Vec<String> = id.rhs_residuals.iter().map(|r| residual_latex(r, v)).collect();
    rhs.extend(id.rhs_binomials.iter().map(|b| binomial_latex(b, v)));
    format!(
        "\\sum_{{{}=0}}^{{{}}} {} = {}",
        v.name(v.summation()),
        bound_latex(id),
        join_factors(lhs),
        join_factors(rhs)
    )
}

pub fn identity_text(id: &QBinomialIdentity) -> String {
    id.display()
}

fn bracket_latex(b: &SquareBracket, vars: &VarTable) -> String {
    let mut s = format!("[{}", affine(&b.arg, vars));
    if b.step != 1 {
        s.push_str(&format!(";{}", b.step));
    }
    s.push(']');
    if let Subscript::Finite(sub) = &b.sub {
        s.push_str(&format!("_{{{}}}", affine(sub, vars)));
    }
    s
}

pub fn fraction_latex(f: &BracketFraction, vars: &VarTable) -> String {
    let list = |bs: &[SquareBracket]| join_factors(bs.iter().map(|b| bracket_latex(b, vars)).collect());
    if f.den().is_empty() {
        list(f.num())
    } else {
        format!("\\frac{{{}}}{{{}}}", list(f.num()), list(f.den()))
    }
}

fn rule_name(step: &ProofStep) -> String {
    let side = match step.side {
        Side::Lhs => "sum side",
        Side::Rhs => "product side",
    };
    match step.rule {
        RuleKind::MoveToProductSide => step.rule.to_string(),
        _ => format!("{}, {side}", step.rule),
    }
}

fn step_latex(step: &ProofStep, vars: &VarTable) -> String {
    let mut produced = vec![fraction_latex(&step.after, vars)];
    if let Some(d) = &step.coeff_delta {
        produced.splice(0..0, coeff_latex(d, vars));
    }
    if let Some((b, o)) = &step.binomial {
        let inv = if *o == Orientation::Denominator { "^{-1}" } else { "" };
        produced.push(format!("{}{inv}", binomial_latex(b, vars)));
    }
    produced.extend(step.residuals.iter().map(|r| residual_latex(r, vars)));
    let relation = if step.rule == RuleKind::MoveToProductSide { "\\mapsto" } else { "=" };
    let mut line = format!(
        "{} &{relation} {} && \\text{{{}}}",
        fraction_latex(&step.before, vars),
        produced.join(" "),
        rule_name(step)
    );
    if let Some(e) = &step.inequality {
        line.push_str(&format!(", \\; {} \\geq 1", affine(e, vars)));
    }
    line
}

/// One aligned implication line per trace step.
pub fn trace_latex(id: &QBinomialIdentity) -> String {
    let lines: Vec<String> =
        id.trace.steps.iter().map(|s| format!("\\Rightarrow\\; {}", step_latex(s, &id.vars))).collect();
    format!("\\begin{{aligned}}\n{}\n\\end{{aligned}}", lines.join(" \\\\\n"))
}

pub fn trace_text(id: &QBinomialIdentity) -> Vec<String> {
    id.trace.steps.iter().map(|s| s.describe(&id.vars)).collect()
}
