//! Binary programs, assignments, and the linear OPB text format.
//!
//! Variables are 1-based everywhere in this module: `x1..xn` in OPB text map
//! to indices `1..=n`. Constraints are stored normalized: `<=` rows are
//! negated into `>=` rows and terms are sorted by variable index with
//! duplicates merged, so two programs that describe the same formulation
//! compare equal.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("assignment has length {got}, program has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("variable index {index} outside 1..={num_vars}")]
    VariableOutOfRange { index: usize, num_vars: usize },
    #[error("constraint has no terms after merging duplicates")]
    EmptyConstraint,
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: {source}")]
    Model {
        line: usize,
        #[source]
        source: ModelError,
    },
}

impl ParseError {
    fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    /// True when `a` is strictly preferred over `b`.
    pub fn improves<T: PartialOrd>(self, a: T, b: T) -> bool {
        match self {
            Sense::Maximize => a > b,
            Sense::Minimize => a < b,
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Maximize => "max",
            Sense::Minimize => "min",
        })
    }
}

/// Relation of a constraint row. `Le` is accepted by constructors and the
/// parser but never stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    Ge,
    Eq,
    Le,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Ge => ">=",
            Relation::Eq => "=",
            Relation::Le => "<=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearConstraint {
    terms: Vec<(i64, usize)>,
    relation: Relation,
    rhs: i64,
}

impl LinearConstraint {
    /// Builds a normalized row: duplicate variables are merged, zero
    /// coefficients dropped, terms sorted by variable, and `<=` rewritten to
    /// `>=` by negating both sides.
    pub fn new(
        terms: impl IntoIterator<Item = (i64, usize)>,
        relation: Relation,
        rhs: i64,
    ) -> Result<Self, ModelError> {
        let mut merged: BTreeMap<usize, i64> = BTreeMap::new();
        for (coef, var) in terms {
            let slot = merged.entry(var).or_insert(0);
            *slot = slot
                .checked_add(coef)
                .ok_or(ModelError::Overflow("constraint coefficient merge"))?;
        }
        let mut terms: Vec<(i64, usize)> = merged
            .into_iter()
            .filter(|&(_, c)| c != 0)
            .map(|(v, c)| (c, v))
            .collect();
        if terms.is_empty() {
            return Err(ModelError::EmptyConstraint);
        }
        let (relation, rhs) = match relation {
            Relation::Le => {
                for t in terms.iter_mut() {
                    t.0 = t.0.checked_neg().ok_or(ModelError::Overflow("negating a <= row"))?;
                }
                let rhs = rhs.checked_neg().ok_or(ModelError::Overflow("negating a <= row"))?;
                (Relation::Ge, rhs)
            }
            r => (r, rhs),
        };
        Ok(LinearConstraint { terms, relation, rhs })
    }

    /// `(coefficient, variable)` pairs in ascending variable order.
    pub fn terms(&self) -> &[(i64, usize)] {
        &self.terms
    }

    /// Always `Ge` or `Eq`.
    pub fn relation(&self) -> Relation {
        self.relation
    }

    pub fn rhs(&self) -> i64 {
        self.rhs
    }

    /// Left-hand side under `x`, in 128-bit arithmetic (cannot overflow for
    /// fewer than 2^64 terms).
    pub fn activity(&self, x: &Assignment) -> i128 {
        self.terms
            .iter()
            .filter(|&&(_, v)| x.value(v))
            .map(|&(c, _)| c as i128)
            .sum()
    }

    pub fn is_satisfied(&self, x: &Assignment) -> bool {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Ge => lhs >= self.rhs as i128,
            Relation::Eq => lhs == self.rhs as i128,
            Relation::Le => lhs <= self.rhs as i128,
        }
    }
}

/// A 0/1 vector over the variables of a program.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn zeros(n: usize) -> Self {
        Assignment(vec![false; n])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Assignment(bits)
    }

    /// Builds from 0/1 integers, e.g. `Assignment::from_ints(&[1, 0, 1])`.
    pub fn from_ints(bits: &[u8]) -> Self {
        Assignment(bits.iter().map(|&b| b != 0).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Value of the 1-based variable `var`.
    pub fn value(&self, var: usize) -> bool {
        self.0[var - 1]
    }

    pub fn set(&mut self, var: usize, value: bool) {
        self.0[var - 1] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Run-length encoding such as `1:3 0:5`, i.e. three ones followed by
    /// five zeros.
    pub fn run_length(&self) -> String {
        let mut out = String::new();
        let mut iter = self.0.iter().peekable();
        while let Some(&b) = iter.next() {
            let mut count = 1usize;
            while iter.peek() == Some(&&b) {
                iter.next();
                count += 1;
            }
            if !out.is_empty() {
                out.push(' ');
            }
            let _ = write!(out, "{}:{}", u8::from(b), count);
        }
        out
    }
}

/// Sparse integer objective: variable → nonzero coefficient.
pub type Objective = BTreeMap<usize, i64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryProgram {
    name: String,
    sense: Sense,
    num_vars: usize,
    objective: Objective,
    constraints: Vec<LinearConstraint>,
}

impl BinaryProgram {
    /// Validates variable ranges and drops zero objective entries.
    pub fn new(
        name: impl Into<String>,
        sense: Sense,
        num_vars: usize,
        objective: impl IntoIterator<Item = (usize, i64)>,
        constraints: Vec<LinearConstraint>,
    ) -> Result<Self, ModelError> {
        let mut obj = Objective::new();
        for (var, coef) in objective {
            check_var(var, num_vars)?;
            let slot = obj.entry(var).or_insert(0);
            *slot = slot
                .checked_add(coef)
                .ok_or(ModelError::Overflow("objective coefficient merge"))?;
        }
        obj.retain(|_, c| *c != 0);
        for con in &constraints {
            for &(_, var) in con.terms() {
                check_var(var, num_vars)?;
            }
        }
        Ok(BinaryProgram {
            name: name.into(),
            sense,
            num_vars,
            objective: obj,
            constraints,
        })
    }

    /// Dense objective, index `i - 1` holding `c_i`.
    pub fn dense_objective(&self) -> Vec<i64> {
        let mut c = vec![0; self.num_vars];
        for (&v, &coef) in &self.objective {
            c[v - 1] = coef;
        }
        c
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    /// Coefficient of `var`, zero when absent.
    pub fn coefficient(&self, var: usize) -> i64 {
        self.objective.get(&var).copied().unwrap_or(0)
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    /// Same formulation with a different objective (zeros dropped).
    pub fn with_objective(&self, objective: Objective) -> Result<Self, ModelError> {
        BinaryProgram::new(
            self.name.clone(),
            self.sense,
            self.num_vars,
            objective,
            self.constraints.clone(),
        )
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn evaluate_objective(&self, x: &Assignment) -> Result<i64, ModelError> {
        self.check_len(x)?;
        let mut total: i64 = 0;
        for (&var, &coef) in &self.objective {
            if x.value(var) {
                total = total
                    .checked_add(coef)
                    .ok_or(ModelError::Overflow("objective evaluation"))?;
            }
        }
        Ok(total)
    }

    pub fn is_feasible(&self, x: &Assignment) -> Result<bool, ModelError> {
        self.check_len(x)?;
        Ok(self.constraints.iter().all(|c| c.is_satisfied(x)))
    }

    /// Max of |c_i|, |a_ij| and |b_j|; zero for an empty program.
    pub fn largest_abs_coefficient(&self) -> u64 {
        let obj = self.objective.values().map(|c| c.unsigned_abs());
        let cons = self.constraints.iter().flat_map(|con| {
            con.terms()
                .iter()
                .map(|&(c, _)| c.unsigned_abs())
                .chain(std::iter::once(con.rhs().unsigned_abs()))
        });
        obj.chain(cons).max().unwrap_or(0)
    }

    /// Recognizes `max c·x s.t. w·x <= W` with `c >= 0`, `w >= 1`, every
    /// variable appearing in the single row. Returns dense `(c, w, W)`.
    pub fn as_knapsack(&self) -> Option<(Vec<i64>, Vec<i64>, i64)> {
        if self.sense != Sense::Maximize || self.constraints.len() != 1 {
            return None;
        }
        let row = &self.constraints[0];
        if row.relation() != Relation::Ge || row.terms().len() != self.num_vars {
            return None;
        }
        let weights: Vec<i64> = row
            .terms()
            .iter()
            .map(|&(a, _)| a.checked_neg())
            .collect::<Option<_>>()?;
        let capacity = row.rhs().checked_neg()?;
        if weights.iter().any(|&w| w < 1) || capacity < 0 {
            return None;
        }
        let values = self.dense_objective();
        if values.iter().any(|&v| v < 0) {
            return None;
        }
        Some((values, weights, capacity))
    }

    fn check_len(&self, x: &Assignment) -> Result<(), ModelError> {
        if x.len() != self.num_vars {
            return Err(ModelError::LengthMismatch {
                expected: self.num_vars,
                got: x.len(),
            });
        }
        Ok(())
    }
}

fn check_var(var: usize, num_vars: usize) -> Result<(), ModelError> {
    if var == 0 || var > num_vars {
        return Err(ModelError::VariableOutOfRange { index: var, num_vars });
    }
    Ok(())
}

const SENSE_TAG: &str = "sense:";
const NAME_TAG: &str = "name:";

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() || ch == ';' {
            if let Some(s) = start.take() {
                tokens.push(Token {
                    text: &line[s..i],
                    column: s + 1,
                });
            }
            if ch == ';' {
                tokens.push(Token {
                    text: ";",
                    column: i + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: &line[s..],
            column: s + 1,
        });
    }
    tokens
}

fn parse_wide(tok: &Token<'_>, line: usize) -> Result<i128, ParseError> {
    let body = tok.text.strip_prefix('+').unwrap_or(tok.text);
    let digits = body.strip_prefix('-').unwrap_or(body);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        let message = if digits.contains('.') || digits.contains('e') || digits.contains('E') {
            format!("non-integer coefficient `{}`", tok.text)
        } else {
            format!("expected an integer, found `{}`", tok.text)
        };
        return Err(ParseError::syntax(line, tok.column, message));
    }
    body.parse::<i128>().map_err(|_| too_wide(tok.text, line, tok.column))
}

fn too_wide(text: &str, line: usize, column: usize) -> ParseError {
    ParseError::syntax(line, column, format!("integer `{text}` does not fit in 64 bits"))
}

fn narrow(value: i128, text: &str, line: usize, column: usize) -> Result<i64, ParseError> {
    i64::try_from(value).map_err(|_| too_wide(text, line, column))
}

fn parse_integer(tok: &Token<'_>, line: usize) -> Result<i64, ParseError> {
    narrow(parse_wide(tok, line)?, tok.text, line, tok.column)
}

fn parse_variable(tok: &Token<'_>, line: usize, declared: Option<usize>) -> Result<usize, ParseError> {
    if tok.text.starts_with('~') {
        return Err(ParseError::syntax(
            line,
            tok.column,
            format!("negated literal `{}` is not supported", tok.text),
        ));
    }
    let digits = tok.text.strip_prefix('x').ok_or_else(|| {
        ParseError::syntax(
            line,
            tok.column,
            format!("expected a variable `x<k>`, found `{}`", tok.text),
        )
    })?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseError::syntax(
            line,
            tok.column,
            format!("malformed variable `{}`", tok.text),
        ));
    }
    let idx: usize = digits
        .parse()
        .map_err(|_| ParseError::syntax(line, tok.column, "variable index too large"))?;
    if idx == 0 {
        return Err(ParseError::syntax(
            line,
            tok.column,
            "variable index 0 (indices start at 1)",
        ));
    }
    if let Some(n) = declared {
        if idx > n {
            return Err(ParseError::syntax(
                line,
                tok.column,
                format!("variable x{idx} exceeds declared count {n}"),
            ));
        }
    }
    Ok(idx)
}

/// A parsed term; the coefficient is range-checked by the caller, since a
/// max objective is negated first.
struct WideTerm {
    coef: i128,
    var: usize,
    text: String,
    column: usize,
}

/// Reads `coef var` pairs until a non-term token. Returns the terms and the
/// index of the first unconsumed token.
fn parse_terms(
    tokens: &[Token<'_>],
    line: usize,
    declared: Option<usize>,
    in_objective: bool,
) -> Result<(Vec<WideTerm>, usize), ParseError> {
    let mut terms = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let tok = &tokens[i];
        if tok.text == ";" || is_relation(tok.text) {
            break;
        }
        let coef = parse_wide(tok, line)?;
        let Some(var_tok) = tokens.get(i + 1) else {
            return Err(ParseError::syntax(line, tok.column, "missing ';'"));
        };
        if var_tok.text == ";" || is_relation(var_tok.text) {
            if in_objective {
                return Err(ParseError::syntax(
                    line,
                    tok.column,
                    "objective constant terms are not supported",
                ));
            }
            // `term+ relation` with a dangling integer
            return Err(ParseError::syntax(
                line,
                tok.column,
                format!("integer `{}` has no variable", tok.text),
            ));
        }
        let var = parse_variable(var_tok, line, declared)?;
        if let Some(next) = tokens.get(i + 2) {
            if next.text.starts_with('x') || next.text.starts_with('~') {
                return Err(ParseError::syntax(
                    line,
                    next.column,
                    "non-linear product terms are not supported",
                ));
            }
        }
        terms.push(WideTerm {
            coef,
            var,
            text: tok.text.to_string(),
            column: tok.column,
        });
        i += 2;
    }
    Ok((terms, i))
}

fn is_relation(s: &str) -> bool {
    matches!(s, ">=" | "=" | "<=")
}

fn expect_end(tokens: &[Token<'_>], at: usize, line: usize, line_len: usize) -> Result<(), ParseError> {
    match tokens.get(at) {
        Some(t) if t.text == ";" => match tokens.get(at + 1) {
            None => Ok(()),
            Some(extra) => Err(ParseError::syntax(
                line,
                extra.column,
                format!("unexpected `{}` after ';'", extra.text),
            )),
        },
        Some(t) => Err(ParseError::syntax(
            line,
            t.column,
            format!("expected ';', found `{}`", t.text),
        )),
        None => Err(ParseError::syntax(line, line_len + 1, "missing ';'")),
    }
}

/// Parses the linear OPB subset described in the crate README.
pub fn parse_opb(text: &str) -> Result<BinaryProgram, ParseError> {
    let mut declared: Option<usize> = None;
    let mut sense = Sense::Minimize;
    let mut name = String::new();
    let mut objective: Option<(usize, Vec<WideTerm>)> = None;
    let mut constraints = Vec::new();
    let mut max_seen = 0usize;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('*') {
            let comment = comment.trim();
            if let Some(rest) = comment.strip_prefix(SENSE_TAG) {
                sense = match rest.trim() {
                    "max" => Sense::Maximize,
                    "min" => Sense::Minimize,
                    other => return Err(ParseError::syntax(line, 1, format!("unknown sense `{other}`"))),
                };
            } else if let Some(rest) = comment.strip_prefix(NAME_TAG) {
                name = rest.trim().to_string();
            } else if let Some(n) = declared_variables(comment) {
                declared = Some(n);
            }
            continue;
        }
        let tokens = tokenize(raw);
        if let Some(first) = tokens.first() {
            if first.text == "min:" {
                if objective.is_some() {
                    return Err(ParseError::syntax(line, first.column, "second objective line"));
                }
                let (terms, end) = parse_terms(&tokens[1..], line, declared, true)?;
                expect_end(&tokens[1..], end, line, raw.len())?;
                max_seen = terms.iter().map(|t| t.var).fold(max_seen, usize::max);
                objective = Some((line, terms));
                continue;
            }
            if first.text.ends_with(':') {
                return Err(ParseError::syntax(
                    line,
                    first.column,
                    format!("unsupported objective `{}` (only `min:`)", first.text),
                ));
            }
        }
        let (terms, at) = parse_terms(&tokens, line, declared, false)?;
        if terms.is_empty() {
            let col = tokens.first().map_or(1, |t| t.column);
            return Err(ParseError::syntax(line, col, "constraint without terms"));
        }
        let rel_tok = tokens
            .get(at)
            .ok_or_else(|| ParseError::syntax(line, raw.len() + 1, "missing relation"))?;
        let relation = match rel_tok.text {
            ">=" => Relation::Ge,
            "=" => Relation::Eq,
            "<=" => Relation::Le,
            other => {
                return Err(ParseError::syntax(
                    line,
                    rel_tok.column,
                    format!("expected a relation, found `{other}`"),
                ))
            }
        };
        let rhs_tok = tokens
            .get(at + 1)
            .ok_or_else(|| ParseError::syntax(line, raw.len() + 1, "missing right-hand side"))?;
        let rhs = parse_integer(rhs_tok, line)?;
        expect_end(&tokens, at + 2, line, raw.len())?;
        max_seen = terms.iter().map(|t| t.var).fold(max_seen, usize::max);
        let terms = terms
            .iter()
            .map(|t| Ok((narrow(t.coef, &t.text, line, t.column)?, t.var)))
            .collect::<Result<Vec<_>, ParseError>>()?;
        let con = LinearConstraint::new(terms, relation, rhs).map_err(|source| ParseError::Model { line, source })?;
        constraints.push(con);
    }

    let num_vars = declared.unwrap_or(max_seen);
    let mut obj_terms = Vec::new();
    if let Some((line, terms)) = objective {
        for t in terms {
            let c = if sense == Sense::Maximize { -t.coef } else { t.coef };
            obj_terms.push((narrow(c, &t.text, line, t.column)?, t.var));
        }
    }
    BinaryProgram::new(
        name,
        sense,
        num_vars,
        obj_terms.into_iter().map(|(c, v)| (v, c)),
        constraints,
    )
    .map_err(|source| ParseError::Model { line: 0, source })
}

/// `#variable= 12 #constraint= 4` header, as written by PB-competition tools.
fn declared_variables(comment: &str) -> Option<usize> {
    let rest = comment.split("#variable=").nth(1)?;
    rest.split_whitespace().next()?.parse().ok()
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = (i64, usize)>) {
    for (coef, var) in terms {
        let _ = write!(out, " {coef:+} x{var}");
    }
}

/// Writes `bp` as OPB. Maximization objectives are negated and the original
/// sense is kept in a `* sense: max` comment. The zero objective writes no
/// `min:` line.
pub fn write_opb(bp: &BinaryProgram) -> String {
    write_opb_with_header(bp, &[])
}

/// Like [`write_opb`], with extra `*` comment lines after the standard header.
pub fn write_opb_with_header(bp: &BinaryProgram, header: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "* #variable= {} #constraint= {}",
        bp.num_vars(),
        bp.constraints().len()
    );
    if !bp.name().is_empty() {
        let _ = writeln!(out, "* {NAME_TAG} {}", bp.name());
    }
    let _ = writeln!(out, "* {SENSE_TAG} {}", bp.sense());
    for h in header {
        for l in h.lines() {
            let _ = writeln!(out, "* {l}");
        }
    }
    if !bp.objective().is_empty() {
        out.push_str("min:");
        let negate = bp.sense() == Sense::Maximize;
        // i128: negating i64::MIN must not wrap
        for (&var, &coef) in bp.objective() {
            let c = if negate { -(coef as i128) } else { coef as i128 };
            let _ = write!(out, " {c:+} x{var}");
        }
        out.push_str(" ;\n");
    }
    for con in bp.constraints() {
        let mut line = String::new();
        write_terms(&mut line, con.terms().iter().copied());
        let _ = writeln!(out, "{} {} {} ;", line.trim_start(), con.relation(), con.rhs());
    }
    out
}
