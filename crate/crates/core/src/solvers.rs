//! Exact solvers for desk-scale binary programs.
//!
//! * [`solve_enumeration`] walks all 2^n points; it is the ground truth the
//!   other solvers are tested against.
//! * [`solve_knapsack`] is a depth-first branch-and-bound with the Dantzig
//!   (fractional) bound.
//! * [`solve_bp`] is a generic depth-first branch-and-bound with unit
//!   propagation and a combinatorial objective bound.
//!
//! All three are deterministic. Node budgets stop a search reproducibly;
//! the time budget is for interactive use.

use std::time::{Duration, Instant};

use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::model::{Assignment, BinaryProgram, ModelError, Relation, Sense};
use crate::rounding::{
    epsilon_for_level, format_significant, loss_bound_traditional, objective_loss, ratio_string, round_objective,
    verify_certificate, EpsilonCertificate, RoundingError,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("{n} variables exceeds the enumeration limit of {max}")]
    TooManyVariables { n: usize, max: usize },
    #[error("invalid knapsack: {0}")]
    InvalidKnapsack(String),
    #[error(transparent)]
    Rounding(#[from] RoundingError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveBudget {
    pub max_nodes: u64,
    pub max_time: Duration,
}

impl SolveBudget {
    pub fn nodes(max_nodes: u64) -> Self {
        SolveBudget {
            max_nodes,
            ..Self::default()
        }
    }
}

impl Default for SolveBudget {
    fn default() -> Self {
        SolveBudget {
            max_nodes: 10_000_000,
            max_time: Duration::from_secs(3600),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Objective of `best_assignment`, when a feasible point was found.
    pub best_value: Option<i64>,
    pub best_assignment: Option<Assignment>,
    pub nodes_explored: u64,
    pub elapsed: Duration,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Equality ignoring wall-clock time.
    pub fn same_outcome(&self, other: &SolveResult) -> bool {
        self.status == other.status
            && self.best_value == other.best_value
            && self.best_assignment == other.best_assignment
            && self.nodes_explored == other.nodes_explored
    }
}

struct Clock {
    start: Instant,
    budget: SolveBudget,
    nodes: u64,
    exhausted: bool,
}

impl Clock {
    fn new(budget: SolveBudget) -> Self {
        Clock {
            start: Instant::now(),
            budget,
            nodes: 0,
            exhausted: false,
        }
    }

    /// Counts one node; false once the budget is spent.
    fn tick(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        if self.nodes >= self.budget.max_nodes
            || (self.nodes.is_multiple_of(4096) && self.start.elapsed() >= self.budget.max_time)
        {
            self.exhausted = true;
            return false;
        }
        self.nodes += 1;
        true
    }
}

/// Default variable limit for [`solve_enumeration`].
pub const ENUMERATION_MAX_VARS: usize = 22;

/// Exhaustive search. Among optimal points the lexicographically smallest
/// bit vector wins, reading variable 1 as the most significant bit.
pub fn solve_enumeration(bp: &BinaryProgram, max_vars: usize) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let n = bp.num_vars();
    if n > max_vars || n >= 63 {
        return Err(SolveError::TooManyVariables { n, max: max_vars });
    }
    // Split variables into a high block (1..=h) and a low block; per-block
    // tables hold objective and row activities for every sub-mask.
    let h = n / 2;
    let l = n - h;
    let rows = bp.constraints();
    let width = rows.len() + 1;
    let c = bp.dense_objective();

    let table = |first: usize, count: usize| -> Vec<i128> {
        let mut t = vec![0i128; width << count];
        let mut col = vec![0i128; width * count];
        for b in 0..count {
            // bit b of the block mask is variable first + count - 1 - b
            let var = first + count - 1 - b;
            col[b * width] = c[var - 1] as i128;
        }
        for (k, row) in rows.iter().enumerate() {
            for &(a, var) in row.terms() {
                if var >= first && var < first + count {
                    let b = first + count - 1 - var;
                    col[b * width + k + 1] = a as i128;
                }
            }
        }
        for mask in 1usize..(1 << count) {
            let b = mask.trailing_zeros() as usize;
            let prev = mask & (mask - 1);
            for k in 0..width {
                t[mask * width + k] = t[prev * width + k] + col[b * width + k];
            }
        }
        t
    };
    let hi = table(1, h);
    let lo = table(h + 1, l);

    let sense = bp.sense();
    let mut best: Option<(i128, usize, usize)> = None;
    for hm in 0..(1usize << h) {
        let hrow = &hi[hm * width..(hm + 1) * width];
        'lo: for lm in 0..(1usize << l) {
            let lrow = &lo[lm * width..(lm + 1) * width];
            for (k, row) in rows.iter().enumerate() {
                let lhs = hrow[k + 1] + lrow[k + 1];
                let ok = match row.relation() {
                    Relation::Ge => lhs >= row.rhs() as i128,
                    Relation::Eq => lhs == row.rhs() as i128,
                    Relation::Le => lhs <= row.rhs() as i128,
                };
                if !ok {
                    continue 'lo;
                }
            }
            let value = hrow[0] + lrow[0];
            if best.is_none_or(|(b, _, _)| sense.improves(value, b)) {
                best = Some((value, hm, lm));
            }
        }
    }

    let nodes = 1u64 << n;
    let result = match best {
        None => SolveResult {
            status: SolveStatus::Infeasible,
            best_value: None,
            best_assignment: None,
            nodes_explored: nodes,
            elapsed: start.elapsed(),
        },
        Some((_, hm, lm)) => {
            let mut x = Assignment::zeros(n);
            for var in 1..=h {
                x.set(var, hm >> (h - var) & 1 == 1);
            }
            for var in h + 1..=n {
                x.set(var, lm >> (n - var) & 1 == 1);
            }
            let value = bp.evaluate_objective(&x)?;
            SolveResult {
                status: SolveStatus::Optimal,
                best_value: Some(value),
                best_assignment: Some(x),
                nodes_explored: nodes,
                elapsed: start.elapsed(),
            }
        }
    };
    Ok(result)
}

/// Items by value/weight ratio, descending; ties keep the smaller index
/// first.
pub fn ratio_order(values: &[i64], weights: &[i64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| {
        let lhs = values[i] as i128 * weights[j] as i128;
        let rhs = values[j] as i128 * weights[i] as i128;
        rhs.cmp(&lhs).then(i.cmp(&j))
    });
    order
}

/// Fractional-knapsack bound (floored) for items already in ratio order.
pub fn dantzig_bound(values: &[i64], weights: &[i64], capacity: i64) -> i128 {
    let mut room = capacity as i128;
    let mut total = 0i128;
    for (&v, &w) in values.iter().zip(weights) {
        let (v, w) = (v as i128, w as i128);
        if w <= room {
            room -= w;
            total += v;
        } else {
            total += v * room / w;
            break;
        }
    }
    total
}

/// [`ratio_order`] with identical items made adjacent. Reordering inside a
/// ratio tie leaves the Dantzig bound unchanged.
fn search_order(values: &[i64], weights: &[i64]) -> Vec<usize> {
    let mut order = ratio_order(values, weights);
    order.sort_by(|&i, &j| {
        let lhs = values[i] as i128 * weights[j] as i128;
        let rhs = values[j] as i128 * weights[i] as i128;
        rhs.cmp(&lhs).then(values[j].cmp(&values[i])).then(i.cmp(&j))
    });
    order
}

struct KnapsackSearch {
    values: Vec<i64>,
    weights: Vec<i64>,
    /// First position after the run of items identical to this one.
    run_end: Vec<usize>,
    chosen: Vec<bool>,
    best_value: i128,
    best: Vec<bool>,
    clock: Clock,
}

impl KnapsackSearch {
    fn dfs(&mut self, i: usize, room: i64, value: i128) {
        if !self.clock.tick() {
            return;
        }
        if value > self.best_value {
            self.best_value = value;
            self.best.clone_from(&self.chosen);
        }
        if i == self.values.len() {
            return;
        }
        let bound = value + dantzig_bound(&self.values[i..], &self.weights[i..], room);
        if bound <= self.best_value {
            return;
        }
        if self.weights[i] <= room {
            self.chosen[i] = true;
            self.dfs(i + 1, room - self.weights[i], value + self.values[i] as i128);
            self.chosen[i] = false;
            if self.clock.exhausted {
                return;
            }
        }
        // identical items: some optimum takes a prefix of each run
        self.dfs(self.run_end[i], room, value);
    }
}

/// `max c·x s.t. w·x <= W` by depth-first branch-and-bound.
pub fn solve_knapsack(
    values: &[i64],
    weights: &[i64],
    capacity: i64,
    budget: SolveBudget,
) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    if values.len() != weights.len() {
        return Err(SolveError::InvalidKnapsack(format!(
            "{} values but {} weights",
            values.len(),
            weights.len()
        )));
    }
    if let Some(v) = values.iter().find(|&&v| v < 0) {
        return Err(SolveError::InvalidKnapsack(format!("negative value {v}")));
    }
    if let Some(w) = weights.iter().find(|&&w| w < 1) {
        return Err(SolveError::InvalidKnapsack(format!("non-positive weight {w}")));
    }
    let n = values.len();
    if capacity < 0 {
        return Ok(SolveResult {
            status: SolveStatus::Infeasible,
            best_value: None,
            best_assignment: None,
            nodes_explored: 0,
            elapsed: start.elapsed(),
        });
    }
    let order = search_order(values, weights);
    let sorted_values: Vec<i64> = order.iter().map(|&i| values[i]).collect();
    let sorted_weights: Vec<i64> = order.iter().map(|&i| weights[i]).collect();
    let mut run_end = vec![n; n];
    for i in (0..n.saturating_sub(1)).rev() {
        let same = sorted_values[i] == sorted_values[i + 1] && sorted_weights[i] == sorted_weights[i + 1];
        run_end[i] = if same { run_end[i + 1] } else { i + 1 };
    }
    let mut search = KnapsackSearch {
        values: sorted_values,
        weights: sorted_weights,
        run_end,
        chosen: vec![false; n],
        best_value: 0,
        best: vec![false; n],
        clock: Clock::new(budget),
    };
    search.dfs(0, capacity, 0);

    let mut x = Assignment::zeros(n);
    for (pos, &item) in order.iter().enumerate() {
        x.set(item + 1, search.best[pos]);
    }
    let value = i64::try_from(search.best_value).map_err(|_| ModelError::Overflow("knapsack value"))?;
    Ok(SolveResult {
        status: if search.clock.exhausted {
            SolveStatus::BudgetExhausted
        } else {
            SolveStatus::Optimal
        },
        best_value: Some(value),
        best_assignment: Some(x),
        nodes_explored: search.clock.nodes,
        elapsed: start.elapsed(),
    })
}

const FREE: i8 = -1;

struct Row {
    terms: Vec<(i128, usize)>,
    rhs: i128,
    equality: bool,
    max_abs: i128,
}

struct BpSearch<'a> {
    bp: &'a BinaryProgram,
    rows: Vec<Row>,
    var_rows: Vec<Vec<usize>>,
    /// objective in maximization form
    obj: Vec<i128>,
    order: Vec<usize>,
    /// disjoint "exactly one" rows used to tighten the bound
    pick_one: Vec<usize>,
    in_pick_one: Vec<bool>,
    value: Vec<i8>,
    fixed: Vec<i128>,
    pos_free: Vec<i128>,
    neg_free: Vec<i128>,
    obj_fixed: i128,
    trail: Vec<usize>,
    best: Option<(i128, Vec<i8>)>,
    clock: Clock,
}

impl<'a> BpSearch<'a> {
    fn new(bp: &'a BinaryProgram, budget: SolveBudget, order_seed: u64) -> Self {
        let n = bp.num_vars();
        let flip = if bp.sense() == Sense::Maximize { 1 } else { -1 };
        let obj: Vec<i128> = bp.dense_objective().iter().map(|&c| flip * c as i128).collect();

        let mut rows = Vec::with_capacity(bp.constraints().len());
        let mut var_rows = vec![Vec::new(); n];
        for (k, con) in bp.constraints().iter().enumerate() {
            let terms: Vec<(i128, usize)> = con.terms().iter().map(|&(a, v)| (a as i128, v - 1)).collect();
            for &(_, v) in &terms {
                var_rows[v].push(k);
            }
            rows.push(Row {
                max_abs: terms.iter().map(|t| t.0.abs()).max().unwrap_or(0),
                terms,
                rhs: con.rhs() as i128,
                equality: con.relation() == Relation::Eq,
            });
        }

        // descending |c|, ties by index, each tie group rotated by the seed
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| obj[j].abs().cmp(&obj[i].abs()).then(i.cmp(&j)));
        if order_seed != 0 {
            let mut start = 0;
            while start < n {
                let mut end = start + 1;
                while end < n && obj[order[end]].abs() == obj[order[start]].abs() {
                    end += 1;
                }
                let len = end - start;
                order[start..end].rotate_left((order_seed % len as u64) as usize);
                start = end;
            }
        }

        let mut in_pick_one = vec![false; n];
        let mut pick_one = Vec::new();
        for (k, row) in rows.iter().enumerate() {
            let exactly_one = row.equality && row.rhs == 1 && row.terms.iter().all(|t| t.0 == 1);
            if exactly_one && row.terms.iter().all(|t| !in_pick_one[t.1]) {
                for t in &row.terms {
                    in_pick_one[t.1] = true;
                }
                pick_one.push(k);
            }
        }

        let fixed = vec![0; rows.len()];
        let pos_free = rows.iter().map(|r| r.terms.iter().map(|t| t.0.max(0)).sum()).collect();
        let neg_free = rows.iter().map(|r| r.terms.iter().map(|t| t.0.min(0)).sum()).collect();
        BpSearch {
            bp,
            rows,
            var_rows,
            obj,
            order,
            pick_one,
            in_pick_one,
            value: vec![FREE; n],
            fixed,
            pos_free,
            neg_free,
            obj_fixed: 0,
            trail: Vec::new(),
            best: None,
            clock: Clock::new(budget),
        }
    }

    fn assign(&mut self, var: usize, val: bool) {
        self.value[var] = i8::from(val);
        self.trail.push(var);
        if val {
            self.obj_fixed += self.obj[var];
        }
        for &k in &self.var_rows[var] {
            let a = self.coef(k, var);
            if a > 0 {
                self.pos_free[k] -= a;
            } else {
                self.neg_free[k] -= a;
            }
            if val {
                self.fixed[k] += a;
            }
        }
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let var = self.trail.pop().expect("trail above mark");
            let val = self.value[var] == 1;
            self.value[var] = FREE;
            if val {
                self.obj_fixed -= self.obj[var];
            }
            for &k in &self.var_rows[var] {
                let a = self.coef(k, var);
                if a > 0 {
                    self.pos_free[k] += a;
                } else {
                    self.neg_free[k] += a;
                }
                if val {
                    self.fixed[k] -= a;
                }
            }
        }
    }

    fn coef(&self, k: usize, var: usize) -> i128 {
        let terms = &self.rows[k].terms;
        let i = terms.binary_search_by_key(&var, |t| t.1).expect("var in row");
        terms[i].0
    }

    /// Unit propagation to a fixpoint over the rows touched since `mark`;
    /// false on conflict.
    fn propagate(&mut self, mark: usize) -> bool {
        let mut head = mark;
        let mut queue: Vec<usize> = Vec::new();
        let mut all_rows = mark == 0;
        loop {
            if all_rows {
                queue.extend(0..self.rows.len());
                all_rows = false;
            }
            while head < self.trail.len() {
                let var = self.trail[head];
                head += 1;
                queue.extend(self.var_rows[var].iter().copied());
            }
            let Some(k) = queue.pop() else {
                return true;
            };
            let max_act = self.fixed[k] + self.pos_free[k];
            let min_act = self.fixed[k] + self.neg_free[k];
            let row = &self.rows[k];
            if max_act < row.rhs || (row.equality && min_act > row.rhs) {
                return false;
            }
            let ge_tight = max_act - row.rhs < row.max_abs;
            let le_tight = row.equality && row.rhs - min_act < row.max_abs;
            if !ge_tight && !le_tight {
                continue;
            }
            let mut forced: Vec<(usize, bool)> = Vec::new();
            for &(a, v) in &row.terms {
                if self.value[v] != FREE {
                    continue;
                }
                if ge_tight && max_act - a.abs() < row.rhs {
                    forced.push((v, a > 0));
                } else if le_tight && min_act + a.abs() > row.rhs {
                    forced.push((v, a < 0));
                }
            }
            for (v, val) in forced {
                if self.value[v] == FREE {
                    self.assign(v, val);
                }
            }
        }
    }

    /// Upper bound on the (maximization-form) objective below this node.
    fn bound(&self) -> i128 {
        let mut b = self.obj_fixed;
        for v in 0..self.obj.len() {
            if self.value[v] == FREE && !self.in_pick_one[v] {
                b += self.obj[v].max(0);
            }
        }
        for &k in &self.pick_one {
            if self.fixed[k] >= 1 {
                continue;
            }
            let best_free = self.rows[k]
                .terms
                .iter()
                .filter(|t| self.value[t.1] == FREE)
                .map(|t| self.obj[t.1])
                .max();
            if let Some(c) = best_free {
                b += c;
            }
        }
        b
    }

    fn dfs(&mut self, mark: usize) {
        if !self.clock.tick() {
            return;
        }
        if !self.propagate(mark) {
            return;
        }
        if let Some((best, _)) = &self.best {
            if self.bound() <= *best {
                return;
            }
        }
        let Some(&var) = self.order.iter().find(|&&v| self.value[v] == FREE) else {
            let x = self.assignment(&self.value);
            debug_assert_eq!(self.bp.is_feasible(&x), Ok(true));
            if self.best.as_ref().is_none_or(|(b, _)| self.obj_fixed > *b) {
                self.best = Some((self.obj_fixed, self.value.clone()));
            }
            return;
        };
        let first = self.obj[var] >= 0;
        for val in [first, !first] {
            let here = self.trail.len();
            self.assign(var, val);
            self.dfs(here);
            self.undo_to(here);
            if self.clock.exhausted {
                return;
            }
        }
    }

    fn assignment(&self, value: &[i8]) -> Assignment {
        Assignment::from_bits(value.iter().map(|&v| v == 1).collect())
    }
}

/// Generic exact solver with the default variable order.
pub fn solve_bp(bp: &BinaryProgram, budget: SolveBudget) -> Result<SolveResult, SolveError> {
    solve_bp_seeded(bp, budget, 0)
}

/// [`solve_bp`] with tie groups of equal |c| rotated by `order_seed`.
pub fn solve_bp_seeded(bp: &BinaryProgram, budget: SolveBudget, order_seed: u64) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let mut search = BpSearch::new(bp, budget, order_seed);
    search.dfs(0);
    let exhausted = search.clock.exhausted;
    let (status, best_value, best_assignment) = match search.best.take() {
        Some((_, values)) => {
            let x = search.assignment(&values);
            let v = bp.evaluate_objective(&x)?;
            let status = if exhausted {
                SolveStatus::BudgetExhausted
            } else {
                SolveStatus::Optimal
            };
            (status, Some(v), Some(x))
        }
        None if exhausted => (SolveStatus::BudgetExhausted, None, None),
        None => (SolveStatus::Infeasible, None, None),
    };
    Ok(SolveResult {
        status,
        best_value,
        best_assignment,
        nodes_explored: search.clock.nodes,
        elapsed: start.elapsed(),
    })
}

/// Knapsack branch-and-bound when the program is a knapsack, the generic
/// solver otherwise.
pub fn solve_auto(bp: &BinaryProgram, budget: SolveBudget, order_seed: u64) -> Result<SolveResult, SolveError> {
    match bp.as_knapsack() {
        Some((values, weights, capacity)) => solve_knapsack(&values, &weights, capacity, budget),
        None => solve_bp_seeded(bp, budget, order_seed),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LossOutcome {
    Available(BigRational),
    /// One of the two solves did not reach a proven optimum.
    Unavailable,
    /// The original optimum is 0.
    Undefined,
}

impl LossOutcome {
    pub fn value(&self) -> Option<&BigRational> {
        match self {
            LossOutcome::Available(r) => Some(r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PairReport {
    pub level: u32,
    pub epsilon: BigRational,
    pub original: SolveResult,
    pub rounded: SolveResult,
    /// c·x* under the original objective.
    pub original_value: Option<i64>,
    /// c·x*_ℓ under the original objective.
    pub rounded_solution_value: Option<i64>,
    pub loss: LossOutcome,
    pub envelope_holds: bool,
    pub loss_bound: BigRational,
    /// Maximization with c >= 0.
    pub traditional_bound_applies: bool,
    pub traditional_bound_holds: Option<bool>,
}

#[derive(Serialize)]
struct PairJson {
    level: u32,
    epsilon: String,
    original_status: SolveStatus,
    rounded_status: SolveStatus,
    original_value: Option<i64>,
    rounded_solution_value: Option<i64>,
    loss: Option<String>,
    loss_decimal: Option<String>,
    loss_status: &'static str,
    envelope_holds: bool,
    loss_bound: String,
    loss_bound_decimal: String,
    traditional_bound_applies: bool,
    traditional_bound_holds: Option<bool>,
    original_nodes: u64,
    rounded_nodes: u64,
}

impl PairReport {
    pub fn to_json(&self) -> String {
        let json = PairJson {
            level: self.level,
            epsilon: ratio_string(&self.epsilon),
            original_status: self.original.status,
            rounded_status: self.rounded.status,
            original_value: self.original_value,
            rounded_solution_value: self.rounded_solution_value,
            loss: self.loss.value().map(ratio_string),
            loss_decimal: self.loss.value().map(|r| format_significant(r, 6)),
            loss_status: match self.loss {
                LossOutcome::Available(_) => "available",
                LossOutcome::Unavailable => "unavailable",
                LossOutcome::Undefined => "undefined",
            },
            envelope_holds: self.envelope_holds,
            loss_bound: ratio_string(&self.loss_bound),
            loss_bound_decimal: format_significant(&self.loss_bound, 6),
            traditional_bound_applies: self.traditional_bound_applies,
            traditional_bound_holds: self.traditional_bound_holds,
            original_nodes: self.original.nodes_explored,
            rounded_nodes: self.rounded.nodes_explored,
        };
        serde_json::to_string_pretty(&json).expect("report serializes")
    }
}

/// Solves `bp` and its ℓ-rounded copy with the default solver and compares
/// the two optima under the original objective.
pub fn certify_pair(bp: &BinaryProgram, level: u32, budget: SolveBudget) -> Result<PairReport, SolveError> {
    certify_pair_with(bp, level, |p| solve_auto(p, budget, 0))
}

/// [`certify_pair`] with a caller-chosen exact solver.
pub fn certify_pair_with(
    bp: &BinaryProgram,
    level: u32,
    solve: impl Fn(&BinaryProgram) -> Result<SolveResult, SolveError>,
) -> Result<PairReport, SolveError> {
    let epsilon = epsilon_for_level(level)?;
    let loss_bound = loss_bound_traditional(level)?;
    let (rounded_bp, _) = round_objective(bp, level);
    let original = solve(bp)?;
    let rounded = solve(&rounded_bp)?;
    pair_report(bp, &rounded_bp, level, epsilon, loss_bound, original, rounded)
}

fn pair_report(
    bp: &BinaryProgram,
    rounded_bp: &BinaryProgram,
    level: u32,
    epsilon: BigRational,
    loss_bound: BigRational,
    original: SolveResult,
    rounded: SolveResult,
) -> Result<PairReport, SolveError> {
    let original_value = match &original.best_assignment {
        Some(x) => Some(bp.evaluate_objective(x)?),
        None => None,
    };
    let rounded_solution_value = match &rounded.best_assignment {
        Some(x) => Some(bp.evaluate_objective(x)?),
        None => None,
    };
    let loss = match (
        original.is_optimal() && rounded.is_optimal(),
        original_value,
        rounded_solution_value,
    ) {
        (true, Some(a), Some(b)) => match objective_loss(a, b) {
            Ok(r) => LossOutcome::Available(r),
            Err(_) => LossOutcome::Undefined,
        },
        _ => LossOutcome::Unavailable,
    };
    let cert = EpsilonCertificate {
        x_star: rounded
            .best_assignment
            .clone()
            .unwrap_or_else(|| Assignment::zeros(bp.num_vars())),
        c_original: bp.objective().clone(),
        c_perturbed: rounded_bp.objective().clone(),
        epsilon: epsilon.clone(),
    };
    let envelope_holds = verify_certificate(&cert);
    let traditional_bound_applies = bp.sense() == Sense::Maximize && bp.objective().values().all(|&c| c >= 0);
    let traditional_bound_holds = match (&loss, traditional_bound_applies) {
        (LossOutcome::Available(r), true) => Some(*r <= loss_bound),
        _ => None,
    };
    Ok(PairReport {
        level,
        epsilon,
        original,
        rounded,
        original_value,
        rounded_solution_value,
        loss,
        envelope_holds,
        loss_bound,
        traditional_bound_applies,
        traditional_bound_holds,
    })
}
