//! Independent oracles and instance builders shared by the integration tests.
#![allow(dead_code)]

use bitround::generators::{uniform_int, Rng};
use bitround::model::{Assignment, BinaryProgram, LinearConstraint, Relation, Sense};
use proptest::prelude::*;

/// Keeps the first `level` characters of |c| in binary, zeroes the rest.
pub fn rounding_oracle(c: i64, level: u32) -> i64 {
    let bits = format!("{:b}", c.unsigned_abs());
    let kept: String = bits
        .chars()
        .enumerate()
        .map(|(i, ch)| if (i as u32) < level { ch } else { '0' })
        .collect();
    let magnitude = u64::from_str_radix(&kept, 2).unwrap() as i128;
    (if c < 0 { -magnitude } else { magnitude }) as i64
}

/// Plain loop over all 2^n points; `None` when infeasible.
pub fn brute_force_optimum(bp: &BinaryProgram) -> Option<i64> {
    let n = bp.num_vars();
    assert!(n <= 20, "oracle is exponential");
    let mut best: Option<i64> = None;
    for mask in 0u32..(1 << n) {
        let x = Assignment::from_bits((0..n).map(|i| mask >> i & 1 == 1).collect());
        if !bp.is_feasible(&x).unwrap() {
            continue;
        }
        let v = bp.evaluate_objective(&x).unwrap();
        if best.is_none_or(|b| bp.sense().improves(v, b)) {
            best = Some(v);
        }
    }
    best
}

pub fn knapsack_program(values: &[i64], weights: &[i64], capacity: i64) -> BinaryProgram {
    let row = LinearConstraint::new(
        weights.iter().enumerate().map(|(i, &w)| (w, i + 1)),
        Relation::Le,
        capacity,
    )
    .unwrap();
    BinaryProgram::new(
        "knapsack",
        Sense::Maximize,
        values.len(),
        values.iter().enumerate().map(|(i, &v)| (i + 1, v)),
        vec![row],
    )
    .unwrap()
}

pub fn draw(rng: &mut Rng, lo: i64, hi_inclusive: i64) -> i64 {
    uniform_int(rng, lo, hi_inclusive + 1).unwrap()
}

/// Random knapsack with values in [1, vmax], weights in [1, wmax] and
/// capacity ⌊Σw/2⌋.
pub fn random_knapsack(rng: &mut Rng, n: usize, vmax: i64, wmax: i64) -> BinaryProgram {
    let values: Vec<i64> = (0..n).map(|_| draw(rng, 1, vmax)).collect();
    let weights: Vec<i64> = (0..n).map(|_| draw(rng, 1, wmax)).collect();
    let cap = weights.iter().sum::<i64>() / 2;
    knapsack_program(&values, &weights, cap)
}

/// Random pseudo-Boolean program over small coefficient alphabets, so that
/// ties and symmetries are common.
pub fn random_pb(rng: &mut Rng, n: usize, rows: usize, alphabet: i64) -> BinaryProgram {
    let objective: Vec<(usize, i64)> = (1..=n).map(|v| (v, draw(rng, -alphabet, alphabet))).collect();
    let mut constraints = Vec::new();
    while constraints.len() < rows {
        let width = draw(rng, 1, n as i64) as usize;
        let terms: Vec<(i64, usize)> = (0..width)
            .map(|_| (draw(rng, -2, 3), draw(rng, 1, n as i64) as usize))
            .collect();
        let relation = [Relation::Ge, Relation::Le, Relation::Eq][draw(rng, 0, 2) as usize];
        let rhs = draw(rng, -1, 3);
        if let Ok(c) = LinearConstraint::new(terms, relation, rhs) {
            constraints.push(c);
        }
    }
    let sense = if draw(rng, 0, 1) == 0 {
        Sense::Maximize
    } else {
        Sense::Minimize
    };
    BinaryProgram::new("pb", sense, n, objective, constraints).unwrap()
}

fn arb_relation() -> impl Strategy<Value = Relation> {
    prop_oneof![Just(Relation::Ge), Just(Relation::Le), Just(Relation::Eq)]
}

fn arb_sense() -> impl Strategy<Value = Sense> {
    prop_oneof![Just(Sense::Maximize), Just(Sense::Minimize)]
}

/// Programs with `n <= max_vars` and coefficients drawn by `coef`.
pub fn arb_program_with(
    max_vars: usize,
    max_rows: usize,
    coef: impl Strategy<Value = i64> + Clone + 'static,
) -> impl Strategy<Value = BinaryProgram> {
    (1..=max_vars).prop_flat_map(move |n| {
        let row = (
            prop::collection::vec((coef.clone(), 1..=n), 1..=n.min(6)),
            arb_relation(),
            coef.clone(),
        );
        (
            "[a-z][a-z0-9_]{0,8}",
            arb_sense(),
            prop::collection::vec(coef.clone(), n),
            prop::collection::vec(row, 0..=max_rows),
        )
            .prop_map(move |(name, sense, obj, rows)| {
                let constraints = rows
                    .into_iter()
                    .filter_map(|(terms, rel, rhs)| LinearConstraint::new(terms, rel, rhs).ok())
                    .collect();
                let objective = obj.into_iter().enumerate().map(|(i, c)| (i + 1, c));
                BinaryProgram::new(name, sense, n, objective, constraints).unwrap()
            })
    })
}

/// Small programs with small coefficients.
pub fn arb_program(max_vars: usize, max_rows: usize) -> impl Strategy<Value = BinaryProgram> {
    arb_program_with(max_vars, max_rows, -6i64..=6)
}

/// Coefficients with few distinct values, which favors symmetry.
pub fn arb_symmetric_program(max_vars: usize) -> impl Strategy<Value = BinaryProgram> {
    arb_program_with(
        max_vars,
        3,
        prop_oneof![Just(1i64), Just(2), Just(-1), Just(8), Just(9)],
    )
}
