//! Seeded instance generators for capacitated facility location and
//! clustered knapsack.
//!
//! Every random draw goes through [`Rng`], a ChaCha8 stream consumed in a
//! fixed order, so a recipe (seed included) determines the program and its
//! OPB bytes on every platform. Trigonometry uses `libm` rather than the
//! platform math library for the same reason.

use std::collections::BTreeSet;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BinaryProgram, LinearConstraint, ModelError, Relation, Sense};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenerateError {
    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),
    #[error("empty range [{0}, {1})")]
    EmptyRange(i64, i64),
    #[error("coefficient overflow while generating {0}")]
    Overflow(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Portable seeded generator.
#[derive(Debug, Clone)]
pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn seed_from(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on [0, 1) with 53 bits of precision.
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Discrete uniform on `[a, b) ∩ Z`, by rejection (no modulo bias).
pub fn uniform_int(rng: &mut Rng, a: i64, b: i64) -> Result<i64, GenerateError> {
    if a >= b {
        return Err(GenerateError::EmptyRange(a, b));
    }
    let range = (b as i128 - a as i128) as u64;
    // 2^64 mod range: draws below it would make low residues more likely.
    let threshold = range.wrapping_neg() % range;
    loop {
        let x = rng.next_u64();
        if x >= threshold {
            return Ok((a as i128 + (x % range) as i128) as i64);
        }
    }
}

fn default_square_scale() -> f64 {
    1.0
}
fn default_circle_scale() -> f64 {
    4.0
}
fn default_decimals() -> u32 {
    2
}
fn default_objective_scale() -> i64 {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CflpRecipe {
    /// Facilities.
    pub n: usize,
    /// Customers.
    pub m: usize,
    #[serde(default = "default_square_scale")]
    pub square_scale: f64,
    #[serde(default = "default_circle_scale")]
    pub circle_scale: f64,
    #[serde(default = "default_decimals")]
    pub decimals: u32,
    #[serde(default = "default_objective_scale")]
    pub objective_scale: i64,
    /// Optional `[lo, hi)` range for facility opening costs; zero otherwise.
    #[serde(default)]
    pub fixed_cost: Option<(i64, i64)>,
    #[serde(default)]
    pub seed: u64,
}

impl CflpRecipe {
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        CflpRecipe {
            n,
            m,
            square_scale: default_square_scale(),
            circle_scale: default_circle_scale(),
            decimals: default_decimals(),
            objective_scale: default_objective_scale(),
            fixed_cost: None,
            seed,
        }
    }

    pub fn provenance(&self) -> Vec<String> {
        vec![
            "generator: cflp".to_string(),
            format!("recipe: {}", serde_json::to_string(self).expect("recipe serializes")),
        ]
    }

    /// `x_ij` variable (1-based facility `i`, customer `j`).
    pub fn assign_var(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.m + j
    }

    /// `y_i` variable.
    pub fn open_var(&self, i: usize) -> usize {
        self.n * self.m + i
    }

    fn validate(&self) -> Result<(), GenerateError> {
        let bad = |msg: &str| Err(GenerateError::InvalidRecipe(msg.to_string()));
        if self.n == 0 || self.m == 0 {
            return bad("n and m must be at least 1");
        }
        if !(self.square_scale > 0.0 && self.square_scale.is_finite()) {
            return bad("square_scale must be positive");
        }
        if !(self.circle_scale > 0.0 && self.circle_scale.is_finite()) {
            return bad("circle_scale must be positive");
        }
        if self.decimals > 15 {
            return bad("decimals must be at most 15");
        }
        if self.objective_scale < 1 {
            return bad("objective_scale must be positive");
        }
        if let Some((lo, hi)) = self.fixed_cost {
            if lo >= hi || lo < 0 {
                return bad("fixed_cost must be a nonempty nonnegative range lo:hi");
            }
        }
        Ok(())
    }
}

/// Capacitated facility location: facilities evenly spaced on a circle,
/// customers uniform in a centered square, distances scaled to [0, 1],
/// rounded to `decimals` digits and multiplied by `objective_scale`.
pub fn generate_cflp(recipe: &CflpRecipe) -> Result<BinaryProgram, GenerateError> {
    recipe.validate()?;
    let (n, m) = (recipe.n, recipe.m);
    let mut rng = Rng::seed_from(recipe.seed);

    let customers: Vec<(f64, f64)> = (0..m)
        .map(|_| {
            let x = (rng.unit_f64() - 0.5) * recipe.square_scale;
            let y = (rng.unit_f64() - 0.5) * recipe.square_scale;
            (x, y)
        })
        .collect();
    let facilities: Vec<(f64, f64)> = (1..=n)
        .map(|i| {
            let phi = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            (
                recipe.circle_scale * libm::cos(phi),
                recipe.circle_scale * libm::sin(phi),
            )
        })
        .collect();

    let lo = m.div_ceil(n) as i64;
    let hi = (2 * m).div_ceil(n) as i64;
    let capacity = uniform_int(&mut rng, lo, hi + 1)?;
    let fixed: Vec<i64> = match recipe.fixed_cost {
        Some((a, b)) => (0..n).map(|_| uniform_int(&mut rng, a, b)).collect::<Result<_, _>>()?,
        None => vec![0; n],
    };

    let dist: Vec<f64> = facilities
        .iter()
        .flat_map(|&(fx, fy)| {
            customers.iter().map(move |&(cx, cy)| {
                let (dx, dy) = (fx - cx, fy - cy);
                libm::sqrt(dx * dx + dy * dy)
            })
        })
        .collect();
    let dmax = dist.iter().copied().fold(0.0f64, f64::max);
    let steps = 10i128.pow(recipe.decimals);
    let pow10 = steps as f64;

    let mut objective = Vec::with_capacity(n * m + n);
    for i in 1..=n {
        for j in 1..=m {
            let scaled = dist[(i - 1) * m + j - 1] / dmax;
            let q = (scaled * pow10).round() as i128;
            let coef = q * recipe.objective_scale as i128 / steps;
            let coef = i64::try_from(coef).map_err(|_| GenerateError::Overflow("distance coefficient"))?;
            objective.push((recipe.assign_var(i, j), coef));
        }
    }
    for i in 1..=n {
        objective.push((recipe.open_var(i), fixed[i - 1]));
    }
    // every assignment's objective value fits i64
    objective
        .iter()
        .try_fold(0i64, |acc, &(_, c)| acc.checked_add(c))
        .ok_or(GenerateError::Overflow("objective sum"))?;

    let mut constraints = Vec::with_capacity(m + n);
    for j in 1..=m {
        constraints.push(LinearConstraint::new(
            (1..=n).map(|i| (1, recipe.assign_var(i, j))),
            Relation::Eq,
            1,
        )?);
    }
    for i in 1..=n {
        let terms = (1..=m)
            .map(|j| (1, recipe.assign_var(i, j)))
            .chain(std::iter::once((-capacity, recipe.open_var(i))));
        constraints.push(LinearConstraint::new(terms, Relation::Le, 0)?);
    }

    Ok(BinaryProgram::new(
        format!("cflp_n{n}_m{m}_r{}_s{}", recipe.decimals, recipe.seed),
        Sense::Minimize,
        n * m + n,
        objective,
        constraints,
    )?)
}

fn default_base_low() -> i64 {
    1 << 10
}
fn default_base_high() -> i64 {
    1 << 20
}
fn default_sigma() -> i64 {
    1 << 12
}
fn default_weight_low() -> i64 {
    50
}
fn default_weight_high() -> i64 {
    500
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnapsackRecipe {
    /// Items.
    pub n: usize,
    /// Clusters.
    pub k: usize,
    #[serde(default = "default_base_low")]
    pub base_value_low: i64,
    #[serde(default = "default_base_high")]
    pub base_value_high: i64,
    #[serde(default = "default_sigma")]
    pub noise_sigma: i64,
    #[serde(default = "default_weight_low")]
    pub weight_low: i64,
    #[serde(default = "default_weight_high")]
    pub weight_high: i64,
    #[serde(default = "default_true")]
    pub balanced: bool,
    #[serde(default)]
    pub seed: u64,
}

impl KnapsackRecipe {
    pub fn new(n: usize, k: usize, seed: u64) -> Self {
        KnapsackRecipe {
            n,
            k,
            base_value_low: default_base_low(),
            base_value_high: default_base_high(),
            noise_sigma: default_sigma(),
            weight_low: default_weight_low(),
            weight_high: default_weight_high(),
            balanced: true,
            seed,
        }
    }

    pub fn provenance(&self) -> Vec<String> {
        vec![
            "generator: knapsack".to_string(),
            format!("recipe: {}", serde_json::to_string(self).expect("recipe serializes")),
        ]
    }

    fn validate(&self) -> Result<(), GenerateError> {
        let bad = |msg: &str| Err(GenerateError::InvalidRecipe(msg.to_string()));
        if self.k == 0 || self.k > self.n {
            return bad("need 1 <= k <= n");
        }
        if self.weight_low < 1 || self.weight_low >= self.weight_high {
            return bad("weights need 1 <= weight_low < weight_high");
        }
        if self.base_value_low >= self.base_value_high {
            return bad("base values need low < high");
        }
        if self.noise_sigma < 0 {
            return bad("noise_sigma must be nonnegative");
        }
        Ok(())
    }
}

/// Cluster sizes summing to `n`. Balanced gives the first `n mod k`
/// clusters one extra item; otherwise `k-1` distinct cut points are drawn
/// from `1..n` (Floyd's sampling) and consecutive gaps become sizes.
pub fn cluster_sizes(n: usize, k: usize, balanced: bool, rng: &mut Rng) -> Result<Vec<usize>, GenerateError> {
    if k == 0 || k > n {
        return Err(GenerateError::InvalidRecipe("need 1 <= k <= n".into()));
    }
    if balanced {
        let (q, r) = (n / k, n % k);
        return Ok((0..k).map(|j| q + usize::from(j < r)).collect());
    }
    let population = (n - 1) as i64;
    let picks = (k - 1) as i64;
    let mut cuts = BTreeSet::new();
    for j in (population - picks + 1)..=population {
        let t = uniform_int(rng, 1, j + 1)?;
        if !cuts.insert(t) {
            cuts.insert(j);
        }
    }
    let mut sizes = Vec::with_capacity(k);
    let mut prev = 0i64;
    for c in cuts.into_iter().chain(std::iter::once(n as i64)) {
        sizes.push((c - prev) as usize);
        prev = c;
    }
    debug_assert!(sizes.iter().all(|&s| s > 0));
    Ok(sizes)
}

/// Clustered knapsack: items of a cluster share a weight and a base value
/// perturbed by uniform noise; capacity is half the total weight.
pub fn generate_knapsack(recipe: &KnapsackRecipe) -> Result<BinaryProgram, GenerateError> {
    recipe.validate()?;
    let mut rng = Rng::seed_from(recipe.seed);
    let sizes = cluster_sizes(recipe.n, recipe.k, recipe.balanced, &mut rng)?;
    let mut bases = Vec::with_capacity(recipe.k);
    for _ in 0..recipe.k {
        let gamma = uniform_int(&mut rng, recipe.base_value_low, recipe.base_value_high)?;
        let omega = uniform_int(&mut rng, recipe.weight_low, recipe.weight_high)?;
        bases.push((gamma, omega));
    }

    let sigma = recipe.noise_sigma;
    let mut values = Vec::with_capacity(recipe.n);
    let mut weights = Vec::with_capacity(recipe.n);
    let mut total_weight: i64 = 0;
    for (&size, &(gamma, omega)) in sizes.iter().zip(&bases) {
        for _ in 0..size {
            let noise = if sigma > 0 {
                uniform_int(&mut rng, -sigma, sigma)?
            } else {
                0
            };
            let value = gamma
                .checked_add(noise)
                .ok_or(GenerateError::Overflow("item value"))?
                .max(1);
            values.push(value);
            weights.push(omega);
        }
        let cluster_weight = (size as i64)
            .checked_mul(omega)
            .ok_or(GenerateError::Overflow("capacity"))?;
        total_weight = total_weight
            .checked_add(cluster_weight)
            .ok_or(GenerateError::Overflow("capacity"))?;
    }
    let capacity = total_weight / 2;

    let row = LinearConstraint::new(
        weights.iter().enumerate().map(|(i, &w)| (w, i + 1)),
        Relation::Le,
        capacity,
    )?;
    Ok(BinaryProgram::new(
        format!(
            "knapsack_n{}_k{}_{}_s{}",
            recipe.n,
            recipe.k,
            if recipe.balanced { "bal" } else { "rnd" },
            recipe.seed
        ),
        Sense::Maximize,
        recipe.n,
        values.into_iter().enumerate().map(|(i, v)| (i + 1, v)),
        vec![row],
    )?)
}
