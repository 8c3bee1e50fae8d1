//! Acceptance gate: one PASS/FAIL line per criterion; exits nonzero on any
//! failure.

mod common;

use std::collections::HashMap;
use std::process::Command;
use std::time::Instant;

use bitround::generators::{generate_cflp, generate_knapsack, CflpRecipe, KnapsackRecipe, Rng};
use bitround::harness::{
    run_experiment, shifted_geometric_mean, ExperimentConfig, InstanceSource, Level, RecordLoss, RecordStatus,
};
use bitround::model::{parse_opb, write_opb, BinaryProgram, LinearConstraint, Relation, Sense};
use bitround::rounding::{loss_bound_traditional, round_coefficient, round_objective};
use bitround::solvers::{certify_pair_with, solve_bp, solve_enumeration, solve_knapsack, LossOutcome, SolveBudget};
use bitround::symmetry::{
    brute_force_automorphisms, build_colored_graph, find_generators, group_elements, orbit_partition, verify_symmetry,
};
use common::*;
use num_rational::BigRational;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// 1. Rounding agrees with the string bit-mask oracle.
fn rounding_oracle_equivalence() -> Outcome {
    let mut checks = 0u64;
    for c in -(1i64 << 16)..=(1 << 16) {
        for level in 0..=17 {
            let (got, want) = (round_coefficient(c, level), rounding_oracle(c, level));
            if got != want {
                return Err(format!("c={c} ℓ={level}: {got} != {want}"));
            }
            checks += 1;
        }
    }
    Ok(format!("{checks} (c, ℓ) pairs, exact"))
}

/// 2. Envelope and loss bound on random knapsacks solved by enumeration.
fn certificate_suite() -> Outcome {
    let mut rng = Rng::seed_from(2);
    let mut pairs = 0;
    for inst in 0..500 {
        let n = draw(&mut rng, 2, 18) as usize;
        let bp = random_knapsack(&mut rng, n, 1 << 14, 1 << 10);
        for level in 1..=5 {
            let r = certify_pair_with(&bp, level, |p| solve_enumeration(p, 22)).map_err(|e| e.to_string())?;
            if !r.envelope_holds {
                return Err(format!("instance {inst} ℓ={level}: envelope fails"));
            }
            let LossOutcome::Available(loss) = &r.loss else {
                return Err(format!("instance {inst} ℓ={level}: loss {:?}", r.loss));
            };
            if *loss > loss_bound_traditional(level).unwrap() {
                return Err(format!("instance {inst} ℓ={level}: loss {loss} above bound"));
            }
            pairs += 1;
        }
    }
    Ok(format!("{pairs}/2500 pairs certified, exact rationals"))
}

/// 3. Verified generators of the original survive rounding.
fn group_containment() -> Outcome {
    let mut checked = 0;
    let mut with_symmetry = 0;
    for i in 0..100u64 {
        let mut recipe = KnapsackRecipe::new(10 + (i as usize % 21), 2 + (i as usize % 4), i);
        recipe.noise_sigma = [0, 16, 4096][i as usize % 3];
        recipe.balanced = i % 2 == 0;
        let bp = generate_knapsack(&recipe).map_err(|e| e.to_string())?;
        let report = find_generators(&build_colored_graph(&bp), 1_000_000);
        if report.timed_out {
            return Err(format!("instance {i}: symmetry budget exhausted"));
        }
        if !report.generators.is_empty() {
            with_symmetry += 1;
        }
        for g in &report.generators {
            if !verify_symmetry(&bp, g).unwrap() {
                return Err(format!("instance {i}: generator {g} unsound"));
            }
            for level in 2..=5 {
                let (rounded, _) = round_objective(&bp, level);
                if !verify_symmetry(&rounded, g).unwrap() {
                    return Err(format!("instance {i} ℓ={level}: generator {g} lost"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!(
        "{checked} (generator, ℓ) checks on {with_symmetry} symmetric instances"
    ))
}

fn class_factorial_product(bp: &BinaryProgram) -> u64 {
    let mut classes: HashMap<i64, u64> = HashMap::new();
    for c in bp.dense_objective() {
        *classes.entry(c).or_default() += 1;
    }
    classes
        .values()
        .map(|&k| (1..=k).product::<u64>())
        .fold(1u64, |a, b| a.saturating_mul(b))
}

/// 4. Search group equals the brute-force automorphism group.
fn automorphism_oracle() -> Outcome {
    let mut rng = Rng::seed_from(4);
    let mut done = 0;
    let mut nontrivial = 0;
    let mut attempt = 0u64;
    while done < 200 {
        attempt += 1;
        let bp = match attempt % 4 {
            0 => {
                let mut r = KnapsackRecipe::new(draw(&mut rng, 4, 12) as usize, draw(&mut rng, 2, 4) as usize, attempt);
                r.noise_sigma = 0;
                r.balanced = attempt.is_multiple_of(8);
                match generate_knapsack(&r) {
                    Ok(bp) => bp,
                    Err(_) => continue,
                }
            }
            1 => {
                let mut r = CflpRecipe::new(2, draw(&mut rng, 3, 4) as usize, attempt);
                r.decimals = draw(&mut rng, 0, 1) as u32;
                generate_cflp(&r).map_err(|e| e.to_string())?
            }
            _ => {
                let n = draw(&mut rng, 2, 12) as usize;
                let rows = draw(&mut rng, 0, 4) as usize;
                let alphabet = draw(&mut rng, 1, 3);
                random_pb(&mut rng, n, rows, alphabet)
            }
        };
        if class_factorial_product(&bp) > 2_000_000 {
            continue;
        }
        let n = bp.num_vars();
        let report = find_generators(&build_colored_graph(&bp), 1_000_000);
        let all = brute_force_automorphisms(&bp, 12).map_err(|e| e.to_string())?;
        let expected_orbits = orbit_partition(&all, n);
        if report.orbit_partition != expected_orbits {
            return Err(format!(
                "{}: orbits {:?} != {:?}",
                bp.name(),
                report.orbit_partition,
                expected_orbits
            ));
        }
        let order = group_elements(&report.generators, n, all.len() + 1).map(|g| g.len());
        if order != Some(all.len() + 1) {
            return Err(format!("{}: group order {order:?} != {}", bp.name(), all.len() + 1));
        }
        if !all.is_empty() {
            nontrivial += 1;
        }
        done += 1;
    }
    Ok(format!("{done} programs agree ({nontrivial} with nontrivial groups)"))
}

fn sweep(
    sources: Vec<InstanceSource>,
    levels: Vec<Level>,
    max_nodes: u64,
) -> Result<bitround::harness::ExperimentOutcome, String> {
    let mut cfg = ExperimentConfig::new(sources);
    cfg.levels = levels;
    cfg.seeds = 1;
    cfg.budget.max_nodes = max_nodes;
    run_experiment(&cfg).map_err(|e| e.to_string())
}

/// 5. More generators at ℓ = 2 than at the original level.
fn generator_trend() -> Outcome {
    let sources = (0..20)
        .map(|s| {
            let mut r = KnapsackRecipe::new(60, 6, s);
            r.noise_sigma = 1 << 12;
            InstanceSource::Knapsack(r)
        })
        .collect();
    let out = sweep(sources, vec![Level::Original, Level::Bits(2)], 10_000_000)?;
    let (orig, l2) = (&out.rows[0], &out.rows[1]);
    let (g0, g2) = (orig.sgm_generators.unwrap_or(0.0), l2.sgm_generators.unwrap_or(0.0));
    let strict = out
        .records
        .chunks(2)
        .filter(|pair| pair[1].generator_count > pair[0].generator_count)
        .count();
    if g2 >= g0 && strict >= 1 {
        Ok(format!(
            "sgm generators {g0:.2} -> {g2:.2}; strict increase on {strict}/20"
        ))
    } else {
        Err(format!(
            "sgm generators {g0:.2} -> {g2:.2}; strict increase on {strict}/20"
        ))
    }
}

/// 6. CFLP losses: positive somewhere at ℓ = 2, within bounds everywhere.
fn cflp_loss_trend() -> Outcome {
    let sources = (0..20)
        .map(|s| InstanceSource::Cflp(CflpRecipe::new(4, 12, s)))
        .collect();
    let out = sweep(
        sources,
        vec![Level::Original, Level::Bits(2), Level::Bits(5)],
        10_000_000,
    )?;
    let cap2 = ratio(1, 3);
    let cap5 = ratio(2, 17);
    let mut positive = 0;
    let mut worst2 = ratio(0, 1);
    let mut worst5 = ratio(0, 1);
    for r in &out.records {
        if r.status != RecordStatus::Optimal {
            return Err(format!("{} {}: {}", r.instance, r.level, r.status));
        }
        let RecordLoss::Available(loss) = &r.loss else {
            return Err(format!("{} {}: loss {:?}", r.instance, r.level, r.loss));
        };
        match r.level {
            Level::Bits(2) => {
                if *loss > cap2 {
                    return Err(format!("{} ℓ=2: loss {loss} above 1/3", r.instance));
                }
                if *loss > ratio(0, 1) {
                    positive += 1;
                }
                worst2 = worst2.max(loss.clone());
            }
            Level::Bits(5) => {
                if *loss > cap5 {
                    return Err(format!("{} ℓ=5: loss {loss} above 2/17", r.instance));
                }
                worst5 = worst5.max(loss.clone());
            }
            _ => {}
        }
    }
    if positive == 0 {
        return Err("no positive loss at ℓ=2".into());
    }
    let pct = |r: &BigRational| bitround::rounding::ratio_to_f64(r) * 100.0;
    Ok(format!(
        "ℓ=2: {positive}/20 positive, max {:.2}% (cap 33.33%), sgm {}%; ℓ=5: max {:.2}% (cap 11.76%)",
        pct(&worst2),
        out.rows[1].sgm_loss_percent.map_or("NA".into(), |v| format!("{v:.2}")),
        pct(&worst5)
    ))
}

/// 7. Enumeration, generic B&B and knapsack B&B agree.
fn cross_solver_agreement() -> Outcome {
    let mut rng = Rng::seed_from(7);
    let budget = SolveBudget::nodes(10_000_000);
    let mut knapsacks = 0;
    for i in 0..300u64 {
        let bp = match i % 3 {
            0 => {
                let n = draw(&mut rng, 1, 20) as usize;
                random_knapsack(&mut rng, n, 1 << 12, 1 << 8)
            }
            1 => {
                let n = draw(&mut rng, 2, 4) as usize;
                let m = draw(&mut rng, 2, 20 / n as i64 - 1) as usize;
                let mut r = CflpRecipe::new(n, m, i);
                r.decimals = draw(&mut rng, 1, 3) as u32;
                generate_cflp(&r).map_err(|e| e.to_string())?
            }
            _ => {
                let n = draw(&mut rng, 1, 20) as usize;
                let rows = draw(&mut rng, 0, 6) as usize;
                let alphabet = draw(&mut rng, 2, 50);
                random_pb(&mut rng, n, rows, alphabet)
            }
        };
        if bp.num_vars() > 20 {
            return Err(format!("{} has {} variables", bp.name(), bp.num_vars()));
        }
        let e = solve_enumeration(&bp, 22).map_err(|e| e.to_string())?;
        let b = solve_bp(&bp, budget).map_err(|e| e.to_string())?;
        if e.status != b.status || e.best_value != b.best_value || !b.is_optimal() && e.is_optimal() {
            return Err(format!(
                "instance {i}: enumeration {:?} vs bp {:?}",
                e.best_value, b.best_value
            ));
        }
        if let Some((v, w, cap)) = bp.as_knapsack() {
            let k = solve_knapsack(&v, &w, cap, budget).map_err(|e| e.to_string())?;
            if k.best_value != e.best_value || !k.is_optimal() {
                return Err(format!(
                    "instance {i}: enumeration {:?} vs knapsack {:?}",
                    e.best_value, k.best_value
                ));
            }
            knapsacks += 1;
        }
    }
    Ok(format!("300/300 agree ({knapsacks} also by the knapsack solver)"))
}

fn random_program(rng: &mut Rng, i: u64) -> BinaryProgram {
    let n = draw(rng, 1, 30) as usize;
    let wide = |rng: &mut Rng| match draw(rng, 0, 5) {
        0 => i64::MIN,
        1 => i64::MAX,
        2 => rng.next_u64() as i64,
        _ => draw(rng, -20, 20),
    };
    let objective: Vec<(usize, i64)> = (1..=n).map(|v| (v, wide(rng))).collect();
    let mut rows = Vec::new();
    for _ in 0..draw(rng, 0, 8) {
        let width = draw(rng, 1, n as i64);
        let terms: Vec<(i64, usize)> = (0..width)
            .map(|_| (wide(rng), draw(rng, 1, n as i64) as usize))
            .collect();
        let relation = [Relation::Ge, Relation::Le, Relation::Eq][draw(rng, 0, 2) as usize];
        if let Ok(c) = LinearConstraint::new(terms, relation, wide(rng)) {
            rows.push(c);
        }
    }
    let sense = if i.is_multiple_of(2) {
        Sense::Maximize
    } else {
        Sense::Minimize
    };
    let name = if i.is_multiple_of(5) {
        String::new()
    } else {
        format!("prog_{i}")
    };
    BinaryProgram::new(name, sense, n, objective, rows).expect("valid program")
}

/// 8. parse(write(bp)) == bp.
fn opb_round_trip() -> Outcome {
    let mut rng = Rng::seed_from(8);
    for i in 0..1000u64 {
        let bp = random_program(&mut rng, i);
        let text = write_opb(&bp);
        match parse_opb(&text) {
            Ok(back) if back == bp => {}
            Ok(_) => return Err(format!("program {i} changed:\n{text}")),
            Err(e) => return Err(format!("program {i}: {e}\n{text}")),
        }
    }
    Ok("1000/1000 programs round-trip exactly".into())
}

/// 9. SGM against a 60-digit reference.
fn sgm_reference() -> Outcome {
    let cases: Vec<serde_json::Value> =
        serde_json::from_str(include_str!("data/sgm_reference.json")).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (i, case) in cases.iter().enumerate() {
        let values: Vec<f64> = case["values"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        let shift = case["shift"].as_f64().unwrap();
        let expected = case["expected"].as_f64().unwrap();
        let got = shifted_geometric_mean(&values, shift).map_err(|e| format!("case {i}: {e}"))?;
        let rel = if expected == 0.0 {
            got.abs()
        } else {
            ((got - expected) / expected).abs()
        };
        worst = worst.max(rel);
        if rel > 1e-12 {
            return Err(format!("case {i}: {got} vs {expected} (rel {rel:.2e})"));
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(lo <= got && got <= hi) {
            return Err(format!("case {i}: {got} outside [{lo}, {hi}]"));
        }
    }
    Ok(format!(
        "{} cases, max relative error {worst:.2e} (tol 1e-12)",
        cases.len()
    ))
}

/// 10. Two `experiment` runs give byte-identical CSVs.
fn experiment_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let opb = dir.path().join("tiny.opb");
    let tiny = generate_knapsack(&KnapsackRecipe::new(14, 2, 11)).map_err(|e| e.to_string())?;
    std::fs::write(&opb, write_opb(&tiny)).map_err(|e| e.to_string())?;
    let cfg = serde_json::json!({
        "instance_sources": [
            {"knapsack": {"n": 24, "k": 3, "seed": 1}},
            {"cflp": {"n": 3, "m": 8, "seed": 2}},
            {"path": opb},
            {"path": dir.path().join("missing.opb")}
        ],
        "seeds": 3,
    });
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, cfg.to_string()).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_bitround"))
            .args([
                "experiment",
                "--config",
                cfg_path.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .map_err(|e| e.to_string())?;
        if status.status.code() != Some(0) {
            return Err(format!("run {run}: {status:?}"));
        }
        let read = |f: &str| std::fs::read(out.join(f)).map_err(|e| e.to_string());
        outputs.push((read("records.csv")?, read("aggregates.csv")?));
    }
    if outputs[0] != outputs[1] {
        return Err("outputs differ".into());
    }
    let lines = outputs[0].0.iter().filter(|&&b| b == b'\n').count() - 1;
    Ok(format!("records.csv ({lines} records) and aggregates.csv identical"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("rounding oracle equivalence", rounding_oracle_equivalence),
        ("certificate suite", certificate_suite),
        ("group containment under rounding", group_containment),
        ("automorphism oracle equivalence", automorphism_oracle),
        ("generator trend", generator_trend),
        ("CFLP loss trend", cflp_loss_trend),
        ("cross-solver agreement", cross_solver_agreement),
        ("OPB round trip", opb_round_trip),
        ("SGM correctness", sgm_reference),
        ("experiment determinism", experiment_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "{tag} {:>2} {name}: {detail} [{:.1}s]",
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
