//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion. Every random
//! input comes from a fixed seed.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::cmp::Ordering;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::{mask, Masks};
use mixfair::gen::{random_small_instance, rng};
use mixfair::json;
use mixfair_core::flow::{feasible_block_assignment, BlockSpec};
use mixfair_core::instance::utility_vector;
use mixfair_core::oracle::{
    brute_force_optimal, check_exchange_axiom, check_proximity, check_structure, find_allocation,
    gen_3dm_hardness, gen_realization_hardness, matching_profile, utility_achievable, Limits, ThreeDM,
};
use mixfair_core::partition::{aggregate, canonical_partition, principal_partition};
use mixfair_core::rational::{q, qi};
use mixfair_core::solver::solve;
use mixfair_core::{Allocation, Instance, Objective, UtilityVector};
use rand::Rng;

const SEED: u64 = 0x6d69_7866;
const OBJECTIVES: [Objective; 4] = [Objective::SQUARE_SUM, Objective::DecMin, Objective::IncMax, Objective::Nash];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn uv(xs: &[(i64, i64)]) -> UtilityVector {
    UtilityVector(xs.iter().map(|&(n, d)| q(n, d)).collect())
}

fn show(u: &UtilityVector) -> String {
    let xs: Vec<String> = u.values().iter().map(|x| x.to_string()).collect();
    format!("({})", xs.join(","))
}

/// A solved fixture as seen through the command-line driver.
struct CliSolve {
    utilities: UtilityVector,
    value: Option<String>,
    allocation: Allocation,
    elapsed: Duration,
}

fn cli_solve(input: &Path, objective: &str, dir: &Path) -> Result<CliSolve, String> {
    let out = dir.join(format!("{}-{objective}.json", input.file_stem().unwrap().to_string_lossy()));
    let start = Instant::now();
    let code = mixfair::cli::run([
        "mixfair",
        "solve",
        "--input",
        input.to_str().unwrap(),
        "--objective",
        objective,
        "--output",
        out.to_str().unwrap(),
    ]);
    let elapsed = start.elapsed();
    if code != 0 {
        return Err(format!("solve --objective {objective} exited with {code}"));
    }
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).map_err(|e| e.to_string())?;
    Ok(CliSolve {
        utilities: json::utilities_from_value(serde_json::json!({ "utilities": v["utilities"] }))
            .map_err(|e| e.to_string())?,
        value: v["objective_value"].as_str().map(str::to_owned),
        allocation: json::allocation_from_value(v["allocation"].clone()).map_err(|e| e.to_string())?,
        elapsed,
    })
}

/// Allocations produced by the solver in criteria 1 to 4, for criterion 6.
#[derive(Default)]
struct Emitted(Vec<(Instance, Allocation)>);

fn fixed_case(
    file: &str,
    expect: &[(&str, UtilityVector, Option<&str>)],
    dir: &Path,
    emitted: &mut Emitted,
) -> Outcome {
    let inst = json::parse_instance(&std::fs::read(fixture(file)).unwrap()).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for (objective, want, value) in expect {
        match cli_solve(&fixture(file), objective, dir) {
            Ok(s) => {
                let ok = s.utilities.value_equivalent(want)
                    && s.value.as_deref() == *value
                    && utility_vector(&inst, &s.allocation).as_ref() == Ok(&s.utilities)
                    && s.elapsed < Duration::from_secs(1);
                pass &= ok;
                let value = s.value.map(|v| format!(" value {v}")).unwrap_or_default();
                parts.push(format!("{objective} {}{value} in {:?}", show(&s.utilities), s.elapsed));
                emitted.0.push((inst.clone(), s.allocation));
            }
            Err(e) => {
                pass = false;
                parts.push(e);
            }
        }
    }
    outcome(pass, parts.join("; "))
}

fn criterion1(dir: &Path, emitted: &mut Emitted) -> Outcome {
    let rho = uv(&[(3, 2), (3, 2), (3, 2), (3, 2), (2, 1)]);
    let pi = uv(&[(7, 4), (7, 4), (7, 4), (7, 4), (1, 1)]);
    fixed_case(
        "shared5_cakes3.json",
        &[("square-sum", rho.clone(), Some("13")), ("dec-min", pi, None), ("inc-max", rho, None)],
        dir,
        emitted,
    )
}

fn criterion2(dir: &Path, emitted: &mut Emitted) -> Outcome {
    let pi = uv(&[(3, 2), (3, 2), (3, 2), (3, 2), (1, 1)]);
    let rho = uv(&[(5, 4), (5, 4), (5, 4), (5, 4), (2, 1)]);
    fixed_case(
        "shared5_cakes2.json",
        &[("square-sum", pi.clone(), Some("10")), ("dec-min", pi, None), ("inc-max", rho, None)],
        dir,
        emitted,
    )
}

fn criterion3(dir: &Path, emitted: &mut Emitted) -> Outcome {
    let best = uv(&[(1, 1), (1, 2), (1, 2)]);
    let mut out = fixed_case("trio.json", &[("nash", best.clone(), None)], dir, emitted);
    // every permutation of the optimum is achievable, the equal split of
    // everything is not, and exhaustive search agrees on the optimum
    let inst = json::parse_instance(&std::fs::read(fixture("trio.json")).unwrap()).unwrap();
    let limits = Limits::default();
    let perms = [[0, 1, 2], [1, 0, 2], [2, 1, 0]];
    let all_perms = perms.iter().all(|p| {
        let u = UtilityVector(p.iter().map(|&i| best[i].clone()).collect());
        utility_achievable(&inst, &u, &limits).unwrap()
    });
    let equal = utility_achievable(&inst, &uv(&[(2, 3), (2, 3), (2, 3)]), &limits).unwrap();
    let oracle = brute_force_optimal(&inst, Objective::Nash, &limits).unwrap();
    let agrees = oracle.utilities.value_equivalent(&best);
    out.pass &= all_perms && !equal && agrees;
    out.detail.push_str(&format!(
        "; permutations achievable: {all_perms}; (2/3,2/3,2/3) achievable: {equal}; oracle {}",
        show(&oracle.utilities)
    ));
    out
}

fn criterion4(emitted: &mut Emitted) -> Outcome {
    let mut r = rng(SEED ^ 4);
    let start = Instant::now();
    let (mut instances, mut mismatches, mut errors) = (0, Vec::new(), 0);
    while instances < 120 {
        let inst = random_small_instance(&mut r, 5, 5, 3, true);
        instances += 1;
        for obj in OBJECTIVES {
            let s = solve(&inst, obj);
            let o = brute_force_optimal(&inst, obj, &Limits::default());
            match (s, o) {
                (Ok(s), Ok(o)) => {
                    if s.utilities.sorted_desc() != o.utilities.sorted_desc() {
                        mismatches.push(format!("{obj} on {inst:?}: {} vs {}", show(&s.utilities), show(&o.utilities)));
                    }
                    emitted.0.push((inst.clone(), s.allocation));
                }
                _ => errors += 1,
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatches.is_empty() && errors == 0 && elapsed < Duration::from_secs(60);
    let mut detail = format!(
        "{instances} instances x {} objectives, {} mismatches, {errors} errors in {elapsed:?}",
        OBJECTIVES.len(),
        mismatches.len()
    );
    if let Some(m) = mismatches.first() {
        detail.push_str(&format!("; first: {m}"));
    }
    outcome(pass, detail)
}

fn criterion5() -> Outcome {
    let mut r = rng(SEED ^ 5);
    let start = Instant::now();
    let (mut checked, mut violations, mut errors) = (0, Vec::new(), 0);
    for _ in 0..220 {
        let inst = random_small_instance(&mut r, 5, 4, 3, false);
        for obj in [Objective::SQUARE_SUM, Objective::DecMin] {
            match check_proximity(&inst, obj, &Limits::default()) {
                Ok(rep) if rep.holds() => checked += 1,
                Ok(rep) => violations.push(format!("{obj} on {inst:?}: agents {:?}", rep.violations)),
                Err(_) => errors += 1,
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = violations.is_empty() && errors == 0 && elapsed < Duration::from_secs(120);
    let mut detail = format!(
        "220 mixed instances, {checked} (instance, objective) checks, {} violations, {errors} errors in {elapsed:?}; \
         all optima exact, so no slack was applied",
        violations.len()
    );
    if let Some(v) = violations.first() {
        detail.push_str(&format!("; first: {v}"));
    }
    outcome(pass, detail)
}

fn criterion6(emitted: &Emitted) -> Outcome {
    let bad: Vec<_> = emitted
        .0
        .iter()
        .filter(|(inst, alloc)| !check_structure(inst, alloc).map(|r| r.holds()).unwrap_or(false))
        .collect();
    outcome(bad.is_empty(), format!("{} solver allocations checked, {} violations", emitted.0.len(), bad.len()))
}

fn random_masks<R: Rng>(r: &mut R, max_agents: usize, max_items: usize) -> Masks {
    let n = r.gen_range(1..=max_agents);
    let items = (0..r.gen_range(0..=max_items)).map(|_| r.gen_range(1..1u32 << n)).collect();
    Masks::new(n, items)
}

fn criterion7() -> Outcome {
    let mut r = rng(SEED ^ 7);
    let start = Instant::now();
    let mut failures = Vec::new();
    let total = 250;
    for _ in 0..total {
        let m = random_masks(&mut r, 8, 10);
        let f = m.coverage();
        let cp = canonical_partition(&f).unwrap();
        let pp = principal_partition(&f).unwrap();
        let (blocks, betas) = common::canonical(&m);
        let (pblocks, lambdas) = common::principal(&m);
        let cp_masks: Vec<u32> = cp.blocks.iter().map(|b| mask(b)).collect();
        let pp_masks: Vec<u32> = pp.blocks.iter().map(|b| mask(b)).collect();
        let mut ceilings: Vec<i64> =
            pp.critical_values.iter().map(|l| i64::try_from(l.ceil().to_integer()).unwrap()).collect();
        ceilings.dedup();
        let ok = cp_masks == blocks
            && cp.essential_values == betas
            && pp_masks == pblocks
            && pp.critical_values == lambdas
            && cp.essential_values == ceilings
            && aggregate(&pp) == cp;
        if !ok {
            failures.push(format!("{m:?}"));
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(60);
    outcome(pass, format!("{total} coverage functions (<= 8 agents), {} violations in {elapsed:?}", failures.len()))
}

fn criterion8() -> Outcome {
    let mut r = rng(SEED ^ 8);
    let (mut blocks, mut queries, mut disagreements) = (0, 0, Vec::new());
    while blocks < 60 {
        let n = r.gen_range(1..=6);
        let n_plus = r.gen_range(0..=n);
        let plus: Vec<usize> = (0..n_plus).collect();
        let minus: Vec<usize> = (n_plus..n).collect();
        let goods: Vec<Vec<usize>> =
            (0..r.gen_range(0..=6)).map(|_| common::members(r.gen_range(1..1u32 << n))).collect();
        blocks += 1;
        let max_beta = goods.len() + 1;
        let truth = common::feasible_triples(&plus, &minus, &goods, max_beta);
        let spec = BlockSpec { plus: plus.clone(), minus: minus.clone(), goods: goods.clone() };
        for beta in 1..=max_beta {
            for k in 0..=n_plus {
                for l in 0..=goods.len() {
                    queries += 1;
                    let got = feasible_block_assignment(&spec, k, l, beta as u32).is_ok();
                    if got != truth.contains(&(k, l, beta)) {
                        disagreements.push(format!("plus {plus:?} minus {minus:?} goods {goods:?} k={k} l={l} beta={beta}"));
                    }
                }
            }
        }
    }
    let mut detail = format!("{blocks} blocks, {queries} (k, l, beta) queries, {} disagreements", disagreements.len());
    if let Some(d) = disagreements.first() {
        detail.push_str(&format!("; first: {d}"));
    }
    outcome(disagreements.is_empty(), detail)
}

/// All 3DM instances with `n` elements per side and between 1 and `max_m` triples.
fn all_3dm(n: usize, max_m: usize) -> Vec<ThreeDM> {
    let triples: Vec<[usize; 3]> =
        (0..n * n * n).map(|i| [i / (n * n), i / n % n, i % n]).collect();
    let mut out = Vec::new();
    for subset in 1u32..1 << triples.len() {
        if subset.count_ones() as usize > max_m {
            continue;
        }
        let ts = common::members(subset).into_iter().map(|i| triples[i]).collect();
        out.push(ThreeDM::new(n, ts).unwrap());
    }
    out
}

fn criterion9() -> Outcome {
    let start = Instant::now();
    let limits = Limits::assignments_only(1_000_000);
    let mut parts = Vec::new();
    let mut pass = true;

    let profile = |dm: &ThreeDM| -> bool {
        let inst = gen_3dm_hardness(dm).unwrap();
        find_allocation(&inst, &limits, matching_profile).unwrap().is_some()
    };
    let yes = json::parse_3dm(&std::fs::read(fixture("dm_yes.json")).unwrap()).unwrap();
    let no = json::parse_3dm(&std::fs::read(fixture("dm_no.json")).unwrap()).unwrap();
    let (py, pn) = (profile(&yes), profile(&no));
    pass &= yes.has_perfect_matching() && !no.has_perfect_matching() && py && !pn;
    parts.push(format!("fixtures: yes-instance admits the profile: {py}, no-instance admits it: {pn}"));

    // on the yes-instance the profile is also the dec-min optimum
    let inst = gen_3dm_hardness(&yes).unwrap();
    let best = brute_force_optimal(&inst, Objective::DecMin, &limits).unwrap();
    let mut want = vec![q(3, 5); inst.n_agents()];
    for w in want.iter_mut().take(yes.n()) {
        *w = qi(1);
    }
    let dec_min = best.utilities.value_equivalent(&UtilityVector(want));
    pass &= dec_min;
    parts.push(format!("dec-min optimum of the yes-instance is the profile: {dec_min}"));

    let (mut checked, mut wrong) = (0, 0);
    for n in 1..=2 {
        for dm in all_3dm(n, 4) {
            checked += 1;
            let matching = dm.has_perfect_matching();
            let (inst, target) = gen_realization_hardness(&dm).unwrap();
            if utility_achievable(&inst, &target, &limits).unwrap() != matching || profile(&dm) != matching {
                wrong += 1;
            }
        }
    }
    pass &= wrong == 0;
    parts.push(format!(
        "every 3DM instance with n <= 2 and 1..=4 triples ({checked}): profile and realization target achievable \
         exactly when a perfect matching exists, {wrong} exceptions"
    ));
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(120);
    parts.push(format!("{elapsed:?}"));
    outcome(pass, parts.join("; "))
}

fn criterion10() -> Outcome {
    let mut r = rng(SEED ^ 10);
    let mut parts = Vec::new();
    let mut pass = true;

    let (mut functions, mut pairs, mut bad) = (0, 0, 0);
    for _ in 0..150 {
        let m = random_masks(&mut r, 5, 6);
        let rep = check_exchange_axiom(&m.coverage(), 1_000_000).unwrap();
        functions += 1;
        pairs += rep.pairs_checked;
        bad += usize::from(!rep.holds());
    }
    pass &= bad == 0;
    parts.push(format!("exchange: {functions} functions, {pairs} pairs, {bad} failures"));

    let random_vector = |r: &mut rand_chacha::ChaCha8Rng, n: usize| {
        UtilityVector((0..n).map(|_| q(r.gen_range(0..24), r.gen_range(1..5))).collect())
    };
    let (mut transfers, mut bad) = (0, 0);
    while transfers < 2000 {
        let n = r.gen_range(2..7);
        let u = random_vector(&mut r, n);
        let (i, j) = (r.gen_range(0..n), r.gen_range(0..n));
        if u[i] <= u[j] {
            continue;
        }
        let eps = (&u[i] - &u[j]) * q(r.gen_range(1..100), 100);
        let mut v = u.clone();
        v.0[i] -= &eps;
        v.0[j] += &eps;
        transfers += 1;
        for p in [2, 3, 4] {
            bad += usize::from(Objective::PowerSum(p).compare(&v, &u).unwrap() != Ordering::Less);
        }
    }
    pass &= bad == 0;
    parts.push(format!("transfers: {transfers} transfers x 3 powers, {bad} failures"));

    let mut bad = 0;
    for _ in 0..2000 {
        let n = r.gen_range(1..7);
        let (u, v) = (random_vector(&mut r, n), random_vector(&mut r, n));
        let mut perm = u.clone();
        let shift = r.gen_range(0..n);
        perm.0.rotate_left(shift);
        perm.0.swap(0, n - 1);
        for obj in [Objective::SQUARE_SUM, Objective::PowerSum(3), Objective::DecMin, Objective::IncMax, Objective::Nash] {
            let ok = obj.compare(&u, &perm).unwrap() == Ordering::Equal
                && obj.compare(&u, &v).unwrap() == obj.compare(&v, &u).unwrap().reverse()
                && obj.compare(&perm, &v).unwrap() == obj.compare(&u, &v).unwrap();
            bad += usize::from(!ok);
        }
    }
    pass &= bad == 0;
    parts.push(format!("symmetry: 2000 pairs x 5 objectives, {bad} failures"));

    let (mut docs, mut bad) = (0, 0);
    for seed in 0..100 {
        let inst = random_small_instance(&mut r, 5, 5, 3, seed % 2 == 0);
        let text = json::to_text(&json::instance_value(&inst));
        let back = json::parse_instance(text.as_bytes()).unwrap();
        bad += usize::from(back != inst || json::to_text(&json::instance_value(&back)) != text);
        if let Ok(s) = solve(&inst, Objective::DecMin) {
            let text = json::to_text(&json::allocation_value(&s.allocation));
            let back = json::parse_allocation(text.as_bytes()).unwrap();
            bad += usize::from(back != s.allocation);
            let text = json::to_text(&json::utilities_value(&s.utilities));
            bad += usize::from(json::parse_utilities(text.as_bytes()).unwrap() != s.utilities);
            docs += 2;
        }
        let pp = principal_partition(&inst.f_e()).unwrap();
        let doc = json::PartitionDoc::from(&pp);
        bad += usize::from(json::partition_from_value(json::partition_value(&doc)).unwrap() != doc);
        docs += 2;
    }
    for dm in all_3dm(2, 2) {
        let text = json::to_text(&json::three_dm_value(&dm));
        bad += usize::from(json::parse_3dm(text.as_bytes()).unwrap() != dm);
        docs += 1;
    }
    pass &= bad == 0;
    parts.push(format!("JSON round-trips: {docs} documents, {bad} failures"));
    outcome(pass, parts.join("; "))
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let mut emitted = Emitted::default();
    let mut results: Vec<(u32, &str, Outcome, Duration)> = Vec::new();
    let mut record = |id, name, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        println!("[{}] {id}. {name}: {} [{elapsed:.2?}]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o, elapsed));
    };
    record(1, "five agents, three cakes", &mut || criterion1(dir.path(), &mut emitted));
    record(2, "five agents, two cakes", &mut || criterion2(dir.path(), &mut emitted));
    record(3, "three agents, one good of each kind", &mut || criterion3(dir.path(), &mut emitted));
    record(4, "solver vs exhaustive search", &mut || criterion4(&mut emitted));
    record(5, "proximity", &mut criterion5);
    record(6, "block structure of solver output", &mut || criterion6(&emitted));
    record(7, "partition cross-checks", &mut criterion7);
    record(8, "block gadget vs enumeration", &mut criterion8);
    record(9, "hardness fixtures", &mut criterion9);
    record(10, "property suites", &mut criterion10);
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {} of {} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
