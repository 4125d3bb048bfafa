//! The `mixfair` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 infeasible or failed
//! verification, 3 intractable case refused or oracle cap exceeded.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info, warn};
use mixfair_core::flow::{realization_network, realize_from_utilities, RealizeError};
use mixfair_core::instance::{utility_vector, validate_allocation};
use mixfair_core::oracle::{
    brute_force_optimal, continuous_min, find_allocation, gen_3dm_hardness, gen_realization_hardness,
    check_structure, proximity_report, Limits, OracleError, StructureViolation, DEFAULT_MAX_ITERATIONS,
};
use mixfair_core::partition::{canonical_partition, principal_partition, relaxed_minimizer};
use mixfair_core::rational::{format_rational, qi, to_f64};
use mixfair_core::solver::{solve, SolveError};
use mixfair_core::{Allocation, GoodKind, Instance, Objective, Q, UtilityVector};
use serde_json::{json, Value};

use crate::dot::network_to_dot;
use crate::gen::{random_instance, rng, RandomSpec};
use crate::json::{
    allocation_from_value, allocation_value, instance_value, parse_3dm, parse_instance, parse_rational_str,
    parse_utilities, partition_value, to_text, utility_list, PartitionDoc,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Usage = 1,
    Infeasible = 2,
    Intractable = 3,
}

#[derive(Debug)]
struct Failure {
    code: ExitCode,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: ExitCode::Usage, message: message.into() }
    }

    fn infeasible(message: impl Into<String>) -> Self {
        Failure { code: ExitCode::Infeasible, message: message.into() }
    }

    fn intractable(message: impl Into<String>) -> Self {
        Failure { code: ExitCode::Intractable, message: message.into() }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::CapExceeded { .. } => Failure::intractable(format!("{e}; raise the caps to continue")),
            OracleError::Realize(RealizeError::Infeasible(_)) => Failure::infeasible(e.to_string()),
            _ => Failure::usage(e.to_string()),
        }
    }
}

type Outcome = Result<ExitCode, Failure>;

#[derive(Debug, Parser)]
#[command(name = "mixfair", version, about = "Fair allocation of mixed divisible and indivisible goods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute a fair allocation for an objective.
    Solve(SolveArgs),
    /// Canonical and principal partitions of all goods, with the relaxed minimizer.
    Partition(PartitionArgs),
    /// Build an allocation achieving given utilities.
    Realize(RealizeArgs),
    /// Check an allocation for validity, block structure and proximity.
    Verify(VerifyArgs),
    /// Exhaustive optimum, or achievability of a target, at desk scale.
    Oracle(OracleArgs),
    /// Emit a random or hardness instance.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
struct Io {
    /// Input JSON file.
    #[arg(long)]
    input: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Caps {
    /// Cap on the number of indivisible assignments searched.
    #[arg(long, value_name = "N")]
    cap_assignments: Option<u64>,
    /// Largest number of agents the exhaustive search accepts.
    #[arg(long, value_name = "N")]
    cap_agents: Option<usize>,
    /// Largest number of indivisible goods the exhaustive search accepts.
    #[arg(long, value_name = "N")]
    cap_indivisible: Option<usize>,
    /// Largest number of divisible goods the exhaustive search accepts.
    #[arg(long, value_name = "N")]
    cap_divisible: Option<usize>,
}

impl Caps {
    fn limits(&self) -> Limits {
        let d = Limits::default();
        Limits {
            max_agents: self.cap_agents.unwrap_or(d.max_agents),
            max_indivisible: self.cap_indivisible.unwrap_or(d.max_indivisible),
            max_divisible: self.cap_divisible.unwrap_or(d.max_divisible),
            max_assignments: self.cap_assignments.unwrap_or(d.max_assignments),
        }
    }
}

fn objective_arg(s: &str) -> Result<Objective, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    io: Io,
    /// square-sum, power:<p>, dec-min, inc-max or nash.
    #[arg(long, value_parser = objective_arg)]
    objective: Objective,
    /// Fall back to exhaustive search when the divisible goods differ.
    #[arg(long)]
    allow_oracle: bool,
    #[command(flatten)]
    caps: Caps,
    /// Write the realization networks of the result in DOT format.
    #[arg(long, value_name = "PATH")]
    dump_network: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PartitionArgs {
    #[command(flatten)]
    io: Io,
    /// Write the cut network at every critical value in DOT format.
    #[arg(long, value_name = "PATH")]
    dump_network: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RealizeArgs {
    #[command(flatten)]
    io: Io,
    /// Utilities of an instance with goods of one kind only.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["indivisible_target", "divisible_target"])]
    target: Option<PathBuf>,
    /// Utilities coming from the indivisible goods of a mixed instance.
    #[arg(long, value_name = "PATH")]
    indivisible_target: Option<PathBuf>,
    /// Utilities coming from the divisible goods of a mixed instance.
    #[arg(long, value_name = "PATH")]
    divisible_target: Option<PathBuf>,
    /// Write the realization networks of the result in DOT format.
    #[arg(long, value_name = "PATH")]
    dump_network: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    io: Io,
    /// Allocation JSON, or the output of `solve` or `oracle`.
    #[arg(long, value_name = "PATH")]
    allocation: PathBuf,
    /// Also compare against the exhaustive optimum for this objective.
    #[arg(long, value_parser = objective_arg)]
    objective: Option<Objective>,
    #[command(flatten)]
    caps: Caps,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    io: Io,
    /// square-sum, power:<p>, dec-min, inc-max or nash.
    #[arg(long, value_parser = objective_arg, required_unless_present = "target")]
    objective: Option<Objective>,
    /// Decide whether these utilities are achievable instead of optimizing.
    #[arg(long, value_name = "PATH", conflicts_with = "objective")]
    target: Option<PathBuf>,
    #[command(flatten)]
    caps: Caps,
    /// Gap tolerance of the conditional-gradient cross-check (power-sum only).
    #[arg(long, default_value = "1/100000000")]
    tol: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Random,
    #[value(name = "3dm")]
    ThreeDm,
    Realization,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Random instance, or one of the two reductions from a 3DM instance.
    #[arg(long, value_enum, default_value = "random")]
    kind: GenKind,
    /// 3DM JSON for the hardness generators.
    #[arg(long, required_if_eq_any = [("kind", "3dm"), ("kind", "realization")])]
    input: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Where the realization generator writes its target utilities.
    #[arg(long, value_name = "PATH")]
    target_output: Option<PathBuf>,
    /// Seed of a random instance.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of agents of a random instance.
    #[arg(long, default_value_t = 4)]
    agents: usize,
    /// Number of indivisible goods of a random instance.
    #[arg(long, default_value_t = 3)]
    indivisible: usize,
    /// Number of divisible goods of a random instance.
    #[arg(long, default_value_t = 2)]
    divisible: usize,
    /// Give every divisible good the same desire set.
    #[arg(long)]
    identical: bool,
}

/// Runs the driver on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("MIXFAIR_LOG", "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::Usage as i32 } else { ExitCode::Success as i32 };
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Partition(a) => cmd_partition(a),
        Command::Realize(a) => cmd_realize(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match outcome {
        Ok(code) => code as i32,
        Err(f) => {
            eprintln!("mixfair: {}", f.message);
            f.code as i32
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn read_instance(path: &Path) -> Result<Instance, Failure> {
    let inst = parse_instance(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    debug!(
        "instance: {} agents, {} indivisible, {} divisible goods",
        inst.n_agents(),
        inst.indivisible().len(),
        inst.divisible().len()
    );
    Ok(inst)
}

fn read_utilities(path: &Path) -> Result<UtilityVector, Failure> {
    parse_utilities(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::usage(format!("cannot write to standard output: {e}"))),
    }
}

fn emit(path: Option<&Path>, value: &Value) -> Result<(), Failure> {
    write_text(path, &to_text(value))
}

fn objective_value(obj: Objective, u: &UtilityVector) -> Value {
    obj.value(u).map_or(Value::Null, |v| Value::from(format_rational(&v)))
}

fn kind_utilities(inst: &Instance, alloc: &Allocation, kind: GoodKind) -> UtilityVector {
    let mut u = UtilityVector::zeros(inst.n_agents());
    for (a, g, s) in alloc.iter() {
        if g.kind == kind {
            u.0[a] += s;
        }
    }
    u
}

/// Realization networks of `alloc`, one per kind of good present.
fn dump_realization(path: &Path, inst: &Instance, alloc: &Allocation) -> Result<(), Failure> {
    let mut out = String::new();
    for (kind, name) in [(GoodKind::Indivisible, "indivisible"), (GoodKind::Divisible, "divisible")] {
        if inst.goods(kind).is_empty() {
            continue;
        }
        let target = kind_utilities(inst, alloc, kind);
        let rn = realization_network(inst, kind, &target).map_err(|e| Failure::usage(e.to_string()))?;
        out.push_str(&network_to_dot(&format!("{name} realization, scale {}", rn.scale), &rn.network));
    }
    write_text(Some(path), &out)
}

fn cmd_solve(a: SolveArgs) -> Outcome {
    let inst = read_instance(&a.io.input)?;
    let (alloc, u, examined) = match solve(&inst, a.objective) {
        Ok(sol) => {
            info!("solved with {} candidates, chosen {:?}", sol.candidates_examined, sol.chosen);
            (sol.allocation, sol.utilities, sol.candidates_examined as u64)
        }
        Err(SolveError::NonIdenticalDivisible) if a.allow_oracle => {
            info!("divisible goods differ; falling back to exhaustive search");
            let r = brute_force_optimal(&inst, a.objective, &a.caps.limits())?;
            (r.allocation, r.utilities, r.assignments_examined)
        }
        Err(SolveError::NonIdenticalDivisible) => {
            return Err(Failure::intractable(
                "the divisible goods are not identical and indivisible goods are present; \
                 exact solving is NP-hard in this case (rerun with --allow-oracle for exhaustive search)",
            ))
        }
        Err(e) => return Err(Failure::usage(format!("solver failed: {e}"))),
    };
    if let Some(p) = &a.dump_network {
        dump_realization(p, &inst, &alloc)?;
    }
    emit(
        a.io.output.as_deref(),
        &json!({
            "utilities": utility_list(&u),
            "objective_value": objective_value(a.objective, &u),
            "allocation": allocation_value(&alloc),
            "candidates_examined": examined,
        }),
    )?;
    Ok(ExitCode::Success)
}

fn cmd_partition(a: PartitionArgs) -> Outcome {
    let inst = read_instance(&a.io.input)?;
    if inst.n_agents() == 0 {
        return Err(Failure::usage("partitions need at least one agent"));
    }
    let f = inst.f_e();
    let fail = |e: mixfair_core::partition::PartitionError| Failure::usage(e.to_string());
    let cp = canonical_partition(&f).map_err(fail)?;
    let pp = principal_partition(&f).map_err(fail)?;
    let z = relaxed_minimizer(&pp, inst.n_agents());
    if let Some(p) = &a.dump_network {
        let mut out = String::new();
        for lambda in &pp.critical_values {
            let net = f.cut_network(lambda).map_err(|e| Failure::usage(e.to_string()))?;
            out.push_str(&network_to_dot(&format!("cut at {lambda}"), &net));
        }
        write_text(Some(p), &out)?;
    }
    emit(
        a.io.output.as_deref(),
        &json!({
            "canonical": partition_value(&PartitionDoc::from(&cp)),
            "principal": partition_value(&PartitionDoc::from(&pp)),
            "relaxed_minimizer": utility_list(&z),
        }),
    )?;
    Ok(ExitCode::Success)
}

fn realize_kind(inst: &Instance, kind: GoodKind, target: &UtilityVector) -> Result<Allocation, Failure> {
    realize_from_utilities(inst, kind, target).map_err(|e| match e {
        RealizeError::LengthMismatch { .. } | RealizeError::CapacityOverflow => Failure::usage(e.to_string()),
        _ => Failure::infeasible(e.to_string()),
    })
}

fn cmd_realize(a: RealizeArgs) -> Outcome {
    let inst = read_instance(&a.io.input)?;
    let mixed = !inst.indivisible().is_empty() && !inst.divisible().is_empty();
    let zeros = || UtilityVector::zeros(inst.n_agents());
    let mut alloc = Allocation::new(false);
    if let Some(path) = &a.target {
        let target = read_utilities(path)?;
        if mixed {
            return Err(Failure::intractable(
                "deciding whether a utility vector is achievable is NP-hard for instances with both kinds of goods; \
                 pass --indivisible-target and --divisible-target instead",
            ));
        }
        let kind = if inst.divisible().is_empty() { GoodKind::Indivisible } else { GoodKind::Divisible };
        alloc = realize_kind(&inst, kind, &target)?;
    } else {
        if a.indivisible_target.is_none() && a.divisible_target.is_none() {
            return Err(Failure::usage("give --target, or --indivisible-target and --divisible-target"));
        }
        for (kind, path) in [(GoodKind::Indivisible, &a.indivisible_target), (GoodKind::Divisible, &a.divisible_target)] {
            let target = match path {
                Some(p) => read_utilities(p)?,
                None if inst.goods(kind).is_empty() => zeros(),
                None => return Err(Failure::usage(format!("missing the target for the {kind:?} goods").to_lowercase())),
            };
            alloc.merge(&realize_kind(&inst, kind, &target)?);
        }
    }
    if let Some(p) = &a.dump_network {
        dump_realization(p, &inst, &alloc)?;
    }
    let u = utility_vector(&inst, &alloc).map_err(|e| Failure::usage(e.to_string()))?;
    emit(a.io.output.as_deref(), &json!({ "utilities": utility_list(&u), "allocation": allocation_value(&alloc) }))?;
    Ok(ExitCode::Success)
}

fn structure_message(v: &StructureViolation) -> String {
    match v {
        StructureViolation::Leak { good, agent, good_block, agent_block } => {
            format!("{good} of block {good_block} is held by agent {agent} of block {agent_block}")
        }
        StructureViolation::Incomplete { good, within } => {
            format!("{good} has only {within} allocated inside its block")
        }
    }
}

fn cmd_verify(a: VerifyArgs) -> Outcome {
    let inst = read_instance(&a.io.input)?;
    let doc: Value =
        serde_json::from_slice(&read(&a.allocation)?).map_err(|e| Failure::usage(format!("{}: {e}", a.allocation.display())))?;
    let doc = match doc.get("allocation") {
        Some(inner) => inner.clone(),
        None => doc,
    };
    let alloc = allocation_from_value(doc).map_err(|e| Failure::usage(format!("{}: {e}", a.allocation.display())))?;
    let violations = validate_allocation(&inst, &alloc);
    let mut report = json!({
        "valid": violations.is_empty(),
        "violations": violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
    });
    let mut ok = violations.is_empty();
    if ok {
        let u = utility_vector(&inst, &alloc).map_err(|e| Failure::usage(e.to_string()))?;
        let fail = |e: mixfair_core::partition::PartitionError| Failure::usage(e.to_string());
        let structure = check_structure(&inst, &alloc).map_err(fail)?;
        let proximity = proximity_report(&inst, u.clone()).map_err(fail)?;
        ok &= structure.holds() && proximity.holds();
        report["utilities"] = utility_list(&u);
        report["structure"] = json!({
            "holds": structure.holds(),
            "blocks": structure.blocks,
            "violations": structure.violations.iter().map(structure_message).collect::<Vec<_>>(),
        });
        report["proximity"] = json!({
            "holds": proximity.holds(),
            "relaxed": utility_list(&proximity.relaxed),
            "violations": proximity.violations,
        });
        if let Some(obj) = a.objective {
            let best = brute_force_optimal(&inst, obj, &a.caps.limits())?;
            let optimal = obj.compare(&u, &best.utilities).map_err(|e| Failure::usage(e.to_string()))?
                == std::cmp::Ordering::Equal;
            ok &= optimal;
            report["optimality"] = json!({
                "objective": obj.to_string(),
                "holds": optimal,
                "optimum": utility_list(&best.utilities),
            });
        }
    }
    report["ok"] = Value::from(ok);
    emit(a.io.output.as_deref(), &report)?;
    Ok(if ok { ExitCode::Success } else { ExitCode::Infeasible })
}

fn cmd_oracle(a: OracleArgs) -> Outcome {
    let inst = read_instance(&a.io.input)?;
    let limits = a.caps.limits();
    if let Some(path) = &a.target {
        let target = read_utilities(path)?;
        if target.len() != inst.n_agents() {
            return Err(Failure::usage("target length differs from the agent count"));
        }
        let found = find_allocation(&inst, &limits, |_| Some(target.clone()))?;
        let mut out = json!({ "achievable": found.is_some(), "target": utility_list(&target) });
        if let Some(alloc) = &found {
            out["allocation"] = allocation_value(alloc);
        }
        emit(a.io.output.as_deref(), &out)?;
        return Ok(if found.is_some() { ExitCode::Success } else { ExitCode::Infeasible });
    }
    let obj = a.objective.expect("clap requires an objective without a target");
    let tol = parse_rational_str(&a.tol).map_err(|e| Failure::usage(e.to_string()))?;
    if tol <= qi(0) {
        return Err(Failure::usage("--tol must be positive"));
    }
    let r = brute_force_optimal(&inst, obj, &limits)?;
    let mut out = json!({
        "utilities": utility_list(&r.utilities),
        "objective_value": objective_value(obj, &r.utilities),
        "allocation": allocation_value(&r.allocation),
        "assignments_examined": r.assignments_examined,
    });
    if let (Objective::PowerSum(p), false) = (obj, inst.divisible().is_empty()) {
        out["continuous_check"] = continuous_check(&inst, &r.allocation, &r.utilities, p, &tol)?;
    }
    emit(a.io.output.as_deref(), &out)?;
    Ok(ExitCode::Success)
}

/// Re-solves the divisible part of the optimum with conditional gradients,
/// keeping its indivisible assignment, and reports the gap and the largest
/// deviation from the exact utilities.
fn continuous_check(inst: &Instance, alloc: &Allocation, u: &UtilityVector, p: u32, tol: &Q) -> Result<Value, Failure> {
    let shift = kind_utilities(inst, alloc, GoodKind::Indivisible);
    let f = inst.f_c();
    let r = continuous_min(&f, &shift, p, tol, DEFAULT_MAX_ITERATIONS)?;
    let deviation = f
        .ground()
        .iter()
        .zip(&r.y)
        .map(|(&a, y)| (to_f64(&shift[a]) + y - to_f64(&u[a])).abs())
        .fold(0.0, f64::max);
    if deviation > 1e-3 {
        warn!("conditional-gradient check deviates by {deviation} from the exact optimum");
    }
    Ok(json!({ "gap": r.gap, "iterations": r.iterations, "max_deviation": deviation }))
}

fn cmd_gen(a: GenArgs) -> Outcome {
    let dm = || -> Result<_, Failure> {
        let path = a.input.as_ref().expect("clap requires --input for hardness generators");
        parse_3dm(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    };
    let inst = match a.kind {
        GenKind::Random => {
            if a.agents == 0 || a.agents > 63 {
                return Err(Failure::usage("--agents must be between 1 and 63"));
            }
            let spec = RandomSpec {
                agents: a.agents,
                indivisible: a.indivisible,
                divisible: a.divisible,
                identical_divisible: a.identical,
            };
            random_instance(&mut rng(a.seed), &spec)
        }
        GenKind::ThreeDm => {
            let dm = dm()?;
            if dm.triples().len() < dm.n() {
                warn!("fewer triples than elements per side: trivially no perfect matching");
            }
            gen_3dm_hardness(&dm)?
        }
        GenKind::Realization => {
            let (inst, target) = gen_realization_hardness(&dm()?)?;
            match &a.target_output {
                Some(p) => emit(Some(p), &json!({ "utilities": utility_list(&target) }))?,
                None => info!("no --target-output given; the target is not written"),
            }
            inst
        }
    };
    emit(a.output.as_deref(), &instance_value(&inst))?;
    Ok(ExitCode::Success)
}
