use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mbqc_core::compiler::{
    compile_with, depth_report_for, final_readout_distribution, schedule, schedule_two_layer, verify_against_circuit,
    CompileOptions, OneQubitLowering, Verdict,
};
use mbqc_core::gates::Circuit;
use mbqc_core::io::{
    from_json, matrix_from_json, query_from_json, to_json, CircuitJson, LadderJson, MatrixJson, PatternJson,
    QueryItemJson, SchemeJson,
};
use mbqc_core::laddersim::{sweep, FixedOrder, LadderSampler};
use mbqc_core::mbqc::{CompiledPattern, MeasurementPattern, RunMode};
use mbqc_core::pauli::{frame_resolve, OutcomeRecord};
use mbqc_core::qmath::{fidelity_up_to_phase, QubitState};
use mbqc_core::tqc::{teleport_branches, validate_operator_basis, validate_povm};
use mbqc_core::vbs::{verify_lemma3, Geometry};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

/// Largest number of measured sites enumerated exhaustively.
const MAX_EXHAUSTIVE_SITES: usize = 20;
/// Largest circuit width accepted by `verify`.
const MAX_VERIFY_QUBITS: usize = 12;

#[derive(Parser)]
#[command(name = "mbqc", version, about = "Compile gate arrays to measurement patterns, run and verify them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a circuit into a pattern, a schedule and a depth report.
    Compile {
        circuit: PathBuf,
        /// Use the two-layer schedule ({CX, Rx} or {CX, Rz} circuits only).
        #[arg(long)]
        two_layer: bool,
        #[arg(long, value_enum, default_value_t = Lowering::Native)]
        lowering: Lowering,
        /// Directory for pattern.json, schedule.json and report.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a compiled (or supplied) pattern against the circuit on every branch.
    Verify {
        circuit: PathBuf,
        /// Pattern to check instead of compiling the circuit.
        #[arg(long)]
        pattern: Option<PathBuf>,
        /// Seed for the random input state.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a pattern on |0…0⟩ and write outcomes as CSV.
    Sample {
        pattern: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1000)]
        shots: usize,
        #[arg(long, value_enum, default_value_t = Mode::Sample)]
        mode: Mode,
        /// Outcome bits in instruction order, for branch mode.
        #[arg(long)]
        outcomes: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Joint probability of a ladder query, or seeded samples along its lines.
    Ladder {
        spec: PathBuf,
        query: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        shots: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fidelity of the bond-projected state with the cluster state, e.g. `line:5` or `grid:2x3`.
    Lemma3 {
        geometry: String,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Check a teleportation scheme, and optionally its branches for a gate.
    TqcCheck {
        scheme: PathBuf,
        /// Gate matrix as nested [re, im] pairs.
        #[arg(long)]
        gate: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Lowering {
    Native,
    WChain,
    Euler,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Mode {
    Sample,
    Branch,
    Exhaustive,
}

enum Failure {
    /// Bad input; exit code 2.
    Input(String),
    /// Ran fine but the check did not pass; exit code 1.
    Check,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn input_err<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Input(msg.into()))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_circuit(path: &Path) -> Result<Circuit, Failure> {
    Ok(read_json::<CircuitJson>(path)?.into_circuit()?)
}

fn read_pattern(path: &Path) -> Result<MeasurementPattern, Failure> {
    Ok(read_json::<PatternJson>(path)?.into_pattern()?)
}

/// Prints to stdout, or writes the file when `out` is given.
fn emit(text: &str, out: Option<&Path>) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty<T: Serialize>(v: &T) -> Result<String, Failure> {
    Ok(to_json(v)? + "\n")
}

fn cmd_compile(circuit: &Path, two_layer: bool, lowering: Lowering, out: Option<&Path>) -> Outcome {
    let c = read_circuit(circuit)?;
    let (p, s) = if two_layer {
        if !matches!(lowering, Lowering::Native) {
            return input_err("--two-layer uses the native lowering");
        }
        schedule_two_layer(&c)?
    } else {
        let one_qubit = match lowering {
            Lowering::Native => OneQubitLowering::Native,
            Lowering::WChain => OneQubitLowering::WChain,
            Lowering::Euler => OneQubitLowering::Euler,
        };
        let p = compile_with(&c, &CompileOptions { one_qubit })?;
        let s = schedule(&p)?;
        (p, s)
    };
    let report = depth_report_for(&c, &p, &s);
    let pattern = pretty(&PatternJson::from_pattern(&p))?;
    let sched = pretty(&s)?;
    let rep = pretty(&report)?;
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("pattern.json"), pattern)?;
            fs::write(dir.join("schedule.json"), sched)?;
            fs::write(dir.join("report.json"), &rep)?;
            print!("{rep}");
        }
        None => {
            let bundle = json!({ "pattern": PatternJson::from_pattern(&p), "schedule": s, "report": report });
            print!("{}", pretty(&bundle)?);
        }
    }
    Ok(())
}

fn check_budget(p: &MeasurementPattern) -> Outcome {
    let m = p.num_measurements();
    if m > MAX_EXHAUSTIVE_SITES {
        return input_err(format!(
            "refusing exhaustive enumeration: {m} measured sites exceeds the budget of {MAX_EXHAUSTIVE_SITES}"
        ));
    }
    Ok(())
}

fn verdict_json(v: &Verdict, pass: bool, tol: f64) -> serde_json::Value {
    json!({
        "verdict": if pass { "PASS" } else { "FAIL" },
        "tolerance": tol,
        "branches": v.branches,
        "total_probability": v.total_probability,
        "max_infidelity": v.max_infidelity,
        "tv_distance": v.tv_distance,
        "max_uniformity_deviation": v.max_uniformity_deviation,
        "failures": v.failures,
    })
}

fn cmd_verify(circuit: &Path, pattern: Option<&Path>, seed: u64, tol: f64, out: Option<&Path>) -> Outcome {
    let c = read_circuit(circuit)?;
    if c.num_qubits > MAX_VERIFY_QUBITS {
        return input_err(format!("refusing: {} qubits exceeds the budget of {MAX_VERIFY_QUBITS}", c.num_qubits));
    }
    let p = match pattern {
        Some(path) => read_pattern(path)?,
        None => compile_with(&c, &CompileOptions::default())?,
    };
    if p.inputs.len() != c.num_qubits || p.outputs.len() != c.num_qubits {
        return input_err(format!(
            "pattern has {} inputs and {} outputs but the circuit has {} qubits",
            p.inputs.len(),
            p.outputs.len(),
            c.num_qubits
        ));
    }
    check_budget(&p)?;
    let psi = QubitState::random(c.num_qubits, &mut ChaCha8Rng::seed_from_u64(seed));
    let v = verify_against_circuit(&p, &c, &psi, tol)?;
    let pass = v.passes(tol);
    emit(&pretty(&verdict_json(&v, pass, tol))?, out)?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn bit_string(bits: impl IntoIterator<Item = u8>) -> String {
    bits.into_iter().map(|b| char::from(b'0' + b)).collect()
}

fn parse_bits(s: &str) -> Result<Vec<u8>, Failure> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => input_err(format!("outcome string {s:?} is not binary")),
        })
        .collect()
}

/// Samples a computational-basis index of `s`.
fn sample_index(s: &QubitState, rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let probs = s.probabilities();
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn cmd_sample(
    pattern: &Path,
    seed: Option<u64>,
    shots: usize,
    mode: Mode,
    outcomes: Option<&str>,
    out: Option<&Path>,
) -> Outcome {
    let p = read_pattern(pattern)?;
    let cp = CompiledPattern::new(&p)?;
    let input = QubitState::zero(p.inputs.len());
    let n_out = p.outputs.len();
    let mut w = csv::Writer::from_writer(Vec::new());
    match mode {
        Mode::Exhaustive => {
            check_budget(&p)?;
            let dist = final_readout_distribution(&p, &input)?;
            w.write_record(["output", "probability"])?;
            for (k, pr) in dist.iter().enumerate() {
                let bits = (0..n_out).map(|q| ((k >> (n_out - 1 - q)) & 1) as u8);
                w.write_record([bit_string(bits), format!("{pr:.12}")])?;
            }
        }
        Mode::Sample | Mode::Branch => {
            let Some(seed) = seed else {
                return input_err("--seed is required to sample");
            };
            let mut header = vec!["shot".to_string()];
            header.extend(p.instructions.iter().map(|i| format!("m{}", i.site.0)));
            header.extend(p.outputs.iter().map(|s| format!("out{}", s.0)));
            w.write_record(&header)?;
            let forced = match (mode, outcomes) {
                (Mode::Branch, Some(s)) => {
                    let bits = parse_bits(s)?;
                    if bits.len() != p.instructions.len() {
                        return input_err(format!(
                            "{} outcome bits for {} measurements",
                            bits.len(),
                            p.instructions.len()
                        ));
                    }
                    Some(OutcomeRecord::from_pairs(p.instructions.iter().map(|i| i.id).zip(bits))?)
                }
                (Mode::Branch, None) => return input_err("branch mode needs --outcomes"),
                _ => None,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for shot in 0..shots {
                let run_mode = match &forced {
                    Some(rec) => RunMode::Branch(rec.clone()),
                    None => RunMode::Sample(rng.next_u64()),
                };
                let res = cp.run(&input, &run_mode)?;
                let flips = frame_resolve(&res.frame, &res.outcomes)?;
                let k = sample_index(&res.output, &mut rng);
                let corrected = (0..n_out).map(|q| ((k >> (n_out - 1 - q)) & 1) as u8 ^ u8::from(flips.x_bits()[q]));
                let mut row = vec![shot.to_string()];
                for ins in &p.instructions {
                    row.push(res.outcomes.value(ins.id)?.to_string());
                }
                row.extend(corrected.map(|b| b.to_string()));
                w.write_record(&row)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Failure::Input(e.to_string()))?;
    emit(&String::from_utf8(bytes)?, out)
}

fn cmd_ladder(spec: &Path, query: &Path, seed: Option<u64>, shots: Option<usize>, out: Option<&Path>) -> Outcome {
    let spec = read_json::<LadderJson>(spec)?.into_spec()?;
    let items: Vec<QueryItemJson> = read_json(query)?;
    let q = query_from_json(&items)?;
    match shots {
        None => {
            let rep = sweep(&spec, &q)?;
            let body = json!({ "probability": rep.probability, "max_lines": rep.max_lines, "steps": rep.steps });
            emit(&pretty(&body)?, out)
        }
        Some(shots) => {
            let Some(seed) = seed else {
                return input_err("--seed is required to sample");
            };
            // lines in the order they appear in the query file; recorded outcomes are ignored
            let order: Vec<_> = items
                .iter()
                .map(|i| q.items().iter().find(|x| x.line == i.line).map(|x| (x.line, x.basis)).expect("same query"))
                .collect();
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["shot".to_string()];
            header.extend(order.iter().map(|(l, _)| format!("l{l}")));
            w.write_record(&header)?;
            let mut sampler = LadderSampler::new(&spec);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut strategy = FixedOrder(order);
            for shot in 0..shots {
                let s = sampler.sample(&mut strategy, &mut rng)?;
                let mut row = vec![shot.to_string()];
                row.extend(s.history.iter().map(|i| i.outcome.to_string()));
                w.write_record(&row)?;
            }
            let bytes = w.into_inner().map_err(|e| Failure::Input(e.to_string()))?;
            emit(&String::from_utf8(bytes)?, out)
        }
    }
}

fn parse_geometry(s: &str) -> Result<Geometry, Failure> {
    let bad = || Failure::Input(format!("geometry {s:?} is not line:N or grid:RxC"));
    let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
    match kind {
        "line" => Ok(Geometry::Line(rest.parse().map_err(|_| bad())?)),
        "grid" => {
            let (r, c) = rest.split_once('x').ok_or_else(bad)?;
            Ok(Geometry::Grid(r.parse().map_err(|_| bad())?, c.parse().map_err(|_| bad())?))
        }
        _ => Err(bad()),
    }
}

fn cmd_lemma3(geometry: &str, tol: f64) -> Outcome {
    let f = verify_lemma3(parse_geometry(geometry)?)?;
    let pass = 1.0 - f <= tol;
    print!(
        "{}",
        pretty(&json!({ "geometry": geometry, "fidelity": f, "verdict": if pass { "PASS" } else { "FAIL" } }))?
    );
    if pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn cmd_tqc_check(scheme: &Path, gate: Option<&Path>, seed: u64, tol: f64) -> Outcome {
    let s = read_json::<SchemeJson>(scheme)?.into_scheme()?;
    let d = s.dim();
    let complete = validate_povm(&s);
    let basis = if s.ops.len() == d * d { Some(validate_operator_basis(&s.ops)?) } else { None };
    let mut report = json!({
        "d": d,
        "outcomes": s.ops.len(),
        "projective": s.is_projective(),
        "operator_basis": basis,
        "complete": complete,
    });
    let mut pass = complete;
    if let Some(path) = gate {
        let u = matrix_from_json(&read_json::<MatrixJson>(path)?)?;
        if !d.is_power_of_two() {
            return input_err(format!("dimension {d} is not a power of two"));
        }
        let psi = QubitState::random(d.trailing_zeros() as usize, &mut ChaCha8Rng::seed_from_u64(seed));
        let ideal = psi.apply_unitary(&u, &(0..psi.num_qubits()).collect::<Vec<_>>())?;
        let mut total = 0.0;
        let mut worst: f64 = 0.0;
        for b in teleport_branches(&s, &u, &psi)? {
            total += b.probability;
            let want = ideal.apply_unitary(&b.residual.matrix(), &(0..psi.num_qubits()).collect::<Vec<_>>())?;
            worst = worst.max(1.0 - fidelity_up_to_phase(&b.output, &want)?);
        }
        pass &= worst <= tol && (total - 1.0).abs() <= tol;
        report["total_probability"] = json!(total);
        report["max_infidelity"] = json!(worst);
    }
    report["verdict"] = json!(if pass { "PASS" } else { "FAIL" });
    print!("{}", pretty(&report)?);
    if pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Compile { circuit, two_layer, lowering, out } => {
            cmd_compile(&circuit, two_layer, lowering, out.as_deref())
        }
        Command::Verify { circuit, pattern, seed, tolerance, out } => {
            cmd_verify(&circuit, pattern.as_deref(), seed, tolerance, out.as_deref())
        }
        Command::Sample { pattern, seed, shots, mode, outcomes, out } => {
            cmd_sample(&pattern, seed, shots, mode, outcomes.as_deref(), out.as_deref())
        }
        Command::Ladder { spec, query, seed, shots, out } => cmd_ladder(&spec, &query, seed, shots, out.as_deref()),
        Command::Lemma3 { geometry, tolerance } => cmd_lemma3(&geometry, tolerance),
        Command::TqcCheck { scheme, gate, seed, tolerance } => cmd_tqc_check(&scheme, gate.as_deref(), seed, tolerance),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
