use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use aicsim::circuit::{parse_config, parse_program, parse_raw_circuit, serialize_circuit, serialize_program, MAX_QUBITS};
use aicsim::engine::Engine;
use aicsim::optimizer::aio_optimize;
use aicsim::tools::{self, ORACLE_MAX_QUBITS};
use aicsim::{distributed, Circuit, Config, GateKind};
use log::info;

use crate::error::{CliError, CliResult, EXIT_PARSE, EXIT_VALIDATION};
use crate::{BenchArgs, FamilyArgs, GenArgs, OptimizeArgs, SimulateArgs, ValidateArgs};

/// Message printed when a program passes order validation.
pub const PASS_MESSAGE: &str = "Passed all circuit order validations";

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::new(EXIT_PARSE, format!("stdout: {e}"))),
    }
}

/// Reads a raw circuit, sizing it to `qubits` or to its highest qubit.
fn read_raw(path: &Path, qubits: Option<usize>) -> CliResult<Circuit> {
    let text = read(path)?;
    let mut circuit = parse_raw_circuit(&text, qubits.unwrap_or(MAX_QUBITS))?;
    if qubits.is_none() {
        circuit.n_qubits = circuit.gates.iter().map(|g| g.max_qubit() + 1).max().unwrap_or(1);
    }
    Ok(circuit)
}

fn flag(value: usize, name: &str) -> CliResult<bool> {
    match value {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(CliError::new(EXIT_PARSE, format!("{name} must be 0 or 1, got {value}"))),
    }
}

fn split_ranks(n: usize, rank_region: Option<usize>) -> CliResult<usize> {
    match rank_region {
        Some(local) if local > n => Err(CliError::config(format!("rank region {local} exceeds {n} qubits"))),
        Some(local) => Ok(n - local),
        None => Ok(0),
    }
}

fn optimize_config(args: &OptimizeArgs, inferred: usize) -> CliResult<Config> {
    let pos = &args.positional;
    if pos.len() > 7 {
        return Err(CliError::new(EXIT_PARSE, format!("expected at most 7 positional values, got {}", pos.len())));
    }
    let at = |i: usize| pos.get(i).copied();
    let n = args.qubits.or(at(2)).unwrap_or(inferred);
    let r = split_ranks(n, args.rank_region.or(at(1)))?;
    let mut config = Config::with_ranks(n, r);
    if let Some(c) = args.chunk.or(at(0)) {
        config = config.with_chunk_qubits(c);
    }
    if let Some(b) = args.buffer {
        config.buffer_qubits = b;
    }
    if let Some(v) = args.ims.map(usize::from).or(at(3)) {
        config.ims_enabled = flag(v, "ims")?;
    }
    if let Some(v) = args.xrs.map(usize::from).or(at(4)) {
        config.xrs_enabled = flag(v, "xrs")?;
    }
    if let Some(f) = args.fusion_size.or(at(5)) {
        config.fusion_qubits = f;
    }
    if let Some(v) = args.fusion.map(usize::from).or(at(6)) {
        let on = flag(v, "fusion")?;
        config = config.with_fusion(on, on);
    }
    config.validate()?;
    Ok(config)
}

pub fn optimize(args: &OptimizeArgs) -> CliResult<()> {
    let circuit = read_raw(&args.raw, None)?;
    let config = optimize_config(args, circuit.n_qubits)?;
    let circuit = Circuit { n_qubits: config.n_qubits.max(circuit.n_qubits), ..circuit };
    let start = Instant::now();
    let program = aio_optimize(&circuit, &config)?;
    info!(
        "{} gates into {} blocks in {:.3} s",
        circuit.len(),
        program.block_count(),
        start.elapsed().as_secs_f64()
    );
    write_output(args.output.as_deref(), &serialize_program(&program))
}

fn engine(threads: Option<usize>) -> CliResult<Engine> {
    Ok(match threads {
        Some(t) => Engine::with_threads(t)?,
        None => Engine::from_env()?,
    })
}

fn format_amplitude(a: aicsim::C64) -> String {
    format!("{:.16} {:.16}", a.re + 0.0, a.im + 0.0)
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let config = parse_config(&read(&args.config)?).map_err(|e| CliError::config(e.to_string()))?;
    config.validate()?;
    if args.dump_state && config.n_qubits > ORACLE_MAX_QUBITS {
        return Err(CliError::config(format!("--dump-state supports at most {ORACLE_MAX_QUBITS} qubits")));
    }
    let text = read(&args.circuit)?;
    let program = if args.raw {
        aio_optimize(&parse_raw_circuit(&text, config.n_qubits)?, &config)?
    } else {
        parse_program(&text, &config)?
    };
    let engine = engine(args.threads)?;
    let start = Instant::now();
    let (state, layout) = distributed::simulate(&engine, &config, &program, 0)?;
    let elapsed = start.elapsed().as_secs_f64();
    eprintln!("wall_time_s={elapsed:.6}");
    if args.dump_state {
        let state = tools::layout_apply(&state, &layout);
        let lines: String = state.amps.iter().map(|&a| format_amplitude(a) + "\n").collect();
        write_output(None, &lines)?;
    }
    Ok(())
}

fn validate_config(args: &ValidateArgs, inferred: usize) -> CliResult<Config> {
    let mut config = match &args.config {
        Some(path) => parse_config(&read(path)?).map_err(|e| CliError::config(e.to_string()))?,
        None => {
            let n = args.qubits.unwrap_or(inferred);
            Config::with_ranks(n, split_ranks(n, args.rank_region)?)
        }
    };
    config.chunk_qubits = config.local_qubits();
    config.validate()?;
    Ok(config)
}

pub fn validate(args: &ValidateArgs) -> CliResult<()> {
    let inferred = read_raw(&args.raw, None)?.n_qubits;
    let config = validate_config(args, inferred)?;
    let raw = read_raw(&args.raw, Some(config.n_qubits))?;
    let program = parse_program(&read(&args.program)?, &config).map_err(|e| match e {
        aicsim::Error::Parse { .. } => CliError::from(e),
        other => CliError::new(EXIT_VALIDATION, other.to_string()),
    })?;
    let report = tools::validate_order(&raw, &program);
    if report.pass {
        println!("{PASS_MESSAGE}");
        return Ok(());
    }
    let detail = match report.first_divergence {
        Some((id, q)) => format!("first divergence at gate {id} on qubit {q}: {}", report.message),
        None => report.message,
    };
    Err(CliError::new(EXIT_VALIDATION, detail))
}

fn build_family(args: &FamilyArgs) -> CliResult<Circuit> {
    let n = args.qubits;
    if n == 0 || n > MAX_QUBITS {
        return Err(CliError::config(format!("--qubits must be in 1..={MAX_QUBITS}, got {n}")));
    }
    let circuit = match args.family.as_str() {
        "qft" => tools::gen_qft(n),
        "qaoa" => tools::gen_qaoa(n, args.layers, args.seed),
        "bv" => {
            let secret = match &args.secret {
                Some(s) => tools::parse_secret(s)?,
                None => vec![true; n.saturating_sub(1)],
            };
            tools::gen_bv(n, &secret)?
        }
        "gate" => {
            let name = args.kind.as_deref().unwrap_or("H");
            let kind = GateKind::from_name(&name.to_ascii_uppercase())
                .ok_or_else(|| CliError::new(EXIT_PARSE, format!("unknown gate kind {name:?}")))?;
            tools::gen_gate_bench(kind, n)?
        }
        "random" => tools::gen_random(n, args.gates, args.seed)?,
        other => {
            return Err(CliError::new(
                EXIT_PARSE,
                format!("unknown circuit family {other:?}; expected qft, qaoa, bv, gate or random"),
            ))
        }
    };
    Ok(circuit)
}

pub fn generate(args: &GenArgs) -> CliResult<()> {
    let circuit = build_family(&args.family)?;
    info!("generated {} gates on {} qubits", circuit.len(), circuit.n_qubits);
    write_output(args.output.as_deref(), &serialize_circuit(&circuit))
}

/// One CSV row of benchmark output.
struct BenchRecord {
    name: String,
    n_qubits: usize,
    ranks: usize,
    gates: usize,
    engine: &'static str,
    wall_time_s: f64,
}

impl BenchRecord {
    fn fields(&self) -> [String; 7] {
        let per_gate = if self.gates == 0 { 0.0 } else { self.wall_time_s / self.gates as f64 };
        [
            self.name.clone(),
            self.n_qubits.to_string(),
            self.ranks.to_string(),
            self.gates.to_string(),
            self.engine.to_string(),
            format!("{:.9}", self.wall_time_s),
            format!("{per_gate:.12}"),
        ]
    }
}

const BENCH_HEADER: [&str; 7] = ["name", "n_qubits", "ranks", "gates", "engine", "wall_time_s", "time_per_gate_s"];

fn mean_time(repeats: usize, mut run: impl FnMut() -> CliResult<()>) -> CliResult<f64> {
    let mut total = 0.0;
    for _ in 0..repeats {
        let start = Instant::now();
        run()?;
        total += start.elapsed().as_secs_f64();
    }
    Ok(total / repeats as f64)
}

pub fn bench(args: &BenchArgs) -> CliResult<()> {
    if args.repeats == 0 {
        return Err(CliError::config("--repeats must be at least 1"));
    }
    let circuit = build_family(&args.family)?;
    let n = circuit.n_qubits;
    let mut config = Config::with_ranks(n, split_ranks(n, args.rank_region)?);
    if let Some(c) = args.chunk {
        config = config.with_chunk_qubits(c);
    }
    config = config.with_fusion(args.fusion == 1, args.diagonal_fusion == 1);
    if let Some(f) = args.fusion_size {
        config.fusion_qubits = f;
    }
    config.validate()?;
    let engine = engine(args.threads)?;
    let program = aio_optimize(&circuit, &config)?;
    let name = format!("{}{}", args.family.family, n);

    let mut records = Vec::new();
    let blockwise = mean_time(args.repeats, || {
        distributed::simulate(&engine, &config, &program, 0)?;
        Ok(())
    })?;
    records.push(BenchRecord {
        name: name.clone(),
        n_qubits: n,
        ranks: config.num_ranks(),
        gates: circuit.len(),
        engine: "blockwise",
        wall_time_s: blockwise,
    });
    if args.compare {
        let gate_by_gate = mean_time(args.repeats, || {
            engine.simulate_gate_by_gate(&circuit, 0)?;
            Ok(())
        })?;
        info!("blockwise speedup {:.2}x", gate_by_gate / blockwise);
        records.push(BenchRecord {
            name,
            n_qubits: n,
            ranks: 1,
            gates: circuit.len(),
            engine: "gate_by_gate",
            wall_time_s: gate_by_gate,
        });
    }

    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::new(EXIT_PARSE, format!("csv: {e}"));
    writer.write_record(BENCH_HEADER).map_err(csv_err)?;
    for r in &records {
        writer.write_record(r.fields()).map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::new(EXIT_PARSE, format!("csv: {e}")))?;
    write_output(args.output.as_deref(), &String::from_utf8_lossy(&bytes))
}
