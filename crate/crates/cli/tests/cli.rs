use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aicsim::tools;
use aicsim::{StateVector, C64};
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn aicsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aicsim")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_ini(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, format!("[system]\n{body}")).unwrap();
    p
}

fn parse_dump(text: &str) -> StateVector {
    let amps = text
        .lines()
        .map(|l| {
            let mut it = l.split_whitespace().map(|t| t.parse::<f64>().unwrap());
            C64::new(it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    StateVector::from_amplitudes(amps).unwrap()
}

#[test]
fn figure_five_positional_form() {
    let raw = data("figure5_raw.txt");
    let out = aicsim(&["optimize", path_str(&raw), "4", "8", "10", "1", "1", "0", "0"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("CSQS")).count(), 1);
    assert!(text.lines().filter(|l| l.starts_with("SQS")).count() <= 5);

    let fused = stdout(&aicsim(&["optimize", path_str(&raw), "4", "8", "10", "1", "1", "4", "1"]));
    assert_eq!(fused.lines().filter(|l| l.starts_with("D4 ")).count(), 2);
}

#[test]
fn flag_form_equals_positional_form() {
    let raw = data("figure5_raw.txt");
    let a = aicsim(&["optimize", path_str(&raw), "4", "8", "10", "1", "1", "4", "1"]);
    let b = aicsim(&[
        "optimize",
        path_str(&raw),
        "--chunk",
        "4",
        "--rank-region",
        "8",
        "--qubits",
        "10",
        "--fusion-size",
        "4",
        "--fusion",
        "1",
    ]);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn figure_five_validates_and_simulates() {
    let dir = TempDir::new().unwrap();
    let raw = data("figure5_raw.txt");
    let prog = dir.path().join("prog.txt");
    let out = aicsim(&["optimize", path_str(&raw), "4", "8", "10", "1", "1", "0", "0", "-o", path_str(&prog)]);
    assert_eq!(code(&out), 0);

    let out = aicsim(&["validate", path_str(&raw), path_str(&prog), "-i", path_str(&data("figure5.ini"))]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "Passed all circuit order validations");

    let out = aicsim(&["simulate", "-i", path_str(&data("figure5.ini")), "-c", path_str(&prog), "--dump-state"]);
    assert_eq!(code(&out), 0);
    let state = parse_dump(&stdout(&out));
    let circuit = aicsim::circuit::parse_raw_circuit(&std::fs::read_to_string(&raw).unwrap(), 10).unwrap();
    let oracle = tools::oracle_simulate(&circuit, 0).unwrap();
    assert!(tools::fidelity(&state, &oracle).unwrap() > 1.0 - 1e-10);
    assert!(String::from_utf8_lossy(&out.stderr).contains("wall_time_s="));
}

#[test]
fn qft3_dump_is_uniform() {
    let dir = TempDir::new().unwrap();
    let raw = dir.path().join("qft3.txt");
    assert_eq!(code(&aicsim(&["gen", "qft", "--qubits", "3", "-o", path_str(&raw)])), 0);
    let ini = write_ini(&dir, "c.ini", "total_qbit=3\n");
    let out = aicsim(&["simulate", "-i", path_str(&ini), "-c", path_str(&raw), "--raw", "--dump-state"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 8);
    for line in text.lines() {
        assert!(line.starts_with("0.35355339"), "{line}");
        assert!(line.ends_with(" 0.0000000000000000"), "{line}");
    }
}

#[test]
fn multi_rank_dump_matches_single_rank() {
    let dir = TempDir::new().unwrap();
    let raw = dir.path().join("r.txt");
    aicsim(&["gen", "random", "--qubits", "8", "--gates", "60", "--seed", "3", "-o", path_str(&raw)]);
    let one = write_ini(&dir, "one.ini", "total_qbit=8\nchunk_qbit=3\n");
    let two = write_ini(&dir, "two.ini", "total_qbit=8\nrank_qbit=1\nchunk_qbit=3\n");
    let run = |ini: &Path| {
        let out = aicsim(&["simulate", "-i", path_str(ini), "-c", path_str(&raw), "--raw", "--dump-state"]);
        assert_eq!(code(&out), 0);
        parse_dump(&stdout(&out))
    };
    let (a, b) = (run(&one), run(&two));
    assert!(a.amps.iter().zip(&b.amps).all(|(x, y)| (x - y).norm() < 1e-12));
}

#[test]
fn corrupted_program_fails_validation() {
    let dir = TempDir::new().unwrap();
    let raw = dir.path().join("qft.txt");
    aicsim(&["gen", "qft", "--qubits", "4", "-o", path_str(&raw)]);
    let prog = dir.path().join("prog.txt");
    aicsim(&["optimize", path_str(&raw), "--chunk", "4", "--fusion", "0", "-o", path_str(&prog)]);
    let text = std::fs::read_to_string(&prog).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "H 0 0");
    lines.swap(1, 2);
    std::fs::write(&prog, lines.join("\n")).unwrap();
    let out = aicsim(&["validate", path_str(&raw), path_str(&prog)]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("first divergence"));
}

#[test]
fn identity_program_validates() {
    let dir = TempDir::new().unwrap();
    let raw = dir.path().join("bv.txt");
    aicsim(&["gen", "bv", "--qubits", "5", "--secret", "1011", "-o", path_str(&raw)]);
    let body = std::fs::read_to_string(&raw).unwrap();
    let prog = dir.path().join("prog.txt");
    std::fs::write(&prog, format!("{}\n{body}", body.lines().count())).unwrap();
    let out = aicsim(&["validate", path_str(&raw), path_str(&prog)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&aicsim(&["optimize", "/no/such/file.txt"])), 1);
    assert_eq!(code(&aicsim(&["gen", "ghz", "--qubits", "3"])), 1);
    assert_eq!(code(&aicsim(&["frobnicate"])), 1);
    assert_eq!(code(&aicsim(&["optimize", path_str(&data("figure5_raw.txt")), "--chunk", "9", "--rank-region", "8"])), 2);
    let bad = write_ini(&dir, "bad.ini", "total_qbit=4\nrank_qbit=4\n");
    assert_eq!(code(&aicsim(&["simulate", "-i", path_str(&bad), "-c", path_str(&data("figure5_raw.txt"))])), 2);
    let big = write_ini(&dir, "big.ini", "total_qbit=10\nrank_qbit=2\nchunk_qbit=4\nbuffer_qbit=1\n");
    let prog = dir.path().join("p.txt");
    aicsim(&["optimize", path_str(&data("figure5_raw.txt")), "4", "8", "10", "1", "1", "0", "0", "-o", path_str(&prog)]);
    assert_eq!(code(&aicsim(&["simulate", "-i", path_str(&big), "-c", path_str(&prog)])), 2);
}

#[test]
fn generated_line_counts() {
    let qft = stdout(&aicsim(&["gen", "qft", "--qubits", "31"]));
    assert_eq!(qft.lines().count(), 496);
    let qaoa = stdout(&aicsim(&["gen", "qaoa", "--qubits", "31", "--layers", "5", "--seed", "1"]));
    assert_eq!(qaoa.lines().count(), 2511);
    assert_eq!(stdout(&aicsim(&["gen", "qft", "--qubits", "1"])).trim(), "H 0 0");
    let cx = stdout(&aicsim(&["gen", "gate", "--qubits", "6", "--kind", "CX"]));
    assert_eq!(cx.lines().count(), 3);
}

fn bench_rows(extra: &[&str]) -> Vec<Vec<String>> {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("out.csv");
    let mut args = vec!["bench", "qft", "--qubits", "10", "-o", path_str(&csv_path)];
    args.extend_from_slice(extra);
    assert_eq!(code(&aicsim(&args)), 0);
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["name", "n_qubits", "ranks", "gates", "engine", "wall_time_s", "time_per_gate_s"]);
    reader.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn bench_csv_contract() {
    let rows = bench_rows(&["--repeats", "10", "--compare"]);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][4], "blockwise");
    assert_eq!(rows[1][4], "gate_by_gate");
    for row in &rows {
        let wall: f64 = row[5].parse().unwrap();
        let per_gate: f64 = row[6].parse().unwrap();
        let gates: f64 = row[3].parse().unwrap();
        assert!(wall >= 0.0);
        assert!((per_gate - wall / gates).abs() < 1e-9);
    }
    let single = bench_rows(&["--repeats", "1"]);
    assert_eq!(single.len(), 1);
    assert_eq!(single[0][3], rows[0][3]);
}

#[test]
fn pipeline_closure_for_every_family() {
    let dir = TempDir::new().unwrap();
    let families: [&[&str]; 5] = [
        &["qft"],
        &["qaoa", "--layers", "2", "--seed", "5"],
        &["bv", "--secret", "10110110101"],
        &["gate", "--kind", "RZZ"],
        &["random", "--gates", "80", "--seed", "9"],
    ];
    for family in families {
        let raw = dir.path().join("raw.txt");
        let prog = dir.path().join("prog.txt");
        let mut gen = vec!["gen"];
        gen.extend_from_slice(family);
        gen.extend_from_slice(&["--qubits", "12", "-o", path_str(&raw)]);
        assert_eq!(code(&aicsim(&gen)), 0);
        let out = aicsim(&["optimize", path_str(&raw), "5", "10", "12", "1", "1", "4", "1", "-o", path_str(&prog)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let ini = write_ini(&dir, "c.ini", "total_qbit=12\nrank_qbit=2\nchunk_qbit=5\nfusion_qbit=4\n");
        assert_eq!(code(&aicsim(&["validate", path_str(&raw), path_str(&prog), "-i", path_str(&ini)])), 0);
        let out = aicsim(&["simulate", "-i", path_str(&ini), "-c", path_str(&prog), "--dump-state"]);
        assert_eq!(code(&out), 0);
        let state = parse_dump(&stdout(&out));
        let text = std::fs::read_to_string(&raw).unwrap();
        let circuit = aicsim::circuit::parse_raw_circuit(&text, 12).unwrap();
        let oracle = tools::oracle_simulate(&circuit, 0).unwrap();
        assert!(tools::fidelity(&state, &oracle).unwrap() >= 1.0 - 1e-10, "{family:?}");
    }
}
