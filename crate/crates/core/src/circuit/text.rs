//! Line-oriented text formats for raw circuits and optimized programs.
//!
//! A gate line reads `KIND [control] targets id params...`. Fused gates carry
//! their payload as interleaved real/imaginary numbers followed by an optional
//! `ids=a,b,c` annotation listing the original gates they replace.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::{Circuit, Config, GateBlock, Program, ProgramItem, QubitLayout, SwapKind, SwapOp};
use crate::error::{Error, Result};
use crate::gates::{Gate, GateKind, Payload};
use crate::C64;

/// Formats a float with 17 significant digits, trimming trailing zeros.
///
/// ```
/// assert_eq!(aicsim::circuit::fmt_f64(0.5), "0.5");
/// assert_eq!(aicsim::circuit::fmt_f64(0.0), "0");
/// let x = 0.1f64 + 0.2;
/// assert_eq!(aicsim::circuit::fmt_f64(x).parse::<f64>().unwrap(), x);
/// ```
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    if !(-6..=20).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        let sign = if negative { "-" } else { "" };
        return if tail.is_empty() { format!("{sign}{head}e{exp}") } else { format!("{sign}{head}.{tail}e{exp}") };
    }
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(digits);
    } else {
        let int_len = exp as usize + 1;
        if digits.len() <= int_len {
            out.push_str(digits);
            out.extend(std::iter::repeat_n('0', int_len - digits.len()));
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    }
    out
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse().map_err(|_| Error::parse(line, format!("expected {what}, got {tok:?}")))
}

fn parse_num(tok: &str, line: usize) -> Result<f64> {
    tok.parse().map_err(|_| Error::parse(line, format!("expected a number, got {tok:?}")))
}

/// Parses one gate line; `n_qubits` bounds the qubit indices.
fn parse_gate_line(line: &str, line_no: usize, n_qubits: usize) -> Result<Gate> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    let name = toks[0];
    let kind = GateKind::from_name(name)
        .ok_or_else(|| Error::parse(line_no, format!("unsupported gate kind {name:?}")))?;
    let arity = kind.arity();
    if toks.len() < 2 + arity {
        return Err(Error::parse(
            line_no,
            format!("{kind} needs {arity} qubit field(s) and an id, got {} field(s)", toks.len() - 1),
        ));
    }
    let mut qubits = Vec::with_capacity(arity);
    for tok in &toks[1..=arity] {
        let q = parse_usize(tok, line_no, "a qubit index")?;
        if q >= n_qubits {
            return Err(Error::parse(line_no, format!("qubit {q} out of range for {n_qubits} qubits")));
        }
        qubits.push(q);
    }
    let id = parse_usize(toks[arity + 1], line_no, "a gate id")? as u64;
    let rest = &toks[arity + 2..];
    let malformed = |e: Error| Error::parse(line_no, e.to_string());

    if kind.is_fused() {
        let (numbers, ids) = match rest.last() {
            Some(last) if last.starts_with("ids=") => (&rest[..rest.len() - 1], Some(*last)),
            _ => (rest, None),
        };
        let values = numbers.iter().map(|t| parse_num(t, line_no)).collect::<Result<Vec<f64>>>()?;
        let expected = match kind {
            GateKind::Diag(k) => 2 << k,
            GateKind::Unitary(k) => 2 << (2 * k),
            _ => unreachable!(),
        };
        if values.len() != expected {
            return Err(Error::parse(line_no, format!("{kind} needs {expected} payload numbers, got {}", values.len())));
        }
        let entries: Vec<C64> = values.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
        let constituents = match ids {
            Some(list) => list["ids=".len()..]
                .split(',')
                .map(|t| parse_usize(t, line_no, "a constituent id").map(|v| v as u64))
                .collect::<Result<Vec<u64>>>()?,
            None => vec![id],
        };
        let mut gate = match kind {
            GateKind::Diag(_) => Gate::fused_diagonal(qubits, entries, constituents),
            _ => Gate::fused_unitary(qubits, entries, constituents),
        }
        .map_err(malformed)?;
        gate.id = id;
        return Ok(gate);
    }

    let wanted = kind.num_params();
    if rest.len() > wanted {
        return Err(Error::parse(line_no, format!("{kind} takes {wanted} parameter(s), got {}", rest.len())));
    }
    let mut params = rest.iter().map(|t| parse_num(t, line_no)).collect::<Result<Vec<f64>>>()?;
    if params.len() < wanted {
        log::warn!("line {line_no}: {kind} is missing angle parameters, defaulting to 0");
        params.resize(wanted, 0.0);
    }
    let (targets, controls) = if kind.num_controls() > 0 {
        let c = kind.num_controls();
        (qubits[c..].to_vec(), qubits[..c].to_vec())
    } else {
        (qubits, Vec::new())
    };
    Gate::new(kind, targets, controls, params, id).map_err(malformed)
}

/// Parses a raw circuit: one gate per nonempty line.
pub fn parse_raw_circuit(text: &str, n_qubits: usize) -> Result<Circuit> {
    let mut gates = Vec::new();
    let mut ids = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let gate = parse_gate_line(line, idx + 1, n_qubits)?;
        for id in gate.source_ids() {
            if !ids.insert(id) {
                return Err(Error::parse(idx + 1, format!("duplicate gate id {id}")));
            }
        }
        gates.push(gate);
    }
    Ok(Circuit { n_qubits, gates })
}

fn parse_swap_line(line: &str, line_no: usize) -> Result<SwapOp> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    let kind = match toks[0] {
        "SQS" => SwapKind::InMemory,
        "CSQS" => SwapKind::CrossRank,
        other => return Err(Error::parse(line_no, format!("expected SQS or CSQS, got {other:?}"))),
    };
    let s = toks.get(1).ok_or_else(|| Error::parse(line_no, "swap line is missing its pair count"))?;
    let s = parse_usize(s, line_no, "a pair count")?;
    if toks.len() != 2 + 2 * s {
        return Err(Error::parse(line_no, format!("{} with {s} pair(s) needs {} positions", toks[0], 2 * s)));
    }
    let pos = toks[2..].iter().map(|t| parse_usize(t, line_no, "a qubit position")).collect::<Result<Vec<_>>>()?;
    let pairs = (0..s).map(|i| (pos[i], pos[s + i])).collect();
    Ok(SwapOp::new(kind, pairs))
}

fn is_swap_line(line: &str) -> bool {
    matches!(line.split_whitespace().next(), Some("SQS" | "CSQS"))
}

/// Parses an optimized program and checks its invariants against `config`.
pub fn parse_program(text: &str, config: &Config) -> Result<Program> {
    let n = config.n_qubits;
    let lines: Vec<(usize, &str)> =
        text.lines().enumerate().map(|(i, l)| (i + 1, strip_comment(l))).filter(|(_, l)| !l.is_empty()).collect();
    let mut items = Vec::new();
    let mut layout = QubitLayout::identity(n);
    let mut ids = HashSet::new();
    let mut push_swap = |op: SwapOp, line_no: usize, items: &mut Vec<ProgramItem>| -> Result<()> {
        op.validate(n, config.rank_qubits).map_err(|e| Error::parse(line_no, e.to_string()))?;
        layout.apply_swap(&op);
        items.push(ProgramItem::Swap(op));
        Ok(())
    };
    let mut i = 0;
    while i < lines.len() {
        let (line_no, line) = lines[i];
        i += 1;
        if is_swap_line(line) {
            push_swap(parse_swap_line(line, line_no)?, line_no, &mut items)?;
            continue;
        }
        let k = parse_usize(line, line_no, "a block size header")?;
        if i + k > lines.len() {
            return Err(Error::parse(line_no, format!("block header announces {k} lines, only {} remain", lines.len() - i)));
        }
        let mut gates = Vec::with_capacity(k);
        for &(gate_no, gate_line) in &lines[i..i + k] {
            if is_swap_line(gate_line) {
                if !gates.is_empty() {
                    items.push(ProgramItem::Block(GateBlock::new(std::mem::take(&mut gates))));
                }
                push_swap(parse_swap_line(gate_line, gate_no)?, gate_no, &mut items)?;
                continue;
            }
            let gate = parse_gate_line(gate_line, gate_no, n)?;
            if gate.max_qubit() >= config.chunk_qubits {
                return Err(Error::parse(
                    gate_no,
                    format!("gate {} leaves the {}-qubit chunk", gate.id, config.chunk_qubits),
                ));
            }
            for id in gate.source_ids() {
                if !ids.insert(id) {
                    return Err(Error::parse(gate_no, format!("gate id {id} appears twice")));
                }
            }
            gates.push(gate);
        }
        if !gates.is_empty() {
            items.push(ProgramItem::Block(GateBlock::new(gates)));
        }
        i += k;
    }
    let program = Program {
        n_qubits: n,
        rank_qubits: config.rank_qubits,
        chunk_qubits: config.chunk_qubits,
        items,
        final_layout: layout,
    };
    program.validate()?;
    Ok(program)
}

/// Serializes one gate as a single line without trailing newline.
pub fn serialize_gate(gate: &Gate) -> String {
    let mut s = gate.kind.name();
    for q in gate.controls.iter().chain(&gate.targets) {
        let _ = write!(s, " {q}");
    }
    let _ = write!(s, " {}", gate.id);
    for p in &gate.params {
        let _ = write!(s, " {}", fmt_f64(*p));
    }
    if let Some(payload) = &gate.payload {
        let entries = match payload {
            Payload::Diagonal(d) => d,
            Payload::Matrix(m) => m,
        };
        for c in entries {
            let _ = write!(s, " {} {}", fmt_f64(c.re), fmt_f64(c.im));
        }
        let ids: Vec<String> = gate.constituents.iter().map(u64::to_string).collect();
        let _ = write!(s, " ids={}", ids.join(","));
    }
    s
}

pub fn serialize_circuit(circuit: &Circuit) -> String {
    let mut out = String::new();
    for g in &circuit.gates {
        out.push_str(&serialize_gate(g));
        out.push('\n');
    }
    out
}

fn serialize_swap(op: &SwapOp) -> String {
    let mut s = format!("{} {}", op.kind.keyword(), op.pairs.len());
    for &(a, _) in &op.pairs {
        let _ = write!(s, " {a}");
    }
    for &(_, b) in &op.pairs {
        let _ = write!(s, " {b}");
    }
    s
}

/// Serializes a program; every item is preceded by its line count.
pub fn serialize_program(program: &Program) -> String {
    let mut out = String::new();
    for item in &program.items {
        match item {
            ProgramItem::Block(b) => {
                let _ = writeln!(out, "{}", b.len());
                for g in &b.gates {
                    out.push_str(&serialize_gate(g));
                    out.push('\n');
                }
            }
            ProgramItem::Swap(op) => {
                let _ = writeln!(out, "1\n{}", serialize_swap(op));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIG5_OPTIMIZED: &str = "3 # Gate Block Size
H 0 0
H 1 1
H 3 6
1
SQS 3 0 1 3 4 5 7
4
RZZ 0 2 2
RZZ 1 3 3
RZZ 0 3 9
H 1 13
1
SQS 3 0 1 3 4 6 7
3
H 1 7
RZZ 1 3 12
RZZ 0 2 8
1
SQS 2 0 2 6 7
1
CSQS 2 6 7 8 9
1
SQS 2 0 2 6 7
1
SQS 1 3 5
4
H 2 5
H 2 10
H 0 4
RZZ 0 3 11
";

    fn fig5_config() -> Config {
        Config::with_ranks(10, 2).with_chunk_qubits(4)
    }

    #[test]
    fn raw_lines() {
        let c = parse_raw_circuit("H 0 0\n\n# comment\nRZZ 2 4 2 0.5\nCX 1 0 3\n", 5).unwrap();
        assert_eq!(c.gates[0], Gate::h(0, 0));
        assert_eq!(c.gates[1], Gate::rzz(2, 4, 0.5, 2).unwrap());
        assert_eq!(c.gates[2], Gate::cx(1, 0, 3).unwrap());
    }

    #[test]
    fn raw_errors() {
        assert!(matches!(parse_raw_circuit("H", 2), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_raw_circuit("H 0 0\nFOO 1 1", 2), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_raw_circuit("H 2 0", 2), Err(Error::Parse { .. })));
        assert!(matches!(parse_raw_circuit("H 0 0\nH 1 0", 2), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_raw_circuit("RZ 0 0 1 2", 2), Err(Error::Parse { .. })));
    }

    #[test]
    fn missing_angle_defaults_to_zero() {
        let c = parse_raw_circuit("RZZ 2 4 2", 5).unwrap();
        assert_eq!(c.gates[0].params, vec![0.0]);
    }

    #[test]
    fn figure_five_listing_parses() {
        let p = parse_program(FIG5_OPTIMIZED, &fig5_config()).unwrap();
        assert_eq!(p.block_count(), 4);
        assert_eq!(p.swap_count(SwapKind::InMemory), 5);
        assert_eq!(p.swap_count(SwapKind::CrossRank), 1);
        assert_eq!(p.gate_count(), 14);
        let first = p.swaps().next().unwrap();
        assert_eq!(first.pairs, vec![(0, 4), (1, 5), (3, 7)]);
    }

    #[test]
    fn figure_five_round_trip() {
        let cfg = fig5_config();
        let p = parse_program(FIG5_OPTIMIZED, &cfg).unwrap();
        let text = serialize_program(&p);
        // the listing omits RZZ angles, which are read as 0 and written explicitly
        let normalize = |s: &str| {
            s.lines()
                .map(strip_comment)
                .map(|l| if l.starts_with("RZZ") && l.split_whitespace().count() == 4 { format!("{l} 0") } else { l.to_string() })
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(normalize(&text), normalize(FIG5_OPTIMIZED));
        assert_eq!(parse_program(&text, &cfg).unwrap(), p);
    }

    #[test]
    fn single_gate_program() {
        let cfg = Config::new(1);
        let p = parse_program("1\nH 0 0", &cfg).unwrap();
        assert_eq!(p.block_count(), 1);
        assert_eq!(p.swaps().count(), 0);
        assert_eq!(serialize_program(&p), "1\nH 0 0\n");
    }

    #[test]
    fn program_errors() {
        let cfg = Config::new(4);
        assert!(parse_program("SQS 2 0 1 1 2", &cfg).is_err());
        assert!(parse_program("SQS 2 0 1 2", &cfg).is_err());
        assert!(parse_program("3\nH 0 0\nH 1 1", &cfg).is_err());
        assert!(parse_program("2\nH 0 0\nH 1 0", &cfg).is_err());
        let small = Config::new(4).with_chunk_qubits(2);
        assert!(parse_program("1\nH 3 0", &small).is_err());
    }

    #[test]
    fn fused_lines_round_trip() {
        let d: Vec<C64> = (0..16).map(|k| C64::from_polar(1.0, 0.1 * k as f64)).collect();
        let g = Gate::fused_diagonal(vec![0, 1, 2, 3], d, vec![3, 2, 9]).unwrap();
        let line = serialize_gate(&g);
        assert!(line.starts_with("D4 0 1 2 3 "));
        assert_eq!(line.split_whitespace().count(), 1 + 4 + 1 + 32 + 1);
        assert!(line.ends_with(" ids=2,3,9"));
        let back = parse_raw_circuit(&line, 4).unwrap();
        assert_eq!(back.gates[0], g);

        let m: Vec<C64> = (0..16).map(|k| C64::new(k as f64 * 0.25, -1.0 / (k as f64 + 3.0))).collect();
        let u = Gate::fused_unitary(vec![1, 2], m, vec![4]).unwrap();
        assert_eq!(parse_raw_circuit(&serialize_gate(&u), 3).unwrap().gates[0], u);
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64("0.75390225434330471".parse().unwrap()), "0.75390225434330471");
        assert_eq!(fmt_f64(-2.0), "-2");
        assert_eq!(fmt_f64(1e-9), "1.0000000000000001e-9");
        assert!(fmt_f64(2.5e-30).ends_with("e-30"));
        assert_eq!(fmt_f64(2f64.powi(-40)), "9.0949470177292824e-13");
        assert_eq!(fmt_f64(123.25), "123.25");
        for x in [std::f64::consts::PI, -1.0 / 3.0, 6.02e23, 1e-300, 0.001] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn float_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
                prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
            }

            #[test]
            fn raw_round_trip(spec in proptest::collection::vec((0usize..10, 0usize..6, 0usize..6, -7.0f64..7.0), 0..30)) {
                let mut gates = Vec::new();
                for (i, (k, a, b, t)) in spec.into_iter().enumerate() {
                    let kind = GateKind::STANDARD[k];
                    let b = if a == b { (b + 1) % 6 } else { b };
                    let params = vec![t; kind.num_params()];
                    let g = match kind.arity() {
                        1 => Gate::new(kind, vec![a], vec![], params, i as u64),
                        _ if kind.num_controls() == 1 => Gate::new(kind, vec![b], vec![a], params, i as u64),
                        _ => Gate::new(kind, vec![a, b], vec![], params, i as u64),
                    };
                    gates.push(g.unwrap());
                }
                let c = Circuit::new(6, gates).unwrap();
                prop_assert_eq!(parse_raw_circuit(&serialize_circuit(&c), 6).unwrap(), c);
            }
        }
    }
}
