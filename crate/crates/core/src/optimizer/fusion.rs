use super::frontier::bits;
use crate::circuit::GateBlock;
use crate::error::Result;
use crate::gates::{is_diagonal, Gate, Matrix};
use crate::C64;

/// Preference among open groups: larger overlap, smaller group, earlier anchor.
type GroupKey = (std::cmp::Reverse<u32>, u32, usize);

struct Group {
    anchor: usize,
    mask: u64,
    members: Vec<usize>,
}

fn union_ids(gates: &[&Gate]) -> Vec<u64> {
    let mut ids: Vec<u64> = gates.iter().flat_map(|g| g.source_ids()).collect();
    ids.sort_unstable();
    ids
}

/// Product of diagonal gates as one `D_k` on the sorted union of their qubits.
pub fn merge_diagonals(gates: &[&Gate]) -> Result<Gate> {
    let mask = gates.iter().fold(0u64, |m, g| m | g.dep_mask());
    let targets: Vec<usize> = bits(mask).collect();
    let mut diag = vec![C64::new(1.0, 0.0); 1 << targets.len()];
    for g in gates {
        let d = g.expand_diagonal_to(&targets)?.expect("diagonal gate");
        for (acc, x) in diag.iter_mut().zip(d) {
            *acc *= x;
        }
    }
    Gate::fused_diagonal(targets, diag, union_ids(gates))
}

/// Ordered product of gates (later gates on the left) as one `U_k`.
pub fn merge_dense(gates: &[&Gate]) -> Result<Gate> {
    let mask = gates.iter().fold(0u64, |m, g| m | g.dep_mask());
    let targets: Vec<usize> = bits(mask).collect();
    let mut acc = Matrix::identity(1 << targets.len());
    for g in gates {
        acc = g.expand_to(&targets)?.mul(&acc);
    }
    Gate::fused_unitary(targets, acc.data, union_ids(gates))
}

/// Merges diagonal gates that can be brought together by commuting them past
/// gates that act diagonally on the qubits they share.
///
/// Each group is anchored at its first gate and emitted there as one `D_k` with
/// at most `max_qubits` qubits. A later diagonal gate joins the open group with
/// the largest qubit overlap (then the smaller group, then the earlier anchor)
/// provided no gate acting non-diagonally on one of its qubits lies between the
/// anchor and itself. Gates touching a qubit in `pinned` are left untouched.
pub fn fuse_diagonal(gates: &[Gate], max_qubits: usize, pinned: u64) -> Result<Vec<Gate>> {
    let n = gates.iter().map(|g| g.max_qubit() + 1).max().unwrap_or(0);
    // position + 1 of the last gate acting non-diagonally on each qubit
    let mut barrier = vec![0usize; n];
    let mut groups: Vec<Group> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    let mut owner: Vec<Option<usize>> = vec![None; gates.len()];

    for (p, g) in gates.iter().enumerate() {
        let m = g.dep_mask();
        let fusable = is_diagonal(g) && m & pinned == 0 && m.count_ones() as usize <= max_qubits;
        if !fusable {
            if !is_diagonal(g) {
                let mut moved = false;
                for q in bits(m) {
                    if !g.acts_diagonally_on(q) {
                        barrier[q] = p + 1;
                        moved = true;
                    }
                }
                if moved {
                    let floor = barrier.iter().copied().min().unwrap_or(0);
                    open.retain(|&gi| groups[gi].anchor >= floor);
                }
            }
            continue;
        }
        let mut best: Option<(usize, GroupKey)> = None;
        for &gi in &open {
            let grp = &groups[gi];
            let union = grp.mask | m;
            if union.count_ones() as usize > max_qubits || bits(m).any(|q| barrier[q] > grp.anchor) {
                continue;
            }
            let key = (std::cmp::Reverse((grp.mask & m).count_ones()), grp.mask.count_ones(), grp.anchor);
            if best.as_ref().is_none_or(|(_, k)| key < *k) {
                best = Some((gi, key));
            }
        }
        match best {
            Some((gi, _)) => {
                groups[gi].mask |= m;
                groups[gi].members.push(p);
                owner[p] = Some(gi);
            }
            None => {
                owner[p] = Some(groups.len());
                open.push(groups.len());
                groups.push(Group { anchor: p, mask: m, members: vec![p] });
            }
        }
    }

    let mut out = Vec::with_capacity(gates.len());
    for (p, g) in gates.iter().enumerate() {
        match owner[p] {
            Some(gi) if groups[gi].anchor == p => {
                let members: Vec<&Gate> = groups[gi].members.iter().map(|&i| &gates[i]).collect();
                out.push(merge_diagonals(&members)?);
            }
            Some(_) => {}
            None => out.push(g.clone()),
        }
    }
    Ok(out)
}

/// Merges runs of consecutive gates whose combined qubits number at most
/// `max_qubits`. Runs of diagonal gates become `D_k`, other runs `U_k`; gates
/// that are already fused are kept as they are.
pub fn fuse_general(block: &GateBlock, max_qubits: usize) -> Result<GateBlock> {
    fn flush(run: &mut Vec<&Gate>, out: &mut Vec<Gate>) -> Result<()> {
        match run.len() {
            0 => {}
            1 => out.push(run[0].clone()),
            _ if run.iter().all(|g| is_diagonal(g)) => out.push(merge_diagonals(run)?),
            _ => out.push(merge_dense(run)?),
        }
        run.clear();
        Ok(())
    }
    let mut out = Vec::with_capacity(block.len());
    let mut run: Vec<&Gate> = Vec::new();
    let mut mask = 0u64;
    for g in &block.gates {
        let m = g.dep_mask();
        if g.kind.is_fused() || m.count_ones() as usize > max_qubits {
            flush(&mut run, &mut out)?;
            out.push(g.clone());
            mask = 0;
            continue;
        }
        if !run.is_empty() && (mask | m).count_ones() as usize > max_qubits {
            flush(&mut run, &mut out)?;
            mask = 0;
        }
        run.push(g);
        mask |= m;
    }
    flush(&mut run, &mut out)?;
    Ok(GateBlock::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{gate_matrix, GateKind};

    fn product(gates: &[Gate], onto: &[usize]) -> Matrix {
        gates.iter().fold(Matrix::identity(1 << onto.len()), |acc, g| g.expand_to(onto).unwrap().mul(&acc))
    }

    #[test]
    fn three_rzz_become_one_d4() {
        let gates = vec![
            Gate::rzz(0, 2, 0.3, 0).unwrap(),
            Gate::rzz(1, 3, 0.5, 1).unwrap(),
            Gate::rzz(0, 3, 0.7, 2).unwrap(),
        ];
        let fused = fuse_diagonal(&gates, 4, 0).unwrap();
        assert_eq!(fused.len(), 1);
        assert_eq!(fused[0].kind, GateKind::Diag(4));
        assert_eq!(fused[0].constituents, vec![0, 1, 2]);
        let all = [0, 1, 2, 3];
        assert!(product(&fused, &all).max_abs_diff(&product(&gates, &all)) < 1e-14);
    }

    #[test]
    fn zero_angle_singleton_is_identity() {
        let fused = fuse_diagonal(&[Gate::rzz(0, 1, 0.0, 0).unwrap()], 4, 0).unwrap();
        assert_eq!(fused[0].kind, GateKind::Diag(2));
        assert!(gate_matrix(&fused[0]).unwrap().max_abs_diff(&Matrix::identity(4)) < 1e-15);
    }

    #[test]
    fn barriers_and_pins_respected() {
        let gates = vec![
            Gate::rz(0, 0.3, 0),
            Gate::h(0, 1),
            Gate::rz(0, 0.4, 2),
            Gate::rzz(1, 5, 0.2, 3).unwrap(),
        ];
        let fused = fuse_diagonal(&gates, 4, 1 << 5).unwrap();
        assert_eq!(fused.len(), 4);
        assert_eq!(fused[3], gates[3]);
    }

    #[test]
    fn controls_do_not_block() {
        let gates = vec![Gate::rz(0, 0.3, 0), Gate::cx(0, 1, 1).unwrap(), Gate::rz(0, 0.4, 2)];
        let fused = fuse_diagonal(&gates, 4, 0).unwrap();
        assert_eq!(fused.len(), 2);
        assert_eq!(fused[0].constituents, vec![0, 2]);
        let all = [0, 1];
        assert!(product(&fused, &all).max_abs_diff(&product(&gates, &all)) < 1e-14);
    }

    #[test]
    fn general_fusion_products() {
        let hh = fuse_general(&GateBlock::new(vec![Gate::h(0, 0), Gate::h(0, 1)]), 3).unwrap();
        assert_eq!(hh.len(), 1);
        assert!(gate_matrix(&hh.gates[0]).unwrap().max_abs_diff(&Matrix::identity(2)) < 1e-15);

        let hx = fuse_general(&GateBlock::new(vec![Gate::h(0, 0), Gate::x(0, 1)]), 3).unwrap();
        let want = gate_matrix(&Gate::x(0, 0)).unwrap().mul(&gate_matrix(&Gate::h(0, 0)).unwrap());
        assert!(gate_matrix(&hx.gates[0]).unwrap().max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn general_fusion_keeps_fused_and_splits_on_size() {
        let d = merge_diagonals(&[&Gate::rz(2, 0.1, 9)]).unwrap();
        let block = GateBlock::new(vec![Gate::h(0, 0), d.clone(), Gate::h(1, 1), Gate::cx(1, 2, 2).unwrap(), Gate::h(3, 3)]);
        let fused = fuse_general(&block, 2).unwrap();
        assert_eq!(fused.len(), 4);
        assert_eq!(fused.gates[1], d);
        assert_eq!(fused.gates[2].kind, GateKind::Unitary(2));
        assert_eq!(fused.gates[2].constituents, vec![1, 2]);
    }
}
