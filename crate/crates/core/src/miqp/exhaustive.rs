use super::{MiqpSubproblem, Solution, SolveStatus};
use crate::error::{usage, Result};

/// Default limit on the number of free variables for exhaustive search.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 20;

/// Enumerates all `2^|S|` completions in Gray-code order, updating the
/// correlation state by one chip flip per step.
///
/// Among optimal assignments the lowest binary encoding wins, where `-1`
/// encodes 0, `+1` encodes 1 and the first variable of `S` is the most
/// significant bit.
pub fn solve_exhaustive(sub: &MiqpSubproblem<'_>, cap: usize) -> Result<Solution> {
    let n = sub.num_vars();
    if n > cap || n >= 63 {
        return Err(usage(format!("exhaustive search over {n} variables exceeds the cap of {cap}")));
    }
    let vars = sub.vars();
    let encode = |bits: u64| -> u64 { bits.reverse_bits() >> (64 - n) };
    let mut bits: u64 = sub
        .current()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0)
        .fold(0, |acc, (v, _)| acc | (1 << v));

    let (best_bits, best) = if n == 1 {
        let gain = sub.state().toggle_gain(vars[0]);
        let here = sub.current_objective();
        match gain.cmp(&0) {
            std::cmp::Ordering::Less => (bits ^ 1, here + gain),
            std::cmp::Ordering::Equal => (0, here),
            std::cmp::Ordering::Greater => (bits, here),
        }
    } else {
        let mut state = sub.state().clone();
        let mut best = (state.isl(), encode(bits), bits);
        for t in 1u64..1 << n {
            let v = t.trailing_zeros() as usize;
            state.toggle(vars[v]);
            bits ^= 1 << v;
            let cand = (state.isl(), encode(bits), bits);
            if (cand.0, cand.1) < (best.0, best.1) {
                best = cand;
            }
        }
        (best.2, best.0)
    };
    let assignment = (0..n).map(|v| if best_bits >> v & 1 == 1 { 1 } else { -1 }).collect();
    Ok(Solution {
        assignment,
        objective: best,
        status: SolveStatus::Optimal,
        nodes: 1 << n,
        gap: 0,
        emitted: Vec::new(),
        relaxation_fallbacks: 0,
    })
}
