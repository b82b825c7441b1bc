//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use seqopt_core::bcd::{
    evaluate_local_optimality, multi_start, run, select_subset, BcdConfig, RunResult, SolverChoice,
};
use seqopt_core::codegen::{
    default_taps, generate_gold_family, generate_mseq, gold_t, random_set, sample_best_gold_subset, seeded_rng,
    LfsrSpec,
};
use seqopt_core::miqp::{
    glover_interval, glover_link, solve_bnb, solve_exhaustive, BnbConfig, BnbNode, BoundKind, MiqpSubproblem,
    SolveStatus,
};
use seqopt_core::{Coord, CorrelationState, CorrelationTable, Flip, SequenceSet};

const MINUTE: Duration = Duration::from_secs(60);
const TWO_HOURS: Duration = Duration::from_secs(7200);

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }

    fn fail(detail: impl Into<String>) -> Self {
        Self::new(false, detail)
    }
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: &str, name: &str, limit: Duration, f: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        let c = f();
        let took = start.elapsed();
        let pass = c.pass && took <= limit;
        let mut detail = c.detail;
        if took > limit {
            detail.push_str(&format!("; exceeded time limit {limit:?}"));
        }
        println!(
            "{} criterion {id:>2} {name} [{:.3?}] {detail}",
            if pass { "PASS" } else { "FAIL" },
            took
        );
        failed += usize::from(!pass);
    };

    let mut traces: Vec<RunResult> = Vec::new();
    let mut oracle = OracleRun::default();

    report("1", "glover truth table", Duration::from_millis(1), &mut glover);
    report("2", "subproblem objective consistency", MINUTE, &mut model_consistency);
    report("3", "solver oracle equivalence", 5 * MINUTE, &mut || oracle.solve());
    report("4", "bound admissibility", 5 * MINUTE, &mut || oracle.admissibility());
    report("6", "m-sequence and Gold properties", 2 * MINUTE, &mut code_properties);
    report("7", "incremental equivalence", MINUTE, &mut incremental);
    report("8", "L=63 K=4 ISL band", TWO_HOURS, &mut || isl_band(&mut traces));
    report("9", "L=127 smoke", TWO_HOURS, &mut || long_smoke(&mut traces));
    report("10", "symmetry invariance", MINUTE, &mut symmetry);
    report("5", "descent monotonicity", MINUTE, &mut || descent(&traces));

    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}

/// Feasible `z` under the four linking inequalities, by direct scan.
fn feasible_z(a: f64, b: f64) -> Vec<f64> {
    (-400..=400)
        .map(|s| f64::from(s) / 100.0)
        .filter(|&z| z <= b - a + 1.0 && z <= a - b + 1.0 && z >= -1.0 - a - b && z >= -1.0 + a + b)
        .collect()
}

fn glover() -> Check {
    for (a, b) in [(1i8, 1i8), (1, -1), (-1, 1), (-1, -1)] {
        let z = feasible_z(f64::from(a), f64::from(b));
        let want = f64::from(a * b);
        if z != [want] {
            return Check::fail(format!("({a},{b}): feasible set {z:?}"));
        }
        if glover_link(a, b) != a * b || glover_interval(f64::from(a), f64::from(b)) != (want, want) {
            return Check::fail(format!("({a},{b}): model disagrees"));
        }
    }
    Check::new(true, "4 rows exact")
}

fn random_coords(x: &SequenceSet, n: usize, rng: &mut impl Rng) -> Vec<Coord> {
    let l = x.length();
    sample(rng, l * x.num_codes(), n)
        .into_iter()
        .map(|f| Coord::new(f % l, f / l))
        .collect()
}

fn model_consistency() -> Check {
    let mut rng = seeded_rng(2);
    let mut completions = 0u64;
    for inst in 0..200u64 {
        let l = [7, 15, 31][inst as usize % 3];
        let k = [1, 2, 4][inst as usize / 3 % 3];
        let n = [1, 4, 8][inst as usize / 9 % 3].min(l * k);
        let x = random_set(l, k, 1000 + inst).unwrap();
        let st = CorrelationState::new(x.clone());
        let coords = random_coords(&x, n, &mut rng);
        let sub = MiqpSubproblem::from_coords(&st, &coords).unwrap();
        let mut cols = common::columns(&x);
        for bits in 0usize..1 << n {
            let a = common::assignment(bits, n);
            for (c, &v) in coords.iter().zip(&a) {
                cols[c.col][c.row] = v;
            }
            let want = common::isl(&cols);
            if sub.objective(&a) != want {
                return Check::fail(format!("instance {inst} (L={l} K={k} |S|={n}) completion {bits}"));
            }
            for z in sub.aux() {
                if glover_link(a[z.a], a[z.b]) != a[z.a] * a[z.b] {
                    return Check::fail(format!("instance {inst}: auxiliary link"));
                }
            }
            completions += 1;
        }
    }
    Check::new(true, format!("200 instances, {completions} completions exact"))
}

#[derive(Default)]
struct OracleRun {
    /// Per instance: completion table and the nodes emitted by every solve.
    recorded: Vec<(Vec<i64>, Vec<BnbNode>)>,
}

impl OracleRun {
    fn solve(&mut self) -> Check {
        let mut rng = seeded_rng(3);
        let bounds = [BoundKind::Interval, BoundKind::Polynomial, BoundKind::Relaxation];
        for inst in 0..50u64 {
            let k = 2 + inst as usize % 3;
            let n = 4 + inst as usize % 9;
            let x = random_set(31, k, 2000 + inst).unwrap();
            let coords = if inst % 2 == 0 {
                let (i, j) = (rng.random_range(0..31), rng.random_range(0..k));
                select_subset(i, j, n, 31, k, &mut rng).unwrap()
            } else {
                random_coords(&x, n, &mut rng)
            };
            let st = CorrelationState::new(x.clone());
            let sub = MiqpSubproblem::from_coords(&st, &coords).unwrap();
            let table = common::completion_table(&x, &coords);
            let min = *table.iter().min().unwrap();
            let ex = solve_exhaustive(&sub, 20).unwrap();
            if ex.objective != min {
                return Check::fail(format!("instance {inst}: exhaustive {} vs oracle {min}", ex.objective));
            }
            let mut nodes = Vec::new();
            for bound in bounds {
                let cfg = BnbConfig {
                    bound,
                    record_nodes: true,
                    ..BnbConfig::default()
                };
                let sol = solve_bnb(&sub, &cfg).unwrap();
                if sol.status != SolveStatus::Optimal || sol.objective != min {
                    return Check::fail(format!(
                        "instance {inst} {bound:?}: {:?} objective {} vs {min}",
                        sol.status, sol.objective
                    ));
                }
                if sol.nodes > 1 << (n + 1) {
                    return Check::fail(format!("instance {inst} {bound:?}: {} nodes", sol.nodes));
                }
                nodes.extend(sol.emitted);
            }
            self.recorded.push((table, nodes));
        }
        Check::new(true, "50 instances x 3 bounds match exhaustive search")
    }

    fn admissibility(&self) -> Check {
        if self.recorded.len() != 50 {
            return Check::fail("oracle instances unavailable");
        }
        let mut total = 0usize;
        for (inst, (table, nodes)) in self.recorded.iter().enumerate() {
            for node in nodes {
                let min = common::completion_min(table, &node.values);
                if node.lower_bound > min {
                    return Check::fail(format!(
                        "instance {inst}: bound {} above completion minimum {min} at depth {}",
                        node.lower_bound, node.depth
                    ));
                }
                total += 1;
            }
        }
        Check::new(total >= 10_000, format!("{total} recorded nodes admissible"))
    }
}

fn code_properties() -> Check {
    for n in 3..=10u32 {
        let chips = generate_mseq(&LfsrSpec::new(n, default_taps(n).unwrap())).unwrap();
        let l = chips.len();
        let x = [chips];
        if l != (1 << n) - 1 || (1..l).any(|k| common::corr(&x, 0, 0, k) != -1) || common::corr(&x, 0, 0, 0) != l as i64
        {
            return Check::fail(format!("m-sequence degree {n}"));
        }
    }
    for n in [5u32, 6] {
        let fam = generate_gold_family(n).unwrap();
        let cols = common::columns(&fam.codes);
        let t = gold_t(n);
        let allowed = [-1, -t, t - 2];
        let l = fam.length();
        for i in 0..cols.len() {
            for j in i..cols.len() {
                for k in usize::from(i == j)..l {
                    let v = common::corr(&cols, i, j, k);
                    if !allowed.contains(&v) {
                        return Check::fail(format!("Gold n={n}: ({i},{j},{k}) = {v}"));
                    }
                }
            }
        }
    }
    Check::new(true, "m-sequences n=3..10 two-valued; Gold n=5,6 three-valued over all pairs")
}

fn table_matches(state: &CorrelationState) -> bool {
    let cols = common::columns(state.sequences());
    let t = state.table();
    (0..cols.len()).all(|i| (i..cols.len()).all(|j| (0..cols[0].len()).all(|k| t.get(i, j, k) == common::corr(&cols, i, j, k))))
        && state.isl() == common::isl(&cols)
}

fn incremental() -> Check {
    let mut rng = seeded_rng(7);
    let mut updates = 0;
    for s in 0..40u64 {
        let l = rng.random_range(2..=40);
        let k = rng.random_range(1..=4);
        let mut state = CorrelationState::new(random_set(l, k, 3000 + s).unwrap());
        for _ in 0..25 {
            let n = rng.random_range(1..=(l * k).min(8));
            let x = state.sequences().clone();
            let flips: Vec<Flip> = random_coords(&x, n, &mut rng)
                .into_iter()
                .map(|c| Flip::new(c, if rng.random_bool(0.5) { 1 } else { -1 }))
                .collect();
            let commit = rng.random_bool(0.5);
            let update = state.isl_delta(&flips).unwrap();
            let mut cols = common::columns(&x);
            for f in &flips {
                cols[f.at.col][f.at.row] = f.value;
            }
            let t = update.table();
            let exact = (0..k).all(|i| (i..k).all(|j| (0..l).all(|kk| t.get(i, j, kk) == common::corr(&cols, i, j, kk))));
            if !exact || update.isl() != common::isl(&cols) {
                return Check::fail(format!("update {updates}: table differs from rebuild"));
            }
            if commit {
                update.commit();
            } else {
                update.discard();
                if state.sequences() != &x {
                    return Check::fail(format!("update {updates}: discard did not restore the set"));
                }
            }
            if !table_matches(&state) {
                return Check::fail(format!("update {updates}: state differs from rebuild"));
            }
            updates += 1;
        }
    }
    Check::new(updates == 1000, format!("{updates} multi-flip updates bit-exact"))
}

fn symmetry() -> Check {
    let mut rng = seeded_rng(10);
    for s in 0..100u64 {
        let l = rng.random_range(2..=64);
        let k = rng.random_range(1..=5);
        let x = random_set(l, k, 4000 + s).unwrap();
        let base = CorrelationTable::build(&x).objective();
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut rng);
        let mut shifted = x.clone();
        shifted.rotate_column(rng.random_range(0..k), rng.random_range(0..l));
        let mut negated = x.clone();
        negated.negate_column(rng.random_range(0..k));
        for (what, y) in [("permutation", x.permute_columns(&perm).unwrap()), ("shift", shifted), ("negation", negated)] {
            if CorrelationTable::build(&y).objective() != base {
                return Check::fail(format!("set {s}: {what} changed the objective"));
            }
        }
    }
    Check::new(true, "100 sets invariant under permutation, shift and negation")
}

fn stage(label: &str, results: &[RunResult], previous: Option<&[RunResult]>) -> Result<i64, String> {
    for (n, r) in results.iter().enumerate() {
        let exact = common::isl(&common::columns(&r.sequences));
        if exact != r.trace.final_isl() {
            return Err(format!("{label} run {n}: reported {} but set has {exact}", r.trace.final_isl()));
        }
        if let Some(prev) = previous {
            if r.trace.final_isl() > prev[n].trace.final_isl() {
                return Err(format!("{label} run {n} got worse"));
            }
        }
    }
    Ok(results.iter().map(|r| r.trace.final_isl()).min().unwrap())
}

fn isl_band(traces: &mut Vec<RunResult>) -> Check {
    let fam = generate_gold_family(6).unwrap();
    let gold = sample_best_gold_subset(&fam, 4, 100_000, 1).unwrap();
    let gold_exact = common::isl(&common::columns(&gold.codes));
    if gold_exact != gold.isl {
        return Check::fail(format!("Gold sample reports {} but has {gold_exact}", gold.isl));
    }

    let starts: Vec<SequenceSet> = (0..10).map(|s| random_set(63, 4, s).unwrap()).collect();
    let bist = multi_start(&starts, &BcdConfig::bist(0)).unwrap();
    if !bist.iter().all(|r| evaluate_local_optimality(&r.sequences)) {
        return Check::fail("a converged BiST output is not 1-opt");
    }
    let bist_outputs: Vec<SequenceSet> = bist.iter().map(|r| r.sequences.clone()).collect();
    let bcd4 = multi_start(&bist_outputs, &BcdConfig::bist(100).with_subset_size(4)).unwrap();
    let bcd4_outputs: Vec<SequenceSet> = bcd4.iter().map(|r| r.sequences.clone()).collect();
    let bcd20 = multi_start(&bcd4_outputs, &BcdConfig::bist(200).with_subset_size(20)).unwrap();

    let bests = stage("BiST", &bist, None)
        .and_then(|b| Ok((b, stage("N=4", &bcd4, Some(&bist))?)))
        .and_then(|(b, b4)| Ok((b, b4, stage("N=20", &bcd20, Some(&bcd4))?)));
    traces.extend(bist);
    traces.extend(bcd4);
    traces.extend(bcd20);
    let (b1, b4, b20) = match bests {
        Ok(v) => v,
        Err(e) => return Check::fail(e),
    };
    let pass = gold.isl <= 28_400 && b1 <= 26_800 && b20 <= 26_300;
    Check::new(
        pass,
        format!(
            "Gold best {} (<= 28400); BiST best {b1} (<= 26800); N=4 best {b4}; N=20 best {b20} (<= 26300)",
            gold.isl
        ),
    )
}

fn long_smoke(traces: &mut Vec<RunResult>) -> Check {
    let r = run(&random_set(127, 4, 1).unwrap(), &BcdConfig::bist(1)).unwrap();
    let isl = r.trace.final_isl();
    let exact = CorrelationTable::build_direct(&r.sequences).isl();
    traces.push(r);
    Check::new(isl <= 110_000 && exact == isl, format!("BiST final ISL {isl} (<= 110000)"))
}

fn descent(previous: &[RunResult]) -> Check {
    let mut runs = 0;
    for s in 0..24u64 {
        let n = [1, 2, 4, 8, 12, 17][s as usize % 6];
        let x0 = random_set(15 + s as usize, 1 + s as usize % 4, 5000 + s).unwrap();
        let mut cfg = BcdConfig::bist(s).with_subset_size(n.min(x0.length()));
        if s % 3 == 1 {
            cfg.subset_size = cfg.subset_size.min(8);
            cfg.solver = SolverChoice::Bnb;
            cfg.bnb.bound = [BoundKind::Interval, BoundKind::Polynomial, BoundKind::Relaxation][s as usize / 3 % 3];
            cfg.max_iterations = Some(100);
        }
        let r = run(&x0, &cfg).unwrap();
        if !r.trace.is_monotone() || r.trace.final_isl() > r.trace.initial_isl {
            return Check::fail(format!("run {s} not monotone"));
        }
        runs += 1;
    }
    for (n, r) in previous.iter().enumerate() {
        if !r.trace.is_monotone() {
            return Check::fail(format!("acceptance run {n} not monotone"));
        }
        runs += 1;
    }
    Check::new(true, format!("{runs} run traces non-increasing"))
}
