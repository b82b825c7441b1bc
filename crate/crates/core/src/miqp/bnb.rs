//! Best-first branch-and-bound over the free variables of a subproblem.
//!
//! Variables are branched in a fixed order (largest total absolute
//! coefficient first, ties by index) and each variable tries its current
//! value first. The entering assignment seeds the incumbent, so the result
//! never exceeds the entering objective. Nodes whose bound is not strictly
//! below the incumbent are pruned; the objective is integer, so this keeps
//! exactness. When the open list grows past its cap, popped nodes are
//! explored depth-first instead.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::bound::{interval_term_bound, lower_bound_relaxation, BnbNode};
use super::model::MiqpSubproblem;
use super::{Solution, SolveStatus};
use crate::error::{usage, Error, Result};

/// Largest number of free variables branch-and-bound accepts.
pub const MAX_BNB_VARS: usize = 64;

const TIME_CHECK_INTERVAL: u64 = 1024;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// Per-term reachable intervals.
    Interval,
    /// Merged-coefficient bound on the multilinear expansion.
    #[default]
    Polynomial,
    /// Continuous QP relaxation with linking inequalities.
    Relaxation,
}

impl std::str::FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interval" => Ok(Self::Interval),
            "polynomial" => Ok(Self::Polynomial),
            "relaxation" => Ok(Self::Relaxation),
            other => Err(usage(format!("unknown bound kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BnbConfig {
    pub bound: BoundKind,
    /// Open-list size beyond which nodes are explored depth-first.
    pub open_cap: usize,
    pub time_limit: Option<Duration>,
    /// Keep every evaluated node in [`Solution::emitted`].
    pub record_nodes: bool,
}

impl Default for BnbConfig {
    fn default() -> Self {
        Self {
            bound: BoundKind::default(),
            open_cap: 1 << 14,
            time_limit: None,
            record_nodes: false,
        }
    }
}

/// Incrementally maintained lower bound along one root-to-node path.
trait Bounder {
    /// Assigns the variable at the next depth.
    fn assign(&mut self, value: i8);
    fn unassign(&mut self);
    fn bound(&mut self) -> i64;

    /// Number of bound evaluations that fell back to a weaker bound.
    fn fallbacks(&self) -> u64 {
        0
    }
}

/// Coefficient bound on the multilinear objective, with variables relabeled
/// so that branching depth `d` is bit `d`. After depths `0..d` are fixed,
/// every monomial has been reduced to its bits `>= d`; fixing depth `d`
/// folds each reduced monomial with lowest bit `d` into the monomial without
/// that bit.
struct PolyBounder {
    coef: Vec<i64>,
    // for depth d: (source id, target id) for each reduced monomial whose lowest bit is d
    sources: Vec<Vec<(usize, usize)>>,
    constant_id: usize,
    abs_sum: i64,
    depth: usize,
    undo: Vec<Vec<(usize, i64, usize, i64)>>,
}

impl PolyBounder {
    fn new(sub: &MiqpSubproblem<'_>, order: &[usize]) -> Result<Self> {
        let poly = sub.polynomial()?;
        let n = order.len();
        let mut relabel = vec![0usize; n];
        for (d, &v) in order.iter().enumerate() {
            relabel[v] = d;
        }
        let remap = |mask: u64| -> u64 {
            let mut out = 0u64;
            let mut m = mask;
            while m != 0 {
                let v = m.trailing_zeros() as usize;
                out |= 1 << relabel[v];
                m &= m - 1;
            }
            out
        };
        let mut ids: HashMap<u64, usize> = HashMap::new();
        let mut masks: Vec<u64> = Vec::new();
        let mut coef: Vec<i64> = Vec::new();
        let intern = |mask: u64, ids: &mut HashMap<u64, usize>, masks: &mut Vec<u64>, coef: &mut Vec<i64>| -> usize {
            *ids.entry(mask).or_insert_with(|| {
                masks.push(mask);
                coef.push(0);
                masks.len() - 1
            })
        };
        let constant_id = intern(0, &mut ids, &mut masks, &mut coef);
        coef[constant_id] = poly.constant;
        for &(mask, c) in &poly.terms {
            let id = intern(remap(mask), &mut ids, &mut masks, &mut coef);
            coef[id] += c;
        }
        // close the universe under dropping the lowest bit
        let mut sources = vec![Vec::new(); n];
        let mut next = 0;
        while next < masks.len() {
            let mask = masks[next];
            if mask != 0 {
                let d = mask.trailing_zeros() as usize;
                let target = intern(mask & (mask - 1), &mut ids, &mut masks, &mut coef);
                sources[d].push((next, target));
            }
            next += 1;
        }
        let abs_sum = coef.iter().enumerate().filter(|&(id, _)| id != constant_id).map(|(_, c)| c.abs()).sum();
        Ok(Self {
            coef,
            sources,
            constant_id,
            abs_sum,
            depth: 0,
            undo: vec![Vec::new(); n],
        })
    }
}

impl Bounder for PolyBounder {
    fn assign(&mut self, value: i8) {
        let d = self.depth;
        let s = i64::from(value);
        let undo = &mut self.undo[d];
        undo.clear();
        for &(src, tgt) in &self.sources[d] {
            let c = self.coef[src];
            if c == 0 {
                continue;
            }
            let old_t = self.coef[tgt];
            undo.push((src, c, tgt, old_t));
            self.abs_sum -= c.abs();
            self.coef[src] = 0;
            let new_t = old_t + s * c;
            if tgt != self.constant_id {
                self.abs_sum += new_t.abs() - old_t.abs();
            }
            self.coef[tgt] = new_t;
        }
        self.depth += 1;
    }

    fn unassign(&mut self) {
        self.depth -= 1;
        let undo = std::mem::take(&mut self.undo[self.depth]);
        for &(src, c, tgt, old_t) in undo.iter().rev() {
            if tgt != self.constant_id {
                self.abs_sum += old_t.abs() - self.coef[tgt].abs();
            }
            self.coef[tgt] = old_t;
            self.coef[src] = c;
            self.abs_sum += c.abs();
        }
        self.undo[self.depth] = undo;
    }

    fn bound(&mut self) -> i64 {
        self.coef[self.constant_id] - self.abs_sum
    }
}

/// Interval bound kept per term under assignment and retraction.
struct IntervalBounder {
    order: Vec<usize>,
    values: Vec<i8>,
    fixed: Vec<i64>,
    slack: Vec<i64>,
    total: i64,
    // per variable: (term, coefficient)
    lin_occ: Vec<Vec<(usize, i64)>>,
    // per variable: (term, other endpoint)
    aux_occ: Vec<Vec<(usize, usize)>>,
    depth: usize,
}

impl IntervalBounder {
    fn new(sub: &MiqpSubproblem<'_>, order: &[usize]) -> Self {
        let n = sub.num_vars();
        let mut lin_occ = vec![Vec::new(); n];
        let mut aux_occ = vec![Vec::new(); n];
        let mut fixed = Vec::with_capacity(sub.terms().len());
        let mut slack = Vec::with_capacity(sub.terms().len());
        for (t, term) in sub.terms().iter().enumerate() {
            let mut s = 0;
            for &(v, c) in sub.linear(term) {
                lin_occ[v].push((t, c));
                s += c.abs();
            }
            s += sub.term_products(term).len() as i64;
            fixed.push(term.constant);
            slack.push(s);
        }
        for a in sub.aux() {
            aux_occ[a.a].push((a.term, a.b));
            aux_occ[a.b].push((a.term, a.a));
        }
        let total = sub.objective_constant()
            + fixed.iter().zip(&slack).map(|(&f, &s)| interval_term_bound(f, s)).sum::<i64>();
        Self {
            order: order.to_vec(),
            values: vec![0; n],
            fixed,
            slack,
            total,
            lin_occ,
            aux_occ,
            depth: 0,
        }
    }
}

impl Bounder for IntervalBounder {
    fn assign(&mut self, value: i8) {
        let v = self.order[self.depth];
        self.depth += 1;
        let s = i64::from(value);
        for &(t, c) in &self.lin_occ[v] {
            let before = interval_term_bound(self.fixed[t], self.slack[t]);
            self.fixed[t] += c * s;
            self.slack[t] -= c.abs();
            self.total += interval_term_bound(self.fixed[t], self.slack[t]) - before;
        }
        for &(t, other) in &self.aux_occ[v] {
            let o = self.values[other];
            if o != 0 {
                let before = interval_term_bound(self.fixed[t], self.slack[t]);
                self.fixed[t] += s * i64::from(o);
                self.slack[t] -= 1;
                self.total += interval_term_bound(self.fixed[t], self.slack[t]) - before;
            }
        }
        self.values[v] = value;
    }

    fn unassign(&mut self) {
        self.depth -= 1;
        let v = self.order[self.depth];
        let s = i64::from(self.values[v]);
        self.values[v] = 0;
        for &(t, other) in &self.aux_occ[v] {
            let o = self.values[other];
            if o != 0 {
                let before = interval_term_bound(self.fixed[t], self.slack[t]);
                self.fixed[t] -= s * i64::from(o);
                self.slack[t] += 1;
                self.total += interval_term_bound(self.fixed[t], self.slack[t]) - before;
            }
        }
        for &(t, c) in &self.lin_occ[v] {
            let before = interval_term_bound(self.fixed[t], self.slack[t]);
            self.fixed[t] -= c * s;
            self.slack[t] += c.abs();
            self.total += interval_term_bound(self.fixed[t], self.slack[t]) - before;
        }
    }

    fn bound(&mut self) -> i64 {
        self.total
    }
}

/// Solves the continuous relaxation at every node.
struct RelaxationBounder<'s, 'a> {
    sub: &'s MiqpSubproblem<'a>,
    order: Vec<usize>,
    values: Vec<Option<i8>>,
    depth: usize,
    fallbacks: u64,
}

impl Bounder for RelaxationBounder<'_, '_> {
    fn assign(&mut self, value: i8) {
        self.values[self.order[self.depth]] = Some(value);
        self.depth += 1;
    }

    fn unassign(&mut self) {
        self.depth -= 1;
        self.values[self.order[self.depth]] = None;
    }

    fn bound(&mut self) -> i64 {
        let r = lower_bound_relaxation(self.sub, &self.values);
        self.fallbacks += u64::from(r.fell_back);
        r.bound
    }

    fn fallbacks(&self) -> u64 {
        self.fallbacks
    }
}

/// Branching order: descending structural weight, ties by index.
pub fn branching_order(sub: &MiqpSubproblem<'_>) -> Vec<usize> {
    let w = sub.structural_weights();
    let mut order: Vec<usize> = (0..sub.num_vars()).collect();
    order.sort_by_key(|&v| (Reverse(w[v]), v));
    order
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct OpenNode {
    bound: i64,
    depth: Reverse<usize>,
    seq: u64,
    bits: u64,
}

struct Search<'s> {
    order: Vec<usize>,
    first_value: Vec<i8>,
    config: &'s BnbConfig,
    bounder: Box<dyn Bounder + 's>,
    // current path: values at depths 0..path_len, bit d set for +1
    path_bits: u64,
    path_len: usize,
    incumbent: i64,
    incumbent_bits: u64,
    nodes: u64,
    emitted: Vec<BnbNode>,
    start: Instant,
    next_check: u64,
    timed_out: bool,
}

impl Search<'_> {
    fn n(&self) -> usize {
        self.order.len()
    }

    fn goto(&mut self, depth: usize, bits: u64) {
        let mut common = 0;
        while common < depth.min(self.path_len) && (self.path_bits ^ bits) >> common & 1 == 0 {
            common += 1;
        }
        while self.path_len > common {
            self.bounder.unassign();
            self.path_len -= 1;
        }
        self.path_bits &= if common >= 64 { u64::MAX } else { (1u64 << common) - 1 };
        while self.path_len < depth {
            let d = self.path_len;
            let plus = bits >> d & 1 == 1;
            self.bounder.assign(if plus { 1 } else { -1 });
            if plus {
                self.path_bits |= 1 << d;
            } else {
                self.path_bits &= !(1 << d);
            }
            self.path_len += 1;
        }
    }

    fn push_step(&mut self, value: i8) -> i64 {
        let d = self.path_len;
        self.bounder.assign(value);
        if value > 0 {
            self.path_bits |= 1 << d;
        } else {
            self.path_bits &= !(1 << d);
        }
        self.path_len += 1;
        let b = self.bounder.bound();
        self.nodes += 1;
        if self.config.record_nodes {
            self.record(b);
        }
        b
    }

    fn pop_step(&mut self) {
        self.bounder.unassign();
        self.path_len -= 1;
        self.path_bits &= !(1 << self.path_len);
    }

    fn record(&mut self, bound: i64) {
        let mut values = vec![None; self.n()];
        for d in 0..self.path_len {
            values[self.order[d]] = Some(if self.path_bits >> d & 1 == 1 { 1 } else { -1 });
        }
        self.emitted.push(BnbNode {
            values,
            lower_bound: bound,
            depth: self.path_len,
        });
    }

    fn child_values(&self, depth: usize) -> [i8; 2] {
        let first = self.first_value[depth];
        [first, -first]
    }

    fn check_time(&mut self) -> bool {
        if self.nodes >= self.next_check {
            self.next_check = self.nodes + TIME_CHECK_INTERVAL;
            if let Some(limit) = self.config.time_limit {
                if self.start.elapsed() > limit {
                    self.timed_out = true;
                }
            }
        }
        self.timed_out
    }

    fn leaf(&mut self, bound: i64) {
        if bound < self.incumbent {
            self.incumbent = bound;
            self.incumbent_bits = self.path_bits;
        }
    }

    /// Depth-first exploration below the current path.
    fn dive(&mut self) {
        let d = self.path_len;
        for value in self.child_values(d) {
            if self.check_time() {
                return;
            }
            let b = self.push_step(value);
            if d + 1 == self.n() {
                self.leaf(b);
            } else if b < self.incumbent {
                self.dive();
            }
            self.pop_step();
        }
    }
}

/// Exact minimization of the subproblem by branch-and-bound.
pub fn solve_bnb(sub: &MiqpSubproblem<'_>, config: &BnbConfig) -> Result<Solution> {
    let n = sub.num_vars();
    if n > MAX_BNB_VARS {
        return Err(usage(format!("branch-and-bound supports at most {MAX_BNB_VARS} variables, got {n}")));
    }
    let order = branching_order(sub);
    let first_value: Vec<i8> = order.iter().map(|&v| sub.current()[v]).collect();
    let bounder: Box<dyn Bounder> = match config.bound {
        BoundKind::Polynomial => Box::new(PolyBounder::new(sub, &order)?),
        BoundKind::Interval => Box::new(IntervalBounder::new(sub, &order)),
        BoundKind::Relaxation => Box::new(RelaxationBounder {
            sub,
            order: order.clone(),
            values: vec![None; n],
            depth: 0,
            fallbacks: 0,
        }),
    };
    let current_bits = first_value
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0)
        .fold(0u64, |acc, (d, _)| acc | (1 << d));
    let mut s = Search {
        order,
        first_value,
        config,
        bounder,
        path_bits: 0,
        path_len: 0,
        incumbent: sub.current_objective(),
        incumbent_bits: current_bits,
        nodes: 0,
        emitted: Vec::new(),
        start: Instant::now(),
        next_check: TIME_CHECK_INTERVAL,
        timed_out: false,
    };

    let root = s.bounder.bound();
    s.nodes += 1;
    if config.record_nodes {
        s.record(root);
    }
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    let mut best_open = root;
    if root < s.incumbent {
        open.push(Reverse(OpenNode {
            bound: root,
            depth: Reverse(0),
            seq,
            bits: 0,
        }));
    }
    while let Some(Reverse(node)) = open.pop() {
        if node.bound >= s.incumbent {
            break;
        }
        s.goto(node.depth.0, node.bits);
        if open.len() >= config.open_cap {
            s.dive();
            if s.timed_out {
                best_open = open.peek().map_or(node.bound, |Reverse(o)| o.bound.min(node.bound));
                break;
            }
            continue;
        }
        let d = node.depth.0;
        for value in s.child_values(d) {
            let b = s.push_step(value);
            if d + 1 == n {
                s.leaf(b);
            } else if b < s.incumbent {
                seq += 1;
                open.push(Reverse(OpenNode {
                    bound: b,
                    depth: Reverse(d + 1),
                    seq,
                    bits: s.path_bits,
                }));
            }
            s.pop_step();
        }
        if s.check_time() {
            best_open = open.peek().map_or(node.bound, |Reverse(o)| o.bound.min(node.bound));
            break;
        }
    }
    let relaxation_fallbacks = s.bounder.fallbacks();

    let mut assignment = vec![0i8; n];
    for (d, &v) in s.order.iter().enumerate() {
        assignment[v] = if s.incumbent_bits >> d & 1 == 1 { 1 } else { -1 };
    }
    let objective = sub.objective(&assignment);
    if objective != s.incumbent {
        return Err(Error::Solver(format!(
            "incumbent objective {} disagrees with model evaluation {objective}",
            s.incumbent
        )));
    }
    let status = if s.timed_out { SolveStatus::Timeout } else { SolveStatus::Optimal };
    let gap = if s.timed_out { (s.incumbent - best_open).max(0) } else { 0 };
    Ok(Solution {
        assignment,
        objective,
        status,
        nodes: s.nodes,
        gap,
        emitted: s.emitted,
        relaxation_fallbacks,
    })
}
