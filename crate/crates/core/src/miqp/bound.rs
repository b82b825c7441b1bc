//! Admissible lower bounds on the subproblem objective over all completions
//! of a partial assignment.

use std::collections::HashMap;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

use super::model::{MiqpSubproblem, Polynomial};

/// Relative tolerance subtracted from relaxation values before rounding up.
pub const RELAXATION_TOLERANCE: f64 = 1e-6;

/// A branch-and-bound node: a partial assignment of the free variables
/// (indexed in `S` order) and its lower bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BnbNode {
    pub values: Vec<Option<i8>>,
    pub lower_bound: i64,
    pub depth: usize,
}

impl BnbNode {
    pub fn root(num_vars: usize) -> Self {
        Self {
            values: vec![None; num_vars],
            lower_bound: 0,
            depth: 0,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }
}

/// Smallest square over the integer interval `[fixed - slack, fixed + slack]`.
#[inline]
pub fn interval_term_bound(fixed: i64, slack: i64) -> i64 {
    let lo = fixed - slack;
    let hi = fixed + slack;
    if lo <= 0 && 0 <= hi {
        0
    } else {
        (lo * lo).min(hi * hi)
    }
}

/// Per-term interval bound: each affected term can only reach values within
/// its constant and assigned contributions plus or minus the magnitudes of
/// its unassigned linear coefficients and undetermined auxiliaries. The sum
/// of per-term minima bounds the minimum of the sum.
pub fn lower_bound_interval(sub: &MiqpSubproblem<'_>, values: &[Option<i8>]) -> i64 {
    let aux = sub.aux();
    let mut total = sub.objective_constant();
    for t in sub.terms() {
        let mut fixed = t.constant;
        let mut slack = 0;
        for &(v, c) in sub.linear(t) {
            match values[v] {
                Some(x) => fixed += c * i64::from(x),
                None => slack += c.abs(),
            }
        }
        for &z in sub.term_products(t) {
            match (values[aux[z].a], values[aux[z].b]) {
                (Some(p), Some(q)) => fixed += i64::from(p * q),
                _ => slack += 1,
            }
        }
        total += interval_term_bound(fixed, slack);
    }
    total
}

/// Coefficient bound on the multilinear expansion: after substituting the
/// assigned variables, every non-constant monomial is at least minus the
/// magnitude of its (merged) coefficient.
pub fn lower_bound_polynomial(poly: &Polynomial, values: &[Option<i8>]) -> i64 {
    let mut assigned = 0u64;
    let mut negative = 0u64;
    for (n, v) in values.iter().enumerate() {
        if let Some(x) = v {
            assigned |= 1 << n;
            if *x < 0 {
                negative |= 1 << n;
            }
        }
    }
    let mut constant = poly.constant;
    let mut groups: HashMap<u64, i64> = HashMap::new();
    for &(mask, c) in &poly.terms {
        let sign = if (mask & negative).count_ones().is_multiple_of(2) { c } else { -c };
        let rest = mask & !assigned;
        if rest == 0 {
            constant += sign;
        } else {
            *groups.entry(rest).or_default() += sign;
        }
    }
    constant - groups.values().map(|c| c.abs()).sum::<i64>()
}

/// Result of the continuous-relaxation bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RelaxationBound {
    pub bound: i64,
    /// The QP did not converge and the interval bound was returned instead.
    pub fell_back: bool,
}

/// Bound from the convex QP obtained by relaxing the unassigned variables to
/// `[-1, 1]` while auxiliaries keep their linking inequalities.
///
/// The QP is solved with an interior-point method; the smaller of its primal
/// and dual objective, reduced by a relative tolerance and rounded up, is
/// returned.
pub fn lower_bound_relaxation(sub: &MiqpSubproblem<'_>, values: &[Option<i8>]) -> RelaxationBound {
    if values.iter().all(Option::is_some) {
        let full: Vec<i8> = values.iter().map(|v| v.expect("assigned")).collect();
        return RelaxationBound {
            bound: sub.objective(&full),
            fell_back: false,
        };
    }
    match solve_relaxation(sub, values) {
        Some(value) => {
            let slack = RELAXATION_TOLERANCE * value.abs().max(1.0);
            RelaxationBound {
                bound: ((value - slack).ceil() as i64).max(0),
                fell_back: false,
            }
        }
        None => RelaxationBound {
            bound: lower_bound_interval(sub, values),
            fell_back: true,
        },
    }
}

/// Optimal value of the relaxed QP, or `None` if the solver failed.
fn solve_relaxation(sub: &MiqpSubproblem<'_>, values: &[Option<i8>]) -> Option<f64> {
    let aux = sub.aux();
    // column layout: unassigned x, then auxiliaries with two free ends, then one y per term
    let mut x_col = vec![usize::MAX; values.len()];
    let mut ncols = 0;
    for (v, val) in values.iter().enumerate() {
        if val.is_none() {
            x_col[v] = ncols;
            ncols += 1;
        }
    }
    let num_x = ncols;
    let mut z_col = vec![usize::MAX; aux.len()];
    for (z, a) in aux.iter().enumerate() {
        if values[a.a].is_none() && values[a.b].is_none() {
            z_col[z] = ncols;
            ncols += 1;
        }
    }

    let mut constant = sub.objective_constant() as f64;
    // equality rows: y_t - sum(coef * w) = c_t
    let mut eq: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    let mut row: HashMap<usize, f64> = HashMap::new();
    for t in sub.terms() {
        row.clear();
        let mut c = t.constant as f64;
        for &(v, coef) in sub.linear(t) {
            match values[v] {
                Some(x) => c += (coef * i64::from(x)) as f64,
                None => *row.entry(x_col[v]).or_default() += coef as f64,
            }
        }
        for &z in sub.term_products(t) {
            let a = aux[z];
            match (values[a.a], values[a.b]) {
                (Some(p), Some(q)) => c += f64::from(p * q),
                // a fixed endpoint forces z = s * x_other exactly
                (Some(p), None) => *row.entry(x_col[a.b]).or_default() += f64::from(p),
                (None, Some(q)) => *row.entry(x_col[a.a]).or_default() += f64::from(q),
                (None, None) => *row.entry(z_col[z]).or_default() += 1.0,
            }
        }
        row.retain(|_, coef| *coef != 0.0);
        if row.is_empty() {
            constant += c * c;
        } else {
            let mut entries: Vec<(usize, f64)> = row.iter().map(|(&k, &v)| (k, v)).collect();
            entries.sort_unstable_by_key(|e| e.0);
            eq.push((entries, c));
        }
    }
    let num_y = eq.len();
    let n = ncols + num_y;

    let (mut ri, mut ci, mut vals, mut b) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut push = |r: usize, c: usize, v: f64| {
        ri.push(r);
        ci.push(c);
        vals.push(v);
    };
    let mut nrow = 0;
    for (t, (entries, c)) in eq.iter().enumerate() {
        push(nrow, ncols + t, 1.0);
        for &(col, coef) in entries {
            push(nrow, col, -coef);
        }
        b.push(*c);
        nrow += 1;
    }
    let num_eq = nrow;
    for col in 0..num_x {
        push(nrow, col, 1.0);
        push(nrow + 1, col, -1.0);
        b.extend([1.0, 1.0]);
        nrow += 2;
    }
    for (z, a) in aux.iter().enumerate() {
        let zc = z_col[z];
        if zc == usize::MAX {
            continue;
        }
        let (pa, pb) = (x_col[a.a], x_col[a.b]);
        // z <= b - a + 1; z <= a - b + 1; z >= -1 - a - b; z >= -1 + a + b
        for (sz, sa, sb) in [(1.0, 1.0, -1.0), (1.0, -1.0, 1.0), (-1.0, -1.0, -1.0), (-1.0, 1.0, 1.0)] {
            push(nrow, zc, sz);
            push(nrow, pa, sa);
            push(nrow, pb, sb);
            b.push(1.0);
            nrow += 1;
        }
    }
    let a_mat = CscMatrix::new_from_triplets(nrow, n, ri, ci, vals);
    let p_diag: Vec<usize> = (ncols..n).collect();
    let p_mat = CscMatrix::new_from_triplets(n, n, p_diag.clone(), p_diag, vec![2.0; num_y]);
    let q = vec![0.0; n];
    let cones = [
        SupportedConeT::ZeroConeT(num_eq),
        SupportedConeT::NonnegativeConeT(nrow - num_eq),
    ];
    let settings = DefaultSettingsBuilder::default().verbose(false).build().ok()?;
    let mut solver = DefaultSolver::new(&p_mat, &q, &a_mat, &b, &cones, settings).ok()?;
    solver.solve();
    let sol = &solver.solution;
    if sol.status != SolverStatus::Solved || !sol.obj_val.is_finite() || !sol.obj_val_dual.is_finite() {
        log::debug!("relaxation QP ended with status {:?}", sol.status);
        return None;
    }
    Some(sol.obj_val.min(sol.obj_val_dual) + constant)
}
