//! The descent subproblem as a mixed-integer quadratic program.
//!
//! With every entry outside the free set `S` held fixed, each correlation
//! value that depends on a free entry splits into
//!
//! ```text
//! constant + sum_v a_v x_v + sum_z z
//! ```
//!
//! where the constant collects fixed x fixed products, the linear part
//! collects fixed x free products, and each free x free product
//! `x_u * x_v` is replaced by an auxiliary `z` bound to it by four linear
//! linking inequalities. The objective is the sum of squared terms plus the
//! squares of all correlation values that do not depend on `S`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::correlation::CorrelationState;
use crate::error::{usage, Result};
use crate::sequence::{Coord, IndexSubset, SequenceSet};

/// The four linking inequalities tying `z` to `a * b`, as the feasible
/// interval `[lo, hi]` for `z` given `a` and `b`:
///
/// ```text
/// z <= b - a + 1      z >= -1 - a - b
/// z <= a - b + 1      z >= -1 + a + b
/// ```
pub fn glover_interval(a: f64, b: f64) -> (f64, f64) {
    let hi = (b - a + 1.0).min(a - b + 1.0);
    let lo = (-1.0 - a - b).max(-1.0 + a + b);
    (lo, hi)
}

/// The unique `z` satisfying the linking inequalities for binary `a`, `b`.
pub fn glover_link(a: i8, b: i8) -> i8 {
    assert!(matches!(a, -1 | 1) && matches!(b, -1 | 1), "operands must be +1 or -1");
    let (lo, hi) = glover_interval(f64::from(a), f64::from(b));
    debug_assert_eq!(lo, hi);
    lo as i8
}

/// One correlation value `(X_i * X_j)_k` that depends on a free entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    /// Sum of the fixed x fixed products.
    pub constant: i64,
    lin: (usize, usize),
    prod: (usize, usize),
}

/// An auxiliary variable standing for the product of two free variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Aux {
    /// Index of the term the product belongs to.
    pub term: usize,
    /// Free-variable indices, `a < b`.
    pub a: usize,
    pub b: usize,
}

/// The MIQP restricted to the free entries `S` of a sequence set.
#[derive(Clone, Debug)]
pub struct MiqpSubproblem<'a> {
    state: &'a CorrelationState,
    vars: Vec<Coord>,
    current: Vec<i8>,
    terms: Vec<Term>,
    linear: Vec<(usize, i64)>,
    products: Vec<usize>,
    aux: Vec<Aux>,
    constant: i64,
}

impl<'a> MiqpSubproblem<'a> {
    /// Decomposes every correlation term touched by `subset`.
    pub fn build(state: &'a CorrelationState, subset: &IndexSubset) -> Result<Self> {
        Self::from_coords(state, subset.coords())
    }

    pub fn from_coords(state: &'a CorrelationState, coords: &[Coord]) -> Result<Self> {
        let x = state.sequences();
        if coords.is_empty() {
            return Err(usage("free variable set must be nonempty"));
        }
        let subset = IndexSubset::new(coords.to_vec(), x)?;
        let (len, count) = (x.length(), x.num_codes());

        let mut lookup = vec![u32::MAX; len * count];
        let mut rows_by_col: Vec<Vec<usize>> = vec![Vec::new(); count];
        for (n, c) in subset.coords().iter().enumerate() {
            lookup[c.col * len + c.row] = n as u32;
            rows_by_col[c.col].push(c.row);
        }
        let free = |row: usize, col: usize| -> Option<usize> {
            let v = lookup[col * len + row];
            (v != u32::MAX).then_some(v as usize)
        };

        let mut sub = Self {
            state,
            vars: subset.coords().to_vec(),
            current: subset.coords().iter().map(|&c| x.at(c)).collect(),
            terms: Vec::new(),
            linear: Vec::new(),
            products: Vec::new(),
            aux: Vec::new(),
            constant: state.isl(),
        };

        let table = state.table();
        let mut lin_acc: Vec<(usize, i64)> = Vec::new();
        for i in 0..count {
            for j in i..count {
                if rows_by_col[i].is_empty() && rows_by_col[j].is_empty() {
                    continue;
                }
                for k in usize::from(i == j)..len {
                    // products X[m,i] * X[m+k,j] that involve a free entry, keyed by m
                    let mut touched = false;
                    let mut free_part = 0i64;
                    lin_acc.clear();
                    let prod_start = sub.products.len();
                    let term_index = sub.terms.len();
                    for &m in &rows_by_col[i] {
                        let u = free(m, i).expect("free row");
                        let r = (m + k) % len;
                        touched = true;
                        free_part += i64::from(x.get(m, i) * x.get(r, j));
                        match free(r, j) {
                            Some(v) => {
                                let (a, b) = if u < v { (u, v) } else { (v, u) };
                                sub.products.push(sub.aux.len());
                                sub.aux.push(Aux { term: term_index, a, b });
                            }
                            None => lin_acc.push((u, i64::from(x.get(r, j)))),
                        }
                    }
                    for &r in &rows_by_col[j] {
                        let v = free(r, j).expect("free row");
                        let m = (r + len - k) % len;
                        if free(m, i).is_some() {
                            continue;
                        }
                        touched = true;
                        free_part += i64::from(x.get(m, i) * x.get(r, j));
                        lin_acc.push((v, i64::from(x.get(m, i))));
                    }
                    if !touched {
                        continue;
                    }
                    let value = table.pair(i, j)[k];
                    sub.constant -= value * value;
                    lin_acc.sort_unstable_by_key(|&(v, _)| v);
                    let lin_start = sub.linear.len();
                    for &(v, coef) in &lin_acc {
                        match sub.linear[lin_start..].last_mut() {
                            Some(last) if last.0 == v => last.1 += coef,
                            _ => sub.linear.push((v, coef)),
                        }
                    }
                    sub.terms.push(Term {
                        i,
                        j,
                        k,
                        constant: value - free_part,
                        lin: (lin_start, sub.linear.len()),
                        prod: (prod_start, sub.products.len()),
                    });
                }
            }
        }
        Ok(sub)
    }

    pub fn state(&self) -> &'a CorrelationState {
        self.state
    }

    pub fn sequences(&self) -> &'a SequenceSet {
        self.state.sequences()
    }

    /// Free entries in `S` order.
    pub fn vars(&self) -> &[Coord] {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    /// Values of the free entries in the entering sequence set.
    pub fn current(&self) -> &[i8] {
        &self.current
    }

    /// Objective of the entering sequence set.
    pub fn current_objective(&self) -> i64 {
        self.state.isl()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// `(variable, coefficient)` pairs of a term's linear part.
    pub fn linear(&self, term: &Term) -> &[(usize, i64)] {
        &self.linear[term.lin.0..term.lin.1]
    }

    /// Auxiliary indices appearing in a term.
    pub fn term_products(&self, term: &Term) -> &[usize] {
        &self.products[term.prod.0..term.prod.1]
    }

    pub fn aux(&self) -> &[Aux] {
        &self.aux
    }

    /// Sum of squares of the correlation terms that do not depend on `S`.
    pub fn objective_constant(&self) -> i64 {
        self.constant
    }

    /// Value of one term at a full assignment, with auxiliaries at their
    /// linked values.
    pub fn term_value(&self, term: &Term, assignment: &[i8]) -> i64 {
        let lin: i64 = self.linear(term).iter().map(|&(v, c)| c * i64::from(assignment[v])).sum();
        let prod: i64 = self
            .term_products(term)
            .iter()
            .map(|&z| {
                let Aux { a, b, .. } = self.aux[z];
                i64::from(glover_link(assignment[a], assignment[b]))
            })
            .sum();
        term.constant + lin + prod
    }

    /// Model objective at a full assignment of the free variables.
    pub fn objective(&self, assignment: &[i8]) -> i64 {
        assert_eq!(assignment.len(), self.vars.len(), "assignment length");
        self.constant
            + self
                .terms
                .iter()
                .map(|t| {
                    let v = self.term_value(t, assignment);
                    v * v
                })
                .sum::<i64>()
    }

    /// The entering sequence set with the free entries replaced.
    pub fn assemble(&self, assignment: &[i8]) -> SequenceSet {
        let mut x = self.sequences().clone();
        for (c, &v) in self.vars.iter().zip(assignment) {
            x.set(c.row, c.col, v);
        }
        x
    }

    /// Sum over affected terms of the absolute coefficients of each free
    /// variable (auxiliaries count 1 for each endpoint).
    pub fn structural_weights(&self) -> Vec<i64> {
        let mut w = vec![0i64; self.vars.len()];
        for &(v, c) in &self.linear {
            w[v] += c.abs();
        }
        for a in &self.aux {
            w[a.a] += 1;
            w[a.b] += 1;
        }
        w
    }

    /// Expands the objective into a multilinear polynomial over the `+-1`
    /// free variables, keyed by variable bitmask (`x_v^2 = 1`). Requires at
    /// most 64 free variables.
    pub fn polynomial(&self) -> Result<Polynomial> {
        if self.vars.len() > 64 {
            return Err(usage("polynomial expansion supports at most 64 free variables"));
        }
        let mut coefs: HashMap<u64, i64> = HashMap::new();
        let mut mono: Vec<(u64, i64)> = Vec::new();
        for t in &self.terms {
            mono.clear();
            mono.push((0, t.constant));
            mono.extend(self.linear(t).iter().filter(|&&(_, c)| c != 0).map(|&(v, c)| (1u64 << v, c)));
            mono.extend(self.term_products(t).iter().map(|&z| {
                let a = self.aux[z];
                ((1u64 << a.a) | (1u64 << a.b), 1)
            }));
            for (p, &(mp, cp)) in mono.iter().enumerate() {
                *coefs.entry(0).or_default() += cp * cp;
                for &(mq, cq) in &mono[p + 1..] {
                    *coefs.entry(mp ^ mq).or_default() += 2 * cp * cq;
                }
            }
        }
        let constant = self.constant + coefs.remove(&0).unwrap_or(0);
        let mut terms: Vec<(u64, i64)> = coefs.into_iter().filter(|&(_, c)| c != 0).collect();
        terms.sort_unstable();
        Ok(Polynomial {
            num_vars: self.vars.len(),
            constant,
            terms,
        })
    }

    /// Human-readable dump of the model (objective terms, auxiliaries and
    /// linking constraints).
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let x = self.sequences();
        let _ = writeln!(out, "# seqopt subproblem model v1");
        let _ = writeln!(out, "set L={} K={} isl={}", x.length(), x.num_codes(), self.state.isl());
        let _ = writeln!(out, "vars {}", self.vars.len());
        for (n, (c, v)) in self.vars.iter().zip(&self.current).enumerate() {
            let _ = writeln!(out, "var x{n} row={} col={} current={v:+}", c.row, c.col);
        }
        let _ = writeln!(out, "constant {}", self.constant);
        let _ = writeln!(out, "terms {}", self.terms.len());
        for (n, t) in self.terms.iter().enumerate() {
            let _ = write!(out, "term t{n} ({},{},{}) = {}", t.i, t.j, t.k, t.constant);
            for &(v, c) in self.linear(t) {
                let _ = write!(out, " {c:+}*x{v}");
            }
            for &z in self.term_products(t) {
                let _ = write!(out, " +z{z}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "aux {}", self.aux.len());
        for (n, a) in self.aux.iter().enumerate() {
            let (p, q) = (a.a, a.b);
            let _ = writeln!(
                out,
                "link z{n}: z{n} <= x{q} - x{p} + 1; z{n} <= x{p} - x{q} + 1; z{n} >= -1 - x{p} - x{q}; z{n} >= -1 + x{p} + x{q}"
            );
        }
        let _ = writeln!(out, "minimize constant + sum_t term_t^2");
        out
    }
}

/// A multilinear polynomial in `+-1` variables with integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    pub num_vars: usize,
    pub constant: i64,
    /// `(mask, coefficient)` with nonzero masks and coefficients, sorted by mask.
    pub terms: Vec<(u64, i64)>,
}

impl Polynomial {
    pub fn eval(&self, assignment: &[i8]) -> i64 {
        let negative = assignment
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < 0)
            .fold(0u64, |m, (n, _)| m | (1 << n));
        self.constant
            + self
                .terms
                .iter()
                .map(|&(mask, c)| if (mask & negative).count_ones() % 2 == 0 { c } else { -c })
                .sum::<i64>()
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.count_ones()).max().unwrap_or(0)
    }
}
