//! Exact two-phase simplex over rationals with Bland's rule.
//!
//! Problems are `A·v = b, v ≥ 0` with sparse rows. A light presolve fixes to
//! zero every variable appearing in a row whose right-hand side is zero and
//! whose coefficients all share one sign, then drops empty and duplicate rows.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpProblem {
    pub n_vars: usize,
    /// Equality rows: sparse `(variable, coefficient)` lists with right-hand side.
    pub rows: Vec<(Vec<(usize, Rational)>, Rational)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Vec<Rational>),
    /// Optimal phase-1 objective (sum of artificials), strictly positive.
    Infeasible { phase1_objective: Rational },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Optimum {
    Optimal { value: Rational, point: Vec<Rational> },
    Infeasible { phase1_objective: Rational },
    Unbounded,
}

impl LpProblem {
    pub fn new(n_vars: usize) -> Self {
        LpProblem { n_vars, rows: Vec::new() }
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, Rational)>, rhs: Rational) {
        self.rows.push((coefs, rhs));
    }

    /// Same problem with variable `j` renamed to `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> LpProblem {
        let rows = self
            .rows
            .iter()
            .map(|(c, b)| (c.iter().map(|(j, v)| (perm[*j], v.clone())).collect(), b.clone()))
            .collect();
        LpProblem { n_vars: self.n_vars, rows }
    }

    /// Residual `A·v − b` is zero and `v ≥ 0`.
    pub fn is_solution(&self, v: &[Rational]) -> bool {
        v.len() == self.n_vars
            && v.iter().all(|x| !x.is_negative())
            && self.rows.iter().all(|(c, b)| {
                let lhs: Rational = c.iter().map(|(j, a)| a * &v[*j]).sum();
                &lhs == b
            })
    }

    pub fn feasibility(&self) -> Feasibility {
        match self.solve(None) {
            Optimum::Optimal { point, .. } => Feasibility::Feasible(point),
            Optimum::Infeasible { phase1_objective } => Feasibility::Infeasible { phase1_objective },
            Optimum::Unbounded => unreachable!("phase 1 is bounded"),
        }
    }

    pub fn optimize(&self, objective: &[Rational], sense: Sense) -> Optimum {
        assert_eq!(objective.len(), self.n_vars);
        let costs: Vec<Rational> = match sense {
            Sense::Minimize => objective.to_vec(),
            Sense::Maximize => objective.iter().map(|c| -c).collect(),
        };
        match self.solve(Some(&costs)) {
            Optimum::Optimal { value, point } => Optimum::Optimal {
                value: if sense == Sense::Maximize { -value } else { value },
                point,
            },
            other => other,
        }
    }

    fn solve(&self, costs: Option<&[Rational]>) -> Optimum {
        let pre = Presolved::new(self);
        let mut tab = Tableau::phase1(&pre);
        tab.run(true);
        let infeas = tab.objective_value();
        if infeas.is_positive() {
            return Optimum::Infeasible { phase1_objective: infeas };
        }
        tab.evict_artificials();
        if let Some(c) = costs {
            let kept: Vec<Rational> = pre.kept.iter().map(|&j| c[j].clone()).collect();
            tab.set_costs(&kept);
            if !tab.run(false) {
                return Optimum::Unbounded;
            }
        }
        let local = tab.point();
        let mut point = vec![Rational::zero(); self.n_vars];
        for (k, &j) in pre.kept.iter().enumerate() {
            point[j] = local[k].clone();
        }
        let value = costs
            .map(|c| c.iter().zip(&point).map(|(a, b)| a * b).sum())
            .unwrap_or_else(Rational::zero);
        Optimum::Optimal { value, point }
    }
}

struct Presolved {
    /// Original indices of surviving variables, ascending.
    kept: Vec<usize>,
    /// Dense rows over `kept`, right-hand sides non-negative.
    rows: Vec<(Vec<Rational>, Rational)>,
}

impl Presolved {
    fn new(p: &LpProblem) -> Self {
        let mut fixed = vec![false; p.n_vars];
        for (coefs, rhs) in &p.rows {
            if rhs.is_zero() {
                let nz = coefs.iter().filter(|(_, a)| !a.is_zero());
                let pos = nz.clone().all(|(_, a)| a.is_positive());
                let neg = nz.clone().all(|(_, a)| a.is_negative());
                if pos || neg {
                    for (j, _) in nz {
                        fixed[*j] = true;
                    }
                }
            }
        }
        let kept: Vec<usize> = (0..p.n_vars).filter(|&j| !fixed[j]).collect();
        let mut local = vec![usize::MAX; p.n_vars];
        for (k, &j) in kept.iter().enumerate() {
            local[j] = k;
        }
        let mut seen = BTreeSet::new();
        let mut rows = Vec::new();
        for (coefs, rhs) in &p.rows {
            let mut dense = vec![Rational::zero(); kept.len()];
            for (j, a) in coefs {
                if !fixed[*j] {
                    dense[local[*j]] += a;
                }
            }
            let mut rhs = rhs.clone();
            if rhs.is_negative() {
                dense.iter_mut().for_each(|a| *a = -a.clone());
                rhs = -rhs;
            }
            if rhs.is_zero() && dense.iter().all(Zero::is_zero) {
                continue;
            }
            if seen.insert((dense.clone(), rhs.clone())) {
                rows.push((dense, rhs));
            }
        }
        Presolved { kept, rows }
    }
}

/// Dense tableau: `m` constraint rows plus the objective row (last).
/// Columns: structural, then one artificial per row, then the right-hand side.
struct Tableau {
    n: usize,
    m: usize,
    /// Artificial columns, fixed at construction even as redundant rows go.
    artificials: usize,
    t: Vec<Vec<Rational>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn phase1(p: &Presolved) -> Self {
        let n = p.kept.len();
        let m = p.rows.len();
        let width = n + m + 1;
        let mut t = Vec::with_capacity(m + 1);
        for (i, (row, rhs)) in p.rows.iter().enumerate() {
            let mut r = row.clone();
            r.resize(width, Rational::zero());
            r[n + i] = Rational::from_integer(1.into());
            r[width - 1] = rhs.clone();
            t.push(r);
        }
        // reduced costs of minimizing Σ artificials with artificials basic
        let mut obj = vec![Rational::zero(); width];
        for r in &t {
            for j in (0..n).chain([width - 1]) {
                if !r[j].is_zero() {
                    obj[j] -= &r[j];
                }
            }
        }
        t.push(obj);
        Tableau { n, m, artificials: m, t, basis: (n..n + m).collect() }
    }

    fn width(&self) -> usize {
        self.n + self.artificials + 1
    }

    fn objective_value(&self) -> Rational {
        -self.t[self.m][self.width() - 1].clone()
    }

    /// Bland's rule until optimal. Returns `false` on unboundedness.
    /// In phase 2 artificial columns never enter.
    fn run(&mut self, phase1: bool) -> bool {
        let rhs = self.width() - 1;
        let limit = if phase1 { self.n + self.artificials } else { self.n };
        loop {
            let Some(enter) = (0..limit).find(|&j| self.t[self.m][j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.m {
                let a = &self.t[i][enter];
                if a.is_positive() {
                    let ratio = &self.t[i][rhs] / a;
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else { return false };
            self.pivot(row, enter);
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.width();
        let inv = Rational::from_integer(1.into()) / &self.t[row][col];
        for j in 0..width {
            if !self.t[row][j].is_zero() {
                self.t[row][j] *= &inv;
            }
        }
        let support: Vec<usize> = (0..width).filter(|&j| !self.t[row][j].is_zero()).collect();
        let pivot_row = std::mem::take(&mut self.t[row]);
        for (i, r) in self.t.iter_mut().enumerate() {
            if i == row || r[col].is_zero() {
                continue;
            }
            let f = r[col].clone();
            for &j in &support {
                r[j] -= &f * &pivot_row[j];
            }
        }
        self.t[row] = pivot_row;
        self.basis[row] = col;
    }

    /// Pivots zero-valued artificials out of the basis; drops rows that are redundant.
    fn evict_artificials(&mut self) {
        let mut i = 0;
        while i < self.m {
            if self.basis[i] >= self.n {
                if let Some(j) = (0..self.n).find(|&j| !self.t[i][j].is_zero()) {
                    self.pivot(i, j);
                } else {
                    self.t.remove(i);
                    self.basis.remove(i);
                    self.m -= 1;
                    continue;
                }
            }
            i += 1;
        }
    }

    fn set_costs(&mut self, costs: &[Rational]) {
        let width = self.width();
        let mut obj = vec![Rational::zero(); width];
        obj[..self.n].clone_from_slice(costs);
        for i in 0..self.m {
            let cb = &costs[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for (o, v) in obj.iter_mut().zip(&self.t[i]) {
                if !v.is_zero() {
                    *o -= cb * v;
                }
            }
        }
        self.t[self.m] = obj;
    }

    fn point(&self) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); self.n];
        let rhs = self.width() - 1;
        for i in 0..self.m {
            if self.basis[i] < self.n {
                v[self.basis[i]] = self.t[i][rhs].clone();
            }
        }
        v
    }
}
