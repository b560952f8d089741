//! Dense two-phase simplex over exact rationals with Bland's rule.
//!
//! Small and slow by design: every pivot is exact and Bland's rule cannot
//! cycle, so the answer is a proof rather than an estimate.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    /// Sparse row as `(variable, coefficient)`.
    pub terms: Vec<(usize, BigRational)>,
    pub relation: Relation,
    pub rhs: BigRational,
}

/// `minimize c·x subject to constraints, x ≥ 0`.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub variables: usize,
    pub objective: Vec<BigRational>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpStatus {
    Optimal { x: Vec<BigRational>, value: BigRational },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(variables: usize) -> Self {
        LinearProgram { variables, objective: vec![BigRational::zero(); variables], constraints: Vec::new() }
    }

    pub fn add(&mut self, terms: Vec<(usize, BigRational)>, relation: Relation, rhs: BigRational) {
        self.constraints.push(Constraint { terms, relation, rhs });
    }

    pub fn solve(&self) -> LpStatus {
        Tableau::build(self).run(&self.objective, self.variables)
    }
}

struct Tableau {
    rows: Vec<Vec<BigRational>>,
    rhs: Vec<BigRational>,
    basis: Vec<usize>,
    columns: usize,
    /// Columns `>= first_artificial` are artificial.
    first_artificial: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.variables;
        let slacks = lp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();
        let first_artificial = n + slacks;
        // Rows with a `≤` relation and non-negative rhs start with their slack
        // basic; every other row gets an artificial.
        let mut needs_artificial = Vec::with_capacity(lp.constraints.len());
        for c in &lp.constraints {
            let flip = c.rhs.is_negative();
            let rel = match (c.relation, flip) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => r,
            };
            needs_artificial.push(rel != Relation::Le);
        }
        let artificials = needs_artificial.iter().filter(|&&a| a).count();
        let columns = first_artificial + artificials;

        let mut rows = Vec::with_capacity(lp.constraints.len());
        let mut rhs = Vec::with_capacity(lp.constraints.len());
        let mut basis = Vec::with_capacity(lp.constraints.len());
        let mut slack = n;
        let mut art = first_artificial;
        for (c, &needs) in lp.constraints.iter().zip(&needs_artificial) {
            let sign = if c.rhs.is_negative() { -BigRational::one() } else { BigRational::one() };
            let mut row = vec![BigRational::zero(); columns];
            for (v, a) in &c.terms {
                row[*v] = &row[*v] + a * &sign;
            }
            match c.relation {
                Relation::Le => {
                    row[slack] = sign.clone();
                    if !needs {
                        basis.push(slack);
                    }
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -sign.clone();
                    if !needs {
                        basis.push(slack);
                    }
                    slack += 1;
                }
                Relation::Eq => {}
            }
            if needs {
                row[art] = BigRational::one();
                basis.push(art);
                art += 1;
            }
            rows.push(row);
            rhs.push(&c.rhs * &sign);
        }
        Tableau { rows, rhs, basis, columns, first_artificial }
    }

    fn pivot(&mut self, r: usize, c: usize, cost: &mut [BigRational], value: &mut BigRational) {
        let p = self.rows[r][c].clone();
        if !p.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v = &*v / &p;
                }
            }
            self.rhs[r] = &self.rhs[r] / &p;
        }
        let nz: Vec<usize> = (0..self.columns).filter(|&k| !self.rows[r][k].is_zero()).collect();
        let prow = std::mem::take(&mut self.rows[r]);
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for &k in &nz {
                self.rows[i][k] = &self.rows[i][k] - &f * &prow[k];
            }
            self.rhs[i] = &self.rhs[i] - &f * &prhs;
        }
        if !cost[c].is_zero() {
            let f = cost[c].clone();
            for &k in &nz {
                cost[k] = &cost[k] - &f * &prow[k];
            }
            *value = &*value + &f * &prhs;
        }
        self.rows[r] = prow;
        self.basis[r] = c;
    }

    /// Bland's rule on reduced costs `cost`; `value` tracks the objective.
    /// Returns `false` when unbounded.
    fn optimize(&mut self, cost: &mut [BigRational], value: &mut BigRational, allowed: usize) -> bool {
        loop {
            let Some(enter) = (0..allowed).find(|&k| cost[k].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, BigRational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, enter, cost, value);
        }
    }

    fn run(mut self, objective: &[BigRational], n: usize) -> LpStatus {
        // Phase 1: minimize the sum of artificials.
        let mut cost = vec![BigRational::zero(); self.columns];
        let mut value = BigRational::zero();
        for k in self.first_artificial..self.columns {
            cost[k] = BigRational::one();
        }
        for i in 0..self.rows.len() {
            if self.basis[i] >= self.first_artificial {
                for k in 0..self.columns {
                    if !self.rows[i][k].is_zero() {
                        cost[k] = &cost[k] - &self.rows[i][k];
                    }
                }
                value = &value + &self.rhs[i];
            }
        }
        self.optimize(&mut cost, &mut value, self.columns);
        if value.is_positive() {
            return LpStatus::Infeasible;
        }

        // Drive remaining artificials out of the basis, dropping redundant rows.
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.first_artificial {
                match (0..self.first_artificial).find(|&k| !self.rows[i][k].is_zero()) {
                    Some(k) => {
                        let mut dummy = vec![BigRational::zero(); self.columns];
                        let mut z = BigRational::zero();
                        self.pivot(i, k, &mut dummy, &mut z);
                    }
                    None => {
                        self.rows.remove(i);
                        self.rhs.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }

        // Phase 2 on the original objective, artificial columns barred.
        let mut cost = vec![BigRational::zero(); self.columns];
        cost[..n].clone_from_slice(objective);
        let mut value = BigRational::zero();
        for i in 0..self.rows.len() {
            let cb = cost[self.basis[i]].clone();
            if cb.is_zero() {
                continue;
            }
            for k in 0..self.columns {
                if !self.rows[i][k].is_zero() {
                    cost[k] = &cost[k] - &cb * &self.rows[i][k];
                }
            }
            value = &value + &cb * &self.rhs[i];
        }
        if !self.optimize(&mut cost, &mut value, self.first_artificial) {
            return LpStatus::Unbounded;
        }
        let mut x = vec![BigRational::zero(); n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rhs[i].clone();
            }
        }
        LpStatus::Optimal { x, value }
    }
}
