//! Dense two-phase simplex for the small linear programs behind the exact
//! commutative-kind order decisions: convex-domination tests, complement
//! polyhedron evaluations and state separation.
//!
//! Problems here have at most a few dozen variables, so a plain tableau with
//! Bland's rule is adequate and keeps the dependency set lean.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// minimize objective . x subject to the rows, with all variables either
/// nonnegative or free (split internally).
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub nvars: usize,
    pub nonneg: bool,
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Cmp, f64)>,
}

impl LinearProgram {
    pub fn new(nvars: usize, nonneg: bool) -> Self {
        LinearProgram {
            nvars,
            nonneg,
            objective: vec![0.0; nvars],
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>, cmp: Cmp, rhs: f64) {
        assert_eq!(row.len(), self.nvars);
        self.rows.push((row, cmp, rhs));
    }
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// (m+1) x (n+1); last row is the objective, last column the rhs.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let m = self.t.len();
        let piv = self.t[row][col];
        let inv = 1.0 / piv;
        for v in self.t[row].iter_mut() {
            *v *= inv;
        }
        for r in 0..m {
            if r != row {
                let f = self.t[r][col];
                if f != 0.0 {
                    for c in 0..=self.ncols {
                        let delta = f * self.t[row][c];
                        self.t[r][c] -= delta;
                    }
                }
            }
        }
        self.basis[row] = col;
    }

    /// Bland's rule: returns false when optimal, errors via None on unbounded.
    fn run(&mut self, allowed: &dyn Fn(usize) -> bool, tol: f64) -> Option<()> {
        let m = self.t.len() - 1;
        loop {
            let obj = self.t.len() - 1;
            let mut entering = None;
            for c in 0..self.ncols {
                if allowed(c) && self.t[obj][c] < -tol {
                    entering = Some(c);
                    break;
                }
            }
            let col = match entering {
                Some(c) => c,
                None => return Some(()),
            };
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..m {
                let coef = self.t[r][col];
                if coef > tol {
                    let ratio = self.t[r][self.ncols] / coef;
                    match leaving {
                        None => leaving = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - tol
                                || ((ratio - lratio).abs() <= tol
                                    && self.basis[r] < self.basis[lr])
                            {
                                leaving = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            match leaving {
                Some((r, _)) => self.pivot(r, col),
                None => return None, // unbounded
            }
        }
    }
}

pub fn minimize(lp: &LinearProgram, tol: f64) -> LpOutcome {
    // Variable layout: originals (split in two when free), then slacks, then
    // artificials.
    let base = if lp.nonneg { lp.nvars } else { 2 * lp.nvars };
    let nslack = lp
        .rows
        .iter()
        .filter(|(_, cmp, _)| *cmp != Cmp::Eq)
        .count();
    let m = lp.rows.len();
    let ncols = base + nslack + m;
    let mut t = vec![vec![0.0; ncols + 1]; m + 1];
    let mut slack_idx = base;
    for (r, (row, cmp, rhs)) in lp.rows.iter().enumerate() {
        let flip = *rhs < 0.0;
        let sign = if flip { -1.0 } else { 1.0 };
        for (j, &a) in row.iter().enumerate() {
            if lp.nonneg {
                t[r][j] = sign * a;
            } else {
                t[r][2 * j] = sign * a;
                t[r][2 * j + 1] = -sign * a;
            }
        }
        match cmp {
            Cmp::Le => {
                t[r][slack_idx] = sign;
                slack_idx += 1;
            }
            Cmp::Ge => {
                t[r][slack_idx] = -sign;
                slack_idx += 1;
            }
            Cmp::Eq => {}
        }
        t[r][base + nslack + r] = 1.0;
        t[r][ncols] = sign * rhs;
    }
    // Phase-1 objective: sum of artificials, expressed in reduced form.
    for c in 0..=ncols {
        let mut s = 0.0;
        for r in 0..m {
            s += t[r][c];
        }
        t[m][c] = -s;
    }
    for r in 0..m {
        t[m][base + nslack + r] = 0.0;
    }
    let mut tab = Tableau {
        t,
        basis: (0..m).map(|r| base + nslack + r).collect(),
        ncols,
    };
    if tab.run(&|_| true, tol).is_none() {
        // Phase 1 is bounded below by construction; treat as numerical trouble.
        return LpOutcome::Infeasible;
    }
    let phase1 = -tab.t[m][ncols];
    if phase1 > tol * 10.0 {
        return LpOutcome::Infeasible;
    }
    // Drive artificials out of the basis; drop redundant rows.
    let art_start = base + nslack;
    let mut r = 0;
    while r < tab.t.len() - 1 {
        if tab.basis[r] >= art_start {
            let mut pivoted = false;
            for c in 0..art_start {
                if tab.t[r][c].abs() > tol * 10.0 {
                    tab.pivot(r, c);
                    pivoted = true;
                    break;
                }
            }
            if !pivoted {
                tab.t.remove(r);
                tab.basis.remove(r);
                continue;
            }
        }
        r += 1;
    }
    // Phase-2 objective.
    let m2 = tab.t.len() - 1;
    let obj = tab.t.len() - 1;
    for c in 0..=ncols {
        tab.t[obj][c] = 0.0;
    }
    for j in 0..lp.nvars {
        if lp.nonneg {
            tab.t[obj][j] = lp.objective[j];
        } else {
            tab.t[obj][2 * j] = lp.objective[j];
            tab.t[obj][2 * j + 1] = -lp.objective[j];
        }
    }
    for r in 0..m2 {
        let b = tab.basis[r];
        let cost = tab.t[obj][b];
        if cost != 0.0 {
            for c in 0..=ncols {
                let delta = cost * tab.t[r][c];
                tab.t[obj][c] -= delta;
            }
        }
    }
    match tab.run(&|c| c < art_start, tol) {
        None => LpOutcome::Unbounded,
        Some(()) => {
            let mut xfull = vec![0.0; ncols];
            for (r, &b) in tab.basis.iter().enumerate() {
                xfull[b] = tab.t[r][ncols];
            }
            let x: Vec<f64> = (0..lp.nvars)
                .map(|j| {
                    if lp.nonneg {
                        xfull[j]
                    } else {
                        xfull[2 * j] - xfull[2 * j + 1]
                    }
                })
                .collect();
            let value = x
                .iter()
                .zip(&lp.objective)
                .map(|(a, b)| a * b)
                .sum();
            LpOutcome::Optimal { x, value }
        }
    }
}

/// Is the feasible region nonempty?
pub fn feasible(lp: &LinearProgram, tol: f64) -> bool {
    matches!(minimize(lp, tol), LpOutcome::Optimal { .. })
}

/// Does `target` dominate some convex combination of `gens` componentwise?
pub fn dominates_convex_combination(target: &[f64], gens: &[&[f64]], tol: f64) -> bool {
    let k = gens.len();
    let m = target.len();
    let mut lp = LinearProgram::new(k, true);
    for i in 0..m {
        let row: Vec<f64> = gens.iter().map(|g| g[i]).collect();
        lp.push(row, Cmp::Le, target[i] + tol);
    }
    lp.push(vec![1.0; k], Cmp::Eq, 1.0);
    feasible(&lp, 1e-9)
}

/// Is some convex combination of `gens` dominated by `target` replaced by the
/// dual direction: does `target` lie below a convex combination?
pub fn dominated_by_convex_combination(target: &[f64], gens: &[&[f64]], tol: f64) -> bool {
    let k = gens.len();
    let m = target.len();
    let mut lp = LinearProgram::new(k, true);
    for i in 0..m {
        let row: Vec<f64> = gens.iter().map(|g| -g[i]).collect();
        lp.push(row, Cmp::Le, -(target[i] - tol));
    }
    lp.push(vec![1.0; k], Cmp::Eq, 1.0);
    feasible(&lp, 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_minimum() {
        // min x + y s.t. x + 2y >= 4, 3x + y >= 6, x,y >= 0 -> (1.6, 1.2)
        let mut lp = LinearProgram::new(2, true);
        lp.objective = vec![1.0, 1.0];
        lp.push(vec![1.0, 2.0], Cmp::Ge, 4.0);
        lp.push(vec![3.0, 1.0], Cmp::Ge, 6.0);
        match minimize(&lp, 1e-9) {
            LpOutcome::Optimal { x, value } => {
                assert!((x[0] - 1.6).abs() < 1e-7, "{x:?}");
                assert!((x[1] - 1.2).abs() < 1e-7);
                assert!((value - 2.8).abs() < 1e-7);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn infeasible_detected() {
        let mut lp = LinearProgram::new(1, true);
        lp.push(vec![1.0], Cmp::Le, -1.0);
        assert!(matches!(minimize(&lp, 1e-9), LpOutcome::Infeasible));
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(1, false);
        lp.objective = vec![1.0];
        lp.push(vec![1.0], Cmp::Le, 5.0);
        assert!(matches!(minimize(&lp, 1e-9), LpOutcome::Unbounded));
    }

    #[test]
    fn free_variables() {
        // min x s.t. x >= -3 -> -3
        let mut lp = LinearProgram::new(1, false);
        lp.objective = vec![1.0];
        lp.push(vec![1.0], Cmp::Ge, -3.0);
        match minimize(&lp, 1e-9) {
            LpOutcome::Optimal { x, value } => {
                assert!((x[0] + 3.0).abs() < 1e-7);
                assert!((value + 3.0).abs() < 1e-7);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn convex_domination() {
        // (2,2) dominates the midpoint of (1,2) and (2,1)? componentwise yes at t in [0,1].
        assert!(dominates_convex_combination(
            &[2.0, 2.0],
            &[&[1.0, 2.0], &[2.0, 1.0]],
            1e-9
        ));
        // (1,1) does not dominate any convex combination of them.
        assert!(!dominates_convex_combination(
            &[1.0, 1.0],
            &[&[1.0, 2.0], &[2.0, 1.0]],
            1e-9
        ));
        // degenerate single generator
        assert!(dominates_convex_combination(&[1.0], &[&[1.0]], 1e-9));
    }
}
