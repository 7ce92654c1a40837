use super::{LinearProgram, LpError, LpSolution, LpSolver, LpStatus, Pricing, Sense, SolverOptions};

/// Dense bounded-variable revised simplex.
///
/// Rows are brought into the computational form `A x - s = 0` where the
/// logical `s_i` carries the row bounds. Rows whose logical starts outside
/// its bounds get an artificial column and phase one drives those to zero.
/// The basis inverse is kept explicitly and refreshed by Gauss-Jordan
/// elimination every `refactor_every` pivots, and before optimality or
/// unboundedness is declared. Dantzig pricing uses a two-pass ratio test and
/// skips entering columns whose pivot would be tiny relative to the column;
/// a basis found singular on refactorisation is repaired with logicals.
#[derive(Clone, Copy, Debug, Default)]
pub struct DenseSimplex;

impl LpSolver for DenseSimplex {
    fn solve(&self, lp: &LinearProgram, options: &SolverOptions) -> Result<LpSolution, LpError> {
        lp.validate()?;
        let mut state = State::new(lp, options);
        state.run(lp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Pos {
    Basic(usize),
    Lower,
    Upper,
    /// Nonbasic strictly between its bounds (free variables at zero, or a
    /// column dropped by basis repair); may move either way.
    Free,
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    One,
    Two,
}

enum Outcome {
    Optimal,
    Unbounded,
    IterLimit,
}

const DEGENERATE_RUN: usize = 50;
const SINGULAR_TOL: f64 = 1e-11;
/// Pivots below this fraction of the largest column entry are avoided.
const REL_PIVOT_TOL: f64 = 1e-7;

struct State<'a> {
    opts: &'a SolverOptions,
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    art_row: Vec<usize>,
    art_sign: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    pos: Vec<Pos>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    iters: usize,
    max_iters: usize,
    since_refactor: usize,
    cost_scale: f64,
    bound_scale: f64,
}

impl<'a> State<'a> {
    fn new(lp: &LinearProgram, opts: &'a SolverOptions) -> Self {
        let m = lp.num_rows();
        let n = lp.num_vars();

        // Column-major copy of the structural matrix with duplicates merged.
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, row) in lp.rows().iter().enumerate() {
            let mut coeffs = row.coeffs.clone();
            coeffs.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < coeffs.len() {
                let j = coeffs[k].0;
                let mut v = 0.0;
                while k < coeffs.len() && coeffs[k].0 == j {
                    v += coeffs[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    entries.push((j, i, v));
                }
            }
        }
        entries.sort_by_key(|&(j, i, _)| (j, i));
        let mut col_start = vec![0usize; n + 1];
        for &(j, _, _) in &entries {
            col_start[j + 1] += 1;
        }
        for j in 0..n {
            col_start[j + 1] += col_start[j];
        }
        let col_row = entries.iter().map(|e| e.1).collect();
        let col_val = entries.iter().map(|e| e.2).collect();

        let flip = match lp.sense() {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut lo: Vec<f64> = lp.lower().to_vec();
        let mut hi: Vec<f64> = lp.upper().to_vec();
        let mut cost: Vec<f64> = lp.cost().iter().map(|c| flip * c).collect();
        for row in lp.rows() {
            let (l, h) = row.bounds();
            lo.push(l);
            hi.push(h);
            cost.push(0.0);
        }

        let cost_scale = cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        let bound_scale = lo
            .iter()
            .chain(hi.iter())
            .filter(|v| v.is_finite())
            .fold(1.0f64, |a, v| a.max(v.abs()));
        let max_iters = opts.max_iters.unwrap_or(1000 + 50 * (m + n));

        State {
            opts,
            m,
            n,
            col_start,
            col_row,
            col_val,
            art_row: Vec::new(),
            art_sign: Vec::new(),
            lo,
            hi,
            cost,
            x: Vec::new(),
            pos: Vec::new(),
            basis: Vec::new(),
            binv: Vec::new(),
            iters: 0,
            max_iters,
            since_refactor: 0,
            cost_scale,
            bound_scale,
        }
    }

    fn ncols(&self) -> usize {
        self.n + self.m + self.art_row.len()
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n + self.m
    }

    #[inline]
    fn for_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                f(self.col_row[k], self.col_val[k]);
            }
        } else if j < self.n + self.m {
            f(j - self.n, -1.0);
        } else {
            let k = j - self.n - self.m;
            f(self.art_row[k], self.art_sign[k]);
        }
    }

    fn crash(&mut self) {
        let (m, n) = (self.m, self.n);
        self.x = vec![0.0; n + m];
        self.pos = vec![Pos::Lower; n + m];
        for j in 0..n {
            let (l, h) = (self.lo[j], self.hi[j]);
            if l.is_finite() {
                self.x[j] = l;
                self.pos[j] = Pos::Lower;
            } else if h.is_finite() {
                self.x[j] = h;
                self.pos[j] = Pos::Upper;
            } else {
                self.x[j] = 0.0;
                self.pos[j] = Pos::Free;
            }
        }
        let mut activity = vec![0.0; m];
        for j in 0..n {
            let v = self.x[j];
            if v != 0.0 {
                for k in self.col_start[j]..self.col_start[j + 1] {
                    activity[self.col_row[k]] += self.col_val[k] * v;
                }
            }
        }
        self.basis = vec![0; m];
        let mut diag = vec![0.0; m];
        for (i, &r) in activity.iter().enumerate() {
            let s = n + i;
            let (l, h) = (self.lo[s], self.hi[s]);
            let tol = self.opts.feas_tol;
            if r >= l - tol && r <= h + tol {
                self.x[s] = r;
                self.pos[s] = Pos::Basic(i);
                self.basis[i] = s;
                diag[i] = -1.0;
            } else {
                let bound = if r < l { l } else { h };
                self.x[s] = bound;
                self.pos[s] = if r < l { Pos::Lower } else { Pos::Upper };
                let sign = if bound - r >= 0.0 { 1.0 } else { -1.0 };
                let a = n + m + self.art_row.len();
                self.art_row.push(i);
                self.art_sign.push(sign);
                self.lo.push(0.0);
                self.hi.push(f64::INFINITY);
                self.cost.push(0.0);
                self.x.push((bound - r).abs());
                self.pos.push(Pos::Basic(i));
                self.basis[i] = a;
                diag[i] = sign;
            }
        }
        self.binv = vec![0.0; m * m];
        for i in 0..m {
            self.binv[i * m + i] = 1.0 / diag[i];
        }
    }

    fn phase_cost(&self, phase: Phase, j: usize) -> f64 {
        match phase {
            Phase::One => {
                if self.is_artificial(j) {
                    1.0
                } else {
                    0.0
                }
            }
            Phase::Two => self.cost[j],
        }
    }

    fn duals(&self, phase: Phase) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for i in 0..m {
            let cb = self.phase_cost(phase, self.basis[i]);
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, b) in y.iter_mut().zip(row) {
                    *yk += cb * b;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, phase: Phase, y: &[f64], j: usize) -> f64 {
        let mut d = self.phase_cost(phase, j);
        self.for_col(j, |r, v| d -= y[r] * v);
        d
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        let mut col: Vec<(usize, f64)> = Vec::new();
        self.for_col(j, |r, v| col.push((r, v)));
        for (i, a) in alpha.iter_mut().enumerate() {
            let row = &self.binv[i * m..(i + 1) * m];
            *a = col.iter().map(|&(r, v)| row[r] * v).sum();
        }
        alpha
    }

    /// Gauss-Jordan inverse of the basis with rank-revealing row choice.
    ///
    /// Returns the inverse (rows by basis slot) or the slots whose columns
    /// are dependent on earlier ones together with the rows left unpivoted.
    fn invert(&self) -> Result<Vec<f64>, (Vec<usize>, Vec<usize>)> {
        let m = self.m;
        let mut b = vec![0.0; m * m];
        for (k, &j) in self.basis.iter().enumerate() {
            self.for_col(j, |r, v| b[r * m + k] = v);
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        let mut row_of = vec![usize::MAX; m];
        let mut used = vec![false; m];
        let mut deficient = Vec::new();
        for k in 0..m {
            let mut piv = usize::MAX;
            let mut best = SINGULAR_TOL;
            for r in 0..m {
                if !used[r] && b[r * m + k].abs() > best {
                    best = b[r * m + k].abs();
                    piv = r;
                }
            }
            if piv == usize::MAX {
                deficient.push(k);
                continue;
            }
            used[piv] = true;
            row_of[k] = piv;
            let p = b[piv * m + k];
            for c in 0..m {
                b[piv * m + c] /= p;
                inv[piv * m + c] /= p;
            }
            for r in 0..m {
                if r != piv {
                    let f = b[r * m + k];
                    if f != 0.0 {
                        for c in 0..m {
                            b[r * m + c] -= f * b[piv * m + c];
                            inv[r * m + c] -= f * inv[piv * m + c];
                        }
                    }
                }
            }
        }
        if !deficient.is_empty() {
            let free_rows = (0..m).filter(|&r| !used[r]).collect();
            return Err((deficient, free_rows));
        }
        let mut out = vec![0.0; m * m];
        for k in 0..m {
            let r = row_of[k];
            out[k * m..(k + 1) * m].copy_from_slice(&inv[r * m..(r + 1) * m]);
        }
        Ok(out)
    }

    /// Rebuilds the basis inverse and the basic values from scratch. A
    /// singular basis is repaired by swapping the dependent columns for the
    /// logicals of the uncovered rows; the dropped columns keep their values.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let inv = match self.invert() {
            Ok(inv) => inv,
            Err((slots, rows)) => {
                for (&k, &r) in slots.iter().zip(&rows) {
                    let logical = self.n + r;
                    if matches!(self.pos[logical], Pos::Basic(_)) {
                        return Err(LpError::SingularBasis {
                            row: r,
                            column: self.basis[k],
                        });
                    }
                    let out = self.basis[k];
                    self.pos[out] = if self.x[out] <= self.lo[out] {
                        self.x[out] = self.lo[out];
                        Pos::Lower
                    } else if self.x[out] >= self.hi[out] {
                        self.x[out] = self.hi[out];
                        Pos::Upper
                    } else {
                        Pos::Free
                    };
                    self.basis[k] = logical;
                    self.pos[logical] = Pos::Basic(k);
                }
                self.invert().map_err(|(slots, rows)| LpError::SingularBasis {
                    row: rows[0],
                    column: self.basis[slots[0]],
                })?
            }
        };
        self.binv = inv;
        self.since_refactor = 0;

        // x_B = -B^{-1} (N x_N)
        let mut rhs = vec![0.0; m];
        for j in 0..self.ncols() {
            if matches!(self.pos[j], Pos::Basic(_)) {
                continue;
            }
            let v = self.x[j];
            if v != 0.0 {
                self.for_col(j, |r, a| rhs[r] += a * v);
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let v: f64 = row.iter().zip(&rhs).map(|(a, b)| a * b).sum();
            self.x[self.basis[i]] = -v;
        }
        Ok(())
    }

    fn eligible(&self, j: usize, d: f64, tol: f64) -> bool {
        if self.lo[j] == self.hi[j] {
            return false;
        }
        match self.pos[j] {
            Pos::Basic(_) => false,
            Pos::Lower => d < -tol,
            Pos::Upper => d > tol,
            Pos::Free => (d < -tol && self.x[j] < self.hi[j]) || (d > tol && self.x[j] > self.lo[j]),
        }
    }

    fn iterate(&mut self, phase: Phase) -> Result<Outcome, LpError> {
        let m = self.m;
        let dtol = match phase {
            Phase::One => self.opts.opt_tol,
            Phase::Two => self.opts.opt_tol * self.cost_scale,
        };
        let ptol = self.opts.pivot_tol;
        let mut degenerate_run = 0usize;
        // Columns whose pivot was too small relative to their column this
        // round; cleared after every basis change.
        let mut rejected = vec![false; self.ncols()];
        let mut any_rejected = false;
        let mut allow_small = false;
        loop {
            if self.iters >= self.max_iters {
                return Ok(Outcome::IterLimit);
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor()?;
            }
            let bland = match self.opts.pricing {
                Pricing::Bland => true,
                Pricing::Dantzig => degenerate_run >= DEGENERATE_RUN,
            };

            let y = self.duals(phase);
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.ncols() {
                if matches!(self.pos[j], Pos::Basic(_)) || self.lo[j] == self.hi[j] || rejected[j] {
                    continue;
                }
                let d = self.reduced_cost(phase, &y, j);
                if !self.eligible(j, d, dtol) {
                    continue;
                }
                if bland {
                    entering = Some((j, d));
                    break;
                }
                match entering {
                    Some((_, best)) if d.abs() <= best.abs() => {}
                    _ => entering = Some((j, d)),
                }
            }
            let Some((q, dq)) = entering else {
                if any_rejected {
                    // Retry the rejected columns on a fresh inverse, and
                    // accept small pivots if they are still the only ones.
                    if self.since_refactor > 0 {
                        self.refactor()?;
                    } else {
                        allow_small = true;
                    }
                    rejected.iter_mut().for_each(|r| *r = false);
                    any_rejected = false;
                    continue;
                }
                // Confirm on a fresh inverse before stopping.
                if self.since_refactor > 0 {
                    self.refactor()?;
                    continue;
                }
                return Ok(Outcome::Optimal);
            };
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };
            let alpha = self.ftran(q);

            // Ratio test. Dantzig mode uses a two-pass (Harris) test: bound
            // violations up to `feas_tol` are tolerated so that, among
            // near-tied rows, the largest pivot can be taken.
            let ratio = |i: usize, slack: f64| -> Option<(f64, bool)> {
                let a = alpha[i];
                if a.abs() <= ptol {
                    return None;
                }
                let delta = -dir * a;
                let b = self.basis[i];
                if delta < 0.0 {
                    self.lo[b]
                        .is_finite()
                        .then(|| (((self.x[b] - self.lo[b] + slack) / -delta).max(0.0), false))
                } else {
                    self.hi[b]
                        .is_finite()
                        .then(|| (((self.hi[b] - self.x[b] + slack) / delta).max(0.0), true))
                }
            };
            let mut theta = f64::INFINITY;
            let mut leave: Option<(usize, bool)> = None; // (slot, hits upper)
            if bland {
                for i in 0..m {
                    let Some((t, to_upper)) = ratio(i, 0.0) else { continue };
                    let better = match leave {
                        None => true,
                        Some((li, _)) => {
                            let eps = 1e-12 * (1.0 + theta);
                            t < theta - eps || (t <= theta + eps && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        theta = if leave.is_none() { t } else { t.min(theta) };
                        leave = Some((i, to_upper));
                    }
                }
            } else {
                let relaxed = (0..m)
                    .filter_map(|i| ratio(i, self.opts.feas_tol))
                    .fold(f64::INFINITY, |a, (t, _)| a.min(t));
                if relaxed.is_finite() {
                    for i in 0..m {
                        let Some((t, to_upper)) = ratio(i, 0.0) else { continue };
                        if t > relaxed {
                            continue;
                        }
                        let better = match leave {
                            None => true,
                            Some((li, _)) => {
                                let (a, b) = (alpha[i].abs(), alpha[li].abs());
                                a > b || (a == b && self.basis[i] < self.basis[li])
                            }
                        };
                        if better {
                            theta = t;
                            leave = Some((i, to_upper));
                        }
                    }
                }
            }
            let span = if dir > 0.0 { self.hi[q] - self.x[q] } else { self.x[q] - self.lo[q] };
            let flip = span.is_finite() && span <= theta;
            if leave.is_none() && !flip {
                if self.since_refactor > 0 {
                    self.refactor()?;
                    continue;
                }
                return Ok(Outcome::Unbounded);
            }
            if let (Some((r, _)), false, false) = (leave, flip, allow_small) {
                let amax = alpha.iter().fold(1.0f64, |a, v| a.max(v.abs()));
                if alpha[r].abs() < REL_PIVOT_TOL * amax {
                    rejected[q] = true;
                    any_rejected = true;
                    continue;
                }
            }
            self.iters += 1;

            let step = if flip { span } else { theta };
            if step <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            if step != 0.0 {
                for i in 0..m {
                    if alpha[i] != 0.0 {
                        let b = self.basis[i];
                        self.x[b] -= dir * step * alpha[i];
                    }
                }
            }
            if flip {
                if dir > 0.0 {
                    self.x[q] = self.hi[q];
                    self.pos[q] = Pos::Upper;
                } else {
                    self.x[q] = self.lo[q];
                    self.pos[q] = Pos::Lower;
                }
                continue;
            }

            let (r, to_upper) = leave.expect("leaving variable");
            let out = self.basis[r];
            self.x[q] += dir * step;
            if to_upper {
                self.x[out] = self.hi[out];
                self.pos[out] = Pos::Upper;
            } else {
                self.x[out] = self.lo[out];
                self.pos[out] = Pos::Lower;
            }
            self.pos[q] = Pos::Basic(r);
            self.basis[r] = q;

            let pr = alpha[r];
            let pivot_row: Vec<f64> = self.binv[r * m..(r + 1) * m].iter().map(|v| v / pr).collect();
            for i in 0..m {
                if i == r || alpha[i] == 0.0 {
                    continue;
                }
                let f = alpha[i];
                let row = &mut self.binv[i * m..(i + 1) * m];
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
            self.binv[r * m..(r + 1) * m].copy_from_slice(&pivot_row);
            self.since_refactor += 1;
            if any_rejected {
                rejected.iter_mut().for_each(|r| *r = false);
                any_rejected = false;
            }
            allow_small = false;
        }
    }

    fn run(&mut self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        self.crash();

        if !self.art_row.is_empty() {
            let mut outcome = self.iterate(Phase::One)?;
            self.refactor()?;
            if matches!(outcome, Outcome::Unbounded) {
                // Only reachable through round-off; retry on a fresh inverse.
                outcome = self.iterate(Phase::One)?;
                self.refactor()?;
            }
            let infeas: f64 = (self.n + self.m..self.ncols()).map(|j| self.x[j].max(0.0)).sum();
            match outcome {
                Outcome::IterLimit => return Ok(self.finish(lp, LpStatus::IterLimit)),
                Outcome::Unbounded => return Err(LpError::Numerical("phase one found an unbounded ray")),
                Outcome::Optimal => {}
            }
            if infeas > self.opts.feas_tol * (1.0 + self.bound_scale) {
                return Ok(self.finish(lp, LpStatus::Infeasible));
            }
            for j in self.n + self.m..self.ncols() {
                self.lo[j] = 0.0;
                self.hi[j] = 0.0;
                if !matches!(self.pos[j], Pos::Basic(_)) {
                    self.x[j] = 0.0;
                }
            }
        }

        let outcome = self.iterate(Phase::Two)?;
        self.refactor()?;
        let status = match outcome {
            Outcome::Optimal => LpStatus::Optimal,
            Outcome::Unbounded => LpStatus::Unbounded,
            Outcome::IterLimit => LpStatus::IterLimit,
        };
        Ok(self.finish(lp, status))
    }

    fn finish(&self, lp: &LinearProgram, status: LpStatus) -> LpSolution {
        let primal: Vec<f64> = self.x[..self.n].to_vec();
        let objective = lp.objective_value(&primal);
        let (duals, reduced_costs) = if self.opts.want_duals && status == LpStatus::Optimal {
            let flip = match lp.sense() {
                Sense::Minimize => 1.0,
                Sense::Maximize => -1.0,
            };
            let y = self.duals(Phase::Two);
            let rc: Vec<f64> = (0..self.n)
                .map(|j| {
                    if matches!(self.pos[j], Pos::Basic(_)) {
                        0.0
                    } else {
                        flip * self.reduced_cost(Phase::Two, &y, j)
                    }
                })
                .collect();
            (Some(y.iter().map(|v| flip * v).collect()), Some(rc))
        } else {
            (None, None)
        };
        let mut basis = self.basis.clone();
        basis.sort_unstable();
        LpSolution {
            status,
            primal,
            objective,
            duals,
            reduced_costs,
            basis,
            iterations: self.iters,
        }
    }
}
