use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::FormDescriptor;
use crate::measures::StieltjesMeasure;
use crate::scale::ScaleFunction;
use crate::sets::{Membership, NearlyClosedSet};

/// Bisection steps for quantiles.
const QUANTILE_STEPS: u32 = 200;

/// Continuous-time chain on finitely many states of `E`. A killed endpoint
/// is kept as an absorbing first or last state with zero mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainModel {
    states: Vec<f64>,
    masses: Vec<f64>,
    absorbing_left: bool,
    absorbing_right: bool,
    /// Outgoing `(target, rate)` per state.
    rates: Vec<Vec<(usize, f64)>>,
}

impl ChainModel {
    /// Nearest-neighbour chain with `q(i, i±1) = 1 / (2 μ_i |x_{i±1} - x_i|)`.
    pub fn new(
        states: Vec<f64>,
        masses: Vec<f64>,
        absorbing_left: bool,
        absorbing_right: bool,
    ) -> Result<Self> {
        let n = states.len();
        if n < 2 {
            return Err(Error::TooFewStates(n));
        }
        if masses.len() != n {
            return Err(Error::InvalidMeasure(format!(
                "{n} states but {} masses",
                masses.len()
            )));
        }
        if states.iter().any(|x| !x.is_finite()) || states.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidSet(
                "chain states must be finite and strictly increasing".into(),
            ));
        }
        let mut masses = masses;
        let absorbing = |i: usize| (i == 0 && absorbing_left) || (i == n - 1 && absorbing_right);
        for (i, m) in masses.iter_mut().enumerate() {
            if absorbing(i) {
                *m = 0.0;
            } else if !(*m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidMeasure(format!(
                    "state {} has mass {m}",
                    states[i]
                )));
            }
        }
        let rates = (0..n)
            .map(|i| {
                if absorbing(i) {
                    return Vec::new();
                }
                let mut row = Vec::with_capacity(2);
                if i > 0 {
                    row.push((i - 1, 1.0 / (2.0 * masses[i] * (states[i] - states[i - 1]))));
                }
                if i + 1 < n {
                    row.push((i + 1, 1.0 / (2.0 * masses[i] * (states[i + 1] - states[i]))));
                }
                row
            })
            .collect();
        Ok(ChainModel {
            states,
            masses,
            absorbing_left,
            absorbing_right,
            rates,
        })
    }

    /// Chain whose states are the atoms of a purely atomic `μ`.
    pub fn from_atomic(mu: &StieltjesMeasure) -> Result<Self> {
        if !mu.is_purely_atomic() {
            return Err(Error::Unsupported("measure is not purely atomic".into()));
        }
        let (xs, ws): (Vec<f64>, Vec<f64>) = mu.atoms().iter().copied().unzip();
        ChainModel::new(xs, ws, false, false)
    }

    /// Adds a rate from `i` to `j` (for auditing corrupted models).
    pub fn with_extra_rate(mut self, i: usize, j: usize, q: f64) -> Self {
        self.rates[i].push((j, q));
        self
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn is_absorbing(&self, i: usize) -> bool {
        self.rates[i].is_empty()
    }

    pub fn absorbing_ends(&self) -> (bool, bool) {
        (self.absorbing_left, self.absorbing_right)
    }

    pub fn rates_from(&self, i: usize) -> &[(usize, f64)] {
        &self.rates[i]
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[i].iter().filter(|r| r.0 == j).map(|r| r.1).sum()
    }

    pub fn total_rate(&self, i: usize) -> f64 {
        self.rates[i].iter().map(|r| r.1).sum()
    }

    pub fn is_skip_free(&self) -> bool {
        self.rates
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().all(|&(j, q)| q == 0.0 || i.abs_diff(j) == 1))
    }

    pub fn index_of(&self, x: f64) -> Option<usize> {
        self.states.iter().position(|&s| s == x)
    }

    /// State closest to `x`, ties going left.
    pub fn nearest_state(&self, x: f64) -> f64 {
        let i = self.states.partition_point(|&s| s < x);
        match (
            i.checked_sub(1).map(|j| self.states[j]),
            self.states.get(i).copied(),
        ) {
            (Some(a), Some(b)) => {
                if x - a <= b - x {
                    a
                } else {
                    b
                }
            }
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => unreachable!("a chain has states"),
        }
    }

    /// Largest relative gap between `μ_i q_ij` and `μ_j q_ji` over pairs of
    /// non-absorbing states.
    pub fn detailed_balance_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            for &(j, _) in &self.rates[i] {
                if self.is_absorbing(i) || self.is_absorbing(j) {
                    continue;
                }
                let (a, b) = (
                    self.masses[i] * self.rate(i, j),
                    self.masses[j] * self.rate(j, i),
                );
                worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
            }
        }
        worst
    }

    /// `(L f)(x_i) = Σ_j q_ij (f_j - f_i)`.
    pub fn generator_apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.rates[i].iter().map(|&(j, q)| q * (f[j] - f[i])).sum())
            .collect()
    }

    /// `-Σ_i (L f)(x_i) g(x_i) μ_i`.
    pub fn generator_form(&self, f: &[f64], g: &[f64]) -> f64 {
        let lf = self.generator_apply(f);
        -(0..self.len())
            .map(|i| lf[i] * g[i] * self.masses[i])
            .sum::<f64>()
    }

    /// The natural-scale form on the states with `μ = Σ μ_i δ_{x_i}`.
    pub fn form(&self) -> Result<FormDescriptor> {
        if self.absorbing_left || self.absorbing_right {
            return Err(Error::Unsupported(
                "killed chains have no point-set form".into(),
            ));
        }
        let e = NearlyClosedSet::points(&self.states)?;
        let atoms: Vec<(f64, f64)> = self
            .states
            .iter()
            .copied()
            .zip(self.masses.iter().copied())
            .collect();
        FormDescriptor::new(
            e.clone(),
            ScaleFunction::natural(&e),
            StieltjesMeasure::atomic(&atoms)?,
        )
    }

    fn state_index(&self, x: f64) -> Result<usize> {
        self.index_of(x).ok_or(Error::NotReachable(x))
    }

    /// Tridiagonal system on the states strictly between `ia` and `ib`:
    /// `Σ_j q_ij (u_j - u_i) = rhs_i` with the given boundary values.
    fn solve_between(&self, ia: usize, ib: usize, ua: f64, ub: f64, rhs: f64) -> Result<Vec<f64>> {
        if !self.is_skip_free() {
            return Err(Error::Unsupported(
                "exact solvers need a nearest-neighbour chain".into(),
            ));
        }
        let m = ib - ia - 1;
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m];
        let mut b = vec![rhs; m];
        for k in 0..m {
            let i = ia + 1 + k;
            let down = self.rate(i, i - 1);
            let up = self.rate(i, i + 1);
            diag[k] = -(down + up);
            if k == 0 {
                b[k] -= down * ua;
            } else {
                sub[k] = down;
            }
            if k + 1 == m {
                b[k] -= up * ub;
            } else {
                sup[k] = up;
            }
        }
        let mut u = thomas(&sub, &diag, &sup, &b);
        u.insert(0, ua);
        u.push(ub);
        Ok(u)
    }
}

/// Tridiagonal solve by forward elimination and back substitution.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    if n == 0 {
        return Vec::new();
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / den;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

fn check_order(a: f64, x: f64, b: f64) -> Result<()> {
    if !(a <= x && x <= b && a < b) {
        return Err(Error::DomainViolation(format!(
            "need a <= x <= b, got {a}, {x}, {b}"
        )));
    }
    Ok(())
}

/// `P_x(T_a < T_b)`.
pub fn hitting_prob_exact(c: &ChainModel, x: f64, a: f64, b: f64) -> Result<f64> {
    check_order(a, x, b)?;
    let (ia, ib, ix) = (c.state_index(a)?, c.state_index(b)?, c.state_index(x)?);
    if ix == ia {
        return Ok(1.0);
    }
    if ix == ib {
        return Ok(0.0);
    }
    Ok(c.solve_between(ia, ib, 1.0, 0.0, 0.0)?[ix - ia])
}

/// `E_x[T_a ∧ T_b]`.
pub fn exit_time_exact(c: &ChainModel, x: f64, a: f64, b: f64) -> Result<f64> {
    check_order(a, x, b)?;
    let (ia, ib, ix) = (c.state_index(a)?, c.state_index(b)?, c.state_index(x)?);
    if ix == ia || ix == ib {
        return Ok(0.0);
    }
    Ok(c.solve_between(ia, ib, 0.0, 0.0, -1.0)?[ix - ia])
}

/// Point of `E` nearest to `x`.
fn snap(e: &NearlyClosedSet, x: f64) -> f64 {
    if e.contains(x, 64) != Membership::Out {
        return x;
    }
    match (e.floor_point(x), e.ceil_point(x)) {
        (Some(a), Some(b)) => {
            if x - a <= b - x {
                a
            } else {
                b
            }
        }
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => x,
    }
}

/// Chain approximation of a natural-scale form with `n` states spaced at
/// equal `μ`-quantiles. Each state carries the `μ`-mass of its Voronoi
/// cell. Purely atomic `μ` with at most `n` atoms gives the exact chain on
/// the atoms.
pub fn discretize(form: &FormDescriptor, n: usize) -> Result<ChainModel> {
    if n < 2 {
        return Err(Error::TooFewStates(n));
    }
    if !form.scale().is_natural() {
        return Err(Error::NotNaturalScale);
    }
    let e = form.state_space();
    if !e.is_bounded() {
        return Err(Error::Unbounded);
    }
    let mu = form.mu();
    let (kill_l, kill_r) = (!e.l_in_e(), !e.r_in_e());
    let mut states: Vec<f64>;
    let mut masses: Vec<f64>;
    if mu.is_purely_atomic() && mu.atoms().len() <= n {
        states = mu.atoms().iter().map(|a| a.0).collect();
        masses = mu.atoms().iter().map(|a| a.1).collect();
    } else {
        let tol = 1e-12;
        let total = mu.total_mass(tol).mid();
        let (l, r) = (e.l(), e.r());
        let below = |x: f64| mu.mass_between(f64::NEG_INFINITY, x, true, true, tol).mid();
        states = Vec::with_capacity(n);
        for k in 0..n {
            let level = total * k as f64 / (n - 1) as f64;
            let (mut lo, mut hi) = (l, r);
            for _ in 0..QUANTILE_STEPS {
                let mid = 0.5 * (lo + hi);
                if !(mid > lo && mid < hi) {
                    break;
                }
                if below(mid) >= level {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            states.push(snap(e, hi));
        }
        if e.l_in_e() {
            states[0] = l;
        }
        if e.r_in_e() {
            states[n - 1] = r;
        }
        states.sort_by(f64::total_cmp);
        states.dedup();
        loop {
            let cuts: Vec<f64> = states.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            masses = (0..states.len())
                .map(|i| {
                    let lo = if i == 0 {
                        f64::NEG_INFINITY
                    } else {
                        cuts[i - 1]
                    };
                    let hi = if i + 1 == states.len() {
                        f64::INFINITY
                    } else {
                        cuts[i]
                    };
                    mu.mass_between(lo, hi, true, false, tol).mid()
                })
                .collect();
            match masses.iter().position(|&m| !(m > 0.0)) {
                Some(i) if states.len() > 2 => {
                    states.remove(i);
                }
                _ => break,
            }
        }
    }
    if kill_l && e.l().is_finite() {
        states.insert(0, e.l());
        masses.insert(0, 0.0);
    }
    if kill_r && e.r().is_finite() {
        states.push(e.r());
        masses.push(0.0);
    }
    ChainModel::new(states, masses, kill_l, kill_r)
}
