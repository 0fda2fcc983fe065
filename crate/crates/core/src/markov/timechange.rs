//! `X_t = W_{T_t}` with `T` the right inverse of `S_t = ∫ ℓ^W(t, x) m(dx)`,
//! for `W` replaced by the simple random walk on a grid of step `h`.
//!
//! A walk of step `h` spends time `h²` per step, so each visit to a grid node
//! adds `h/2` to its local time. The node collects the `m`-mass of its grid
//! cell, and every visit advances `S` by `(h/2) m(cell)`. Nodes of zero
//! mass are crossed in one move using the gambler's-ruin law; the number of
//! visits to a massive node before the walk reaches another one is
//! geometric, so a path costs one draw per move of `X`.

use rand::Rng;
use rand_distr::{Distribution, Geometric};

use super::sim::{path_rng, PathSample, Terminal};
use crate::error::{Error, Result};
use crate::measures::StieltjesMeasure;

/// Where a walk leaving a massive node in one direction ends up.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Exit {
    /// Reaches the adjacent massive node with this probability.
    Node(f64),
    /// Reaches the killing endpoint with this probability.
    Kill(f64),
    /// Always comes back.
    Never,
}

impl Exit {
    fn prob(self) -> f64 {
        match self {
            Exit::Node(p) | Exit::Kill(p) => p,
            Exit::Never => 0.0,
        }
    }
}

/// Precomputed grid for a speed function `m`.
#[derive(Clone, Debug)]
pub struct TimeChange {
    h: f64,
    base: f64,
    nodes: usize,
    kill_left: bool,
    kill_right: bool,
    /// Grid index, position and cell mass of every massive node.
    grid: Vec<usize>,
    pos: Vec<f64>,
    mass: Vec<f64>,
    left: Vec<Exit>,
    right: Vec<Exit>,
}

impl TimeChange {
    pub fn new(m: &StieltjesMeasure, grid_step: f64) -> Result<Self> {
        if !(grid_step > 0.0) {
            return Err(Error::DomainViolation(format!(
                "grid step {grid_step} must be positive"
            )));
        }
        let d = m.derive_state_space()?;
        if !d.qk_satisfied {
            return Err(Error::QkViolated);
        }
        let (l, r) = (d.l.0, d.r.0);
        if !(l.is_finite() && r.is_finite()) {
            return Err(Error::UnboundedSpace);
        }
        let (l0, r0) = (m.l0(), m.r0());
        let kill_left = l0.is_finite();
        let kill_right = r0.is_finite();
        let k = ((r - l) / grid_step).round().max(1.0) as usize;
        let h = (r - l) / k as f64;
        let at = |i: usize| if i == k { r } else { l + i as f64 * h };
        let tol = 1e-12;
        let mut cell = vec![0.0; k + 1];
        for (i, c) in cell.iter_mut().enumerate() {
            let lo = if i == 0 {
                f64::NEG_INFINITY
            } else {
                at(i) - 0.5 * h
            };
            let hi = if i == k {
                f64::INFINITY
            } else {
                at(i) + 0.5 * h
            };
            let (lo, lo_closed) = if lo <= l0 { (l0, false) } else { (lo, true) };
            let hi = hi.min(r0);
            *c = m.mass_between(lo, hi, lo_closed, false, tol).mid().max(0.0);
        }
        if kill_left {
            cell[1] += cell[0];
            cell[0] = 0.0;
        }
        if kill_right {
            cell[k - 1] += cell[k];
            cell[k] = 0.0;
        }
        let grid: Vec<usize> = (0..=k).filter(|&i| cell[i] > 0.0).collect();
        if grid.is_empty() {
            return Err(Error::TrivialMeasure);
        }
        let pos = grid.iter().map(|&i| at(i)).collect();
        let mass = grid.iter().map(|&i| cell[i]).collect();
        let n = grid.len();
        let left = (0..n)
            .map(|j| {
                if j > 0 {
                    Exit::Node(1.0 / (grid[j] - grid[j - 1]) as f64)
                } else if kill_left {
                    Exit::Kill(1.0 / grid[0] as f64)
                } else {
                    Exit::Never
                }
            })
            .collect();
        let right = (0..n)
            .map(|j| {
                if j + 1 < n {
                    Exit::Node(1.0 / (grid[j + 1] - grid[j]) as f64)
                } else if kill_right {
                    Exit::Kill(1.0 / (k - grid[n - 1]) as f64)
                } else {
                    Exit::Never
                }
            })
            .collect();
        Ok(TimeChange {
            h,
            base: l,
            nodes: k,
            kill_left,
            kill_right,
            grid,
            pos,
            mass,
            left,
            right,
        })
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// Positions of the grid nodes carrying mass.
    pub fn support(&self) -> &[f64] {
        &self.pos
    }

    /// Index used in path samples: killing points sit just outside the
    /// massive nodes.
    fn label(&self, j: usize) -> usize {
        j + 1
    }

    fn position_at(&self, i: usize) -> f64 {
        self.base + i as f64 * self.h
    }

    /// Starting node: `W_0 = x0` runs until it first meets mass. `Err`
    /// carries the side of a killing endpoint reached first.
    fn enter<R: Rng>(&self, x0: f64, rng: &mut R) -> std::result::Result<usize, bool> {
        let i = ((x0 - self.base) / self.h)
            .round()
            .clamp(0.0, self.nodes as f64) as usize;
        let right = self.grid.partition_point(|&g| g < i);
        if right < self.grid.len() && self.grid[right] == i {
            return Ok(right);
        }
        // ends of the massless run around i; `None` marks a reflecting edge
        let lo = if right > 0 {
            Some((self.grid[right - 1], Ok(right - 1)))
        } else {
            self.kill_left.then_some((0, Err(true)))
        };
        let hi = if right < self.grid.len() {
            Some((self.grid[right], Ok(right)))
        } else {
            self.kill_right.then_some((self.nodes, Err(false)))
        };
        match (lo, hi) {
            (Some((a, ea)), Some((b, eb))) => {
                if rng.gen::<f64>() * ((b - a) as f64) < (i - a) as f64 {
                    eb
                } else {
                    ea
                }
            }
            (Some((_, ea)), None) => ea,
            (None, Some((_, eb))) => eb,
            (None, None) => unreachable!("at least one massive node"),
        }
    }

    /// One path started from `W_0 = x0`, stopped on reaching a massive node
    /// within half a grid step of a point of `stop`.
    pub fn simulate(
        &self,
        x0: f64,
        horizon: f64,
        stop: &[f64],
        seed: u64,
        stream: u64,
    ) -> Result<PathSample> {
        if !(horizon > 0.0) {
            return Err(Error::DomainViolation(format!(
                "horizon {horizon} must be positive"
            )));
        }
        let mut rng = path_rng(seed, stream);
        let n = self.grid.len();
        let kill_label = |left: bool| if left { 0 } else { n + 1 };
        let mut j = match self.enter(x0, &mut rng) {
            Ok(j) => j,
            Err(left) => {
                let x = if left {
                    self.base
                } else {
                    self.position_at(self.nodes)
                };
                let mut p = PathSample::start(x, kill_label(left), seed, stream);
                p.terminal = Terminal::Absorbed;
                return Ok(p);
            }
        };
        let hits_stop = |j: usize| {
            stop.iter()
                .any(|&s| (s - self.pos[j]).abs() <= 0.5 * self.h)
        };
        let mut path = PathSample::start(self.pos[j], self.label(j), seed, stream);
        let mut t = 0.0;
        loop {
            if hits_stop(j) {
                path.terminal = Terminal::Stopped;
                break;
            }
            let (pl, pr) = (self.left[j].prob(), self.right[j].prob());
            let leave = 0.5 * (pl + pr);
            if !(leave > 0.0) {
                t = horizon;
                break;
            }
            let visits = 1 + Geometric::new(leave)
                .expect("probability in (0, 1]")
                .sample(&mut rng);
            let dt = visits as f64 * 0.5 * self.h * self.mass[j];
            if t + dt > horizon {
                t = horizon;
                break;
            }
            t += dt;
            let go_right = rng.gen::<f64>() * (pl + pr) < pr;
            let exit = if go_right {
                self.right[j]
            } else {
                self.left[j]
            };
            match exit {
                Exit::Node(_) => {
                    j = if go_right { j + 1 } else { j - 1 };
                    path.push(t, self.pos[j], self.label(j));
                }
                Exit::Kill(_) => {
                    let x = if go_right {
                        self.position_at(self.nodes)
                    } else {
                        self.base
                    };
                    path.push(t, x, kill_label(!go_right));
                    path.terminal = Terminal::Absorbed;
                    break;
                }
                Exit::Never => unreachable!("exit chosen with zero probability"),
            }
        }
        path.end_time = t;
        Ok(path)
    }
}

/// One time-changed path with speed function `m`; see [`TimeChange`].
pub fn simulate_time_change(
    m: &StieltjesMeasure,
    x0: f64,
    horizon: f64,
    grid_step: f64,
    seed: u64,
    stream: u64,
) -> Result<PathSample> {
    TimeChange::new(m, grid_step)?.simulate(x0, horizon, &[], seed, stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::run_paths;

    #[test]
    fn start_between_two_atoms_lands_on_either_side() {
        let m = StieltjesMeasure::atomic(&[(0.0, 1.0), (1.0, 1.0)]).unwrap();
        let tc = TimeChange::new(&m, 0.01).unwrap();
        assert_eq!(tc.support(), &[0.0, 1.0]);
        let n = 20_000;
        let ones = run_paths(n, None, |k| {
            tc.simulate(0.5, 1.0, &[], 5, k).unwrap().states[0]
        })
        .into_iter()
        .filter(|&x| x == 1.0)
        .count() as f64;
        let p = ones / n as f64;
        assert!((p - 0.5).abs() <= 4.0 * (0.25 / n as f64).sqrt(), "{p}");
    }

    #[test]
    fn reflecting_ends_never_absorb() {
        let m = StieltjesMeasure::uniform(0.0, 1.0, 1.0).unwrap();
        let tc = TimeChange::new(&m, 0.5).unwrap();
        let p = tc.simulate(0.5, 10.0, &[], 1, 0).unwrap();
        assert!(p.is_skip_free());
        assert_eq!(p.terminal, Terminal::Horizon);
    }

    #[test]
    fn killing_needs_condition() {
        let m = StieltjesMeasure::atomic(&[(0.5, 1.0), (1.0, 1.0)])
            .unwrap()
            .with_plateaus(0.0, f64::INFINITY)
            .unwrap();
        assert!(matches!(TimeChange::new(&m, 0.1), Err(Error::QkViolated)));
        let m = StieltjesMeasure::uniform(0.0, 1.0, 1.0)
            .unwrap()
            .with_plateaus(0.0, f64::INFINITY)
            .unwrap();
        let tc = TimeChange::new(&m, 0.1).unwrap();
        let p = tc.simulate(0.1, 1e6, &[], 2, 0).unwrap();
        assert_eq!(p.terminal, Terminal::Absorbed);
        assert_eq!(*p.states.last().unwrap(), 0.0);
    }
}
