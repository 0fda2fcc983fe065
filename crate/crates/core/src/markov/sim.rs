use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::{hitting_prob_exact, ChainModel};
use crate::error::{Error, Result};

/// How a simulated path ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Terminal {
    Absorbed,
    Stopped,
    Horizon,
}

/// Jump skeleton of one path: the process sits at `states[k]` on
/// `[times[k], times[k+1])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    /// Position of each visited state in the simulator's own ordering.
    pub indices: Vec<usize>,
    pub terminal: Terminal,
    pub end_time: f64,
    pub seed: u64,
    pub stream: u64,
}

impl PathSample {
    pub(crate) fn start(x: f64, i: usize, seed: u64, stream: u64) -> Self {
        PathSample {
            times: vec![0.0],
            states: vec![x],
            indices: vec![i],
            terminal: Terminal::Horizon,
            end_time: 0.0,
            seed,
            stream,
        }
    }

    pub(crate) fn push(&mut self, t: f64, x: f64, i: usize) {
        self.times.push(t);
        self.states.push(x);
        self.indices.push(i);
    }

    pub fn is_skip_free(&self) -> bool {
        self.indices.windows(2).all(|w| w[0].abs_diff(w[1]) == 1)
    }

    /// First of `a`, `b` visited, if any.
    pub fn first_of(&self, a: f64, b: f64) -> Option<f64> {
        self.states.iter().copied().find(|&x| x == a || x == b)
    }

    /// `t,state` rows.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# seed={} stream={} terminal={:?} end_time={}\nt,state\n",
            self.seed, self.stream, self.terminal, self.end_time
        );
        for (t, x) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t:.17e},{x:.17e}\n"));
        }
        out
    }
}

/// Rounding allowed in `μ_i q_ij = μ_j q_ji`, in units of machine epsilon.
pub const DETAILED_BALANCE_ULPS: f64 = 4.0;

/// Generator for one path: stream `stream` of the ChaCha8 sequence keyed by
/// `seed`.
pub(crate) fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn simulate_chain(
    c: &ChainModel,
    x0: f64,
    horizon: f64,
    seed: u64,
    stream: u64,
) -> Result<PathSample> {
    simulate_chain_stopped(c, x0, horizon, &[], seed, stream)
}

/// As [`simulate_chain`], ending early on reaching any state in `stop`.
pub fn simulate_chain_stopped(
    c: &ChainModel,
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
    let mut i = c.index_of(x0).ok_or(Error::NotReachable(x0))?;
    let mut rng = path_rng(seed, stream);
    let mut path = PathSample::start(x0, i, seed, stream);
    let mut t = 0.0;
    loop {
        if c.is_absorbing(i) {
            path.terminal = Terminal::Absorbed;
            break;
        }
        if stop.contains(&c.states()[i]) {
            path.terminal = Terminal::Stopped;
            break;
        }
        let q = c.total_rate(i);
        if !(q > 0.0) {
            t = horizon;
            break;
        }
        let dt = Exp::new(q).expect("positive rate").sample(&mut rng);
        if t + dt > horizon {
            t = horizon;
            break;
        }
        t += dt;
        let mut u = rng.gen::<f64>() * q;
        let row = c.rates_from(i);
        let mut next = row[row.len() - 1].0;
        for &(j, r) in row {
            if u < r {
                next = j;
                break;
            }
            u -= r;
        }
        i = next;
        path.push(t, c.states()[i], i);
    }
    path.end_time = t;
    Ok(path)
}

/// Runs `f(0), …, f(n - 1)` in parallel, optionally on a pool of `threads`
/// workers. Results are in index order whatever the schedule.
pub fn run_paths<T: Send>(
    n: u64,
    threads: Option<usize>,
    f: impl Fn(u64) -> T + Sync + Send,
) -> Vec<T> {
    let work = || (0..n).into_par_iter().map(&f).collect();
    match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .expect("thread pool")
            .install(work),
        None => work(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingCheck {
    pub x0: f64,
    pub a: f64,
    pub b: f64,
    /// Paths that reached `a` or `b`.
    pub resolved: usize,
    pub frequency: f64,
    pub exact: f64,
    pub sigma: f64,
    pub z: f64,
    pub within_4_sigma: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalReport {
    pub paths: usize,
    pub skip_free_rate: f64,
    pub skip_violations: usize,
    pub detailed_balance_defect: f64,
    pub detailed_balance_exact: bool,
    pub hitting: Option<HittingCheck>,
    pub seeds: Vec<u64>,
}

impl EmpiricalReport {
    pub fn passed(&self) -> bool {
        self.skip_violations == 0
            && self.detailed_balance_exact
            && self.hitting.as_ref().is_none_or(|h| h.within_4_sigma)
    }
}

/// Skip-free audit, detailed balance and, when `target = Some((a, b))`,
/// the frequency of reaching `a` before `b` against the exact value.
pub fn empirical_checks(
    paths: &[PathSample],
    c: &ChainModel,
    target: Option<(f64, f64)>,
) -> Result<EmpiricalReport> {
    let violations = paths.iter().filter(|p| !p.is_skip_free()).count();
    let defect = c.detailed_balance_defect();
    let mut seeds: Vec<u64> = paths.iter().map(|p| p.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let hitting = match (target, paths.first()) {
        (Some((a, b)), Some(first)) => {
            let x0 = first.states[0];
            let mut hits_a = 0usize;
            let mut resolved = 0usize;
            for p in paths.iter().filter(|p| p.states[0] == x0) {
                match p.first_of(a, b) {
                    Some(x) if x == a => {
                        hits_a += 1;
                        resolved += 1;
                    }
                    Some(_) => resolved += 1,
                    None => {}
                }
            }
            let exact = hitting_prob_exact(c, x0, a, b)?;
            let freq = if resolved > 0 {
                hits_a as f64 / resolved as f64
            } else {
                f64::NAN
            };
            let sigma = (exact * (1.0 - exact) / resolved.max(1) as f64).sqrt();
            let z = if sigma > 0.0 {
                (freq - exact) / sigma
            } else if freq == exact {
                0.0
            } else {
                f64::INFINITY
            };
            Some(HittingCheck {
                x0,
                a,
                b,
                resolved,
                frequency: freq,
                exact,
                sigma,
                z,
                within_4_sigma: z.abs() <= 4.0,
            })
        }
        _ => None,
    };
    Ok(EmpiricalReport {
        paths: paths.len(),
        skip_free_rate: if paths.is_empty() {
            1.0
        } else {
            1.0 - violations as f64 / paths.len() as f64
        },
        skip_violations: violations,
        detailed_balance_defect: defect,
        detailed_balance_exact: defect <= DETAILED_BALANCE_ULPS * f64::EPSILON,
        hitting,
        seeds,
    })
}

/// Two-sample comparison of the side on which two batches of paths left
/// their starting point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideAgreement {
    pub x0: f64,
    /// Paths in each batch that ended by stopping or absorption.
    pub resolved: [usize; 2],
    /// Fraction of resolved paths ending left of `x0`.
    pub left_frequency: [f64; 2],
    pub sigma: f64,
    pub z: f64,
    pub within_4_sigma: bool,
}

pub fn exit_side_agreement(a: &[PathSample], b: &[PathSample], x0: f64) -> SideAgreement {
    let count = |ps: &[PathSample]| {
        let done: Vec<&PathSample> = ps
            .iter()
            .filter(|p| p.terminal != Terminal::Horizon)
            .collect();
        let left = done
            .iter()
            .filter(|p| *p.states.last().expect("nonempty path") < x0)
            .count();
        (done.len(), left as f64 / done.len().max(1) as f64)
    };
    let ((na, pa), (nb, pb)) = (count(a), count(b));
    let pooled = (pa * na as f64 + pb * nb as f64) / (na + nb).max(1) as f64;
    let sigma =
        (pooled * (1.0 - pooled) * (1.0 / na.max(1) as f64 + 1.0 / nb.max(1) as f64)).sqrt();
    let z = if sigma > 0.0 {
        (pa - pb) / sigma
    } else if pa == pb {
        0.0
    } else {
        f64::INFINITY
    };
    SideAgreement {
        x0,
        resolved: [na, nb],
        left_frequency: [pa, pb],
        sigma,
        z,
        within_4_sigma: z.abs() <= 4.0,
    }
}
