//! Acceptance suite: one line per criterion, non-zero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quasidiff::catalog;
use quasidiff::forms::{
    energy, energy_on, in_domain, trace_energy_identity, verify_subspace, DomainVerdict,
    EnergyMode, FormDescriptor, TestFunction, Verdict,
};
use quasidiff::lattice::{
    classify, compare, minimal_subspace, Decision, MinimalKind, SubspaceDescriptor,
};
use quasidiff::markov::{
    empirical_checks, exit_side_agreement, exit_time_exact, hitting_prob_exact, run_paths,
    simulate_chain_stopped, ChainModel, TimeChange, DETAILED_BALANCE_ULPS,
};
use quasidiff::measures::StieltjesMeasure;
use quasidiff::pl::PLFunction;
use quasidiff::scale::ScaleFunction;
use quasidiff::sets::{MeasurableSubset, NearlyClosedSet, Piece, SvcSet, UbiquitousSet};
use quasidiff::Bracket;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Piecewise-linear function on `[a, b]` with up to `max_inner` random
/// interior breaks and values in `[-1, 1]`.
fn random_pl(r: &mut ChaCha8Rng, a: f64, b: f64, max_inner: usize) -> PLFunction {
    let k = r.gen_range(0..=max_inner);
    let mut xs: Vec<f64> = (0..k).map(|_| a + (b - a) * r.gen::<f64>()).collect();
    xs.push(a);
    xs.push(b);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let vs = xs.iter().map(|_| r.gen_range(-1.0..1.0)).collect();
    PLFunction::new(xs, vs).unwrap()
}

fn unit() -> NearlyClosedSet {
    NearlyClosedSet::interval(0.0, 1.0).unwrap()
}

fn thirds() -> NearlyClosedSet {
    NearlyClosedSet::intervals(&[(0.0, 1.0 / 3.0), (2.0 / 3.0, 1.0)]).unwrap()
}

fn fat() -> NearlyClosedSet {
    NearlyClosedSet::svc(SvcSet::middle_fourths(0.0, 1.0).unwrap()).unwrap()
}

fn cut(e: &NearlyClosedSet, spans: &[(f64, f64)]) -> MeasurableSubset {
    MeasurableSubset::intersection(vec![
        e.to_subset(),
        MeasurableSubset::intervals(spans.iter().copied()),
    ])
}

fn ubiq(c: f64, d: f64) -> MeasurableSubset {
    MeasurableSubset::ubiquitous(UbiquitousSet::new(c, d, 0.5).unwrap())
}

/// Random composite probes `φ ∘ s̄` spread over the range of the scale.
fn composite_probes(scale: &ScaleFunction, n: usize, seed: u64) -> Vec<TestFunction> {
    let e = scale.state_space();
    let (lo, hi) = (
        scale.eval(e.l(), 1e-14).mid(),
        scale.eval(e.r(), 1e-14).mid(),
    );
    let mut r = rng(seed);
    (0..n)
        .map(|_| TestFunction::composite(random_pl(&mut r, lo, hi, 5), scale.clone()))
        .collect()
}

fn identity_energy() -> Outcome {
    let points = catalog::entry("null-cantor")
        .map_err(|e| e.to_string())?
        .state_space;
    let periodic = catalog::entry("periodic-cantor")
        .map_err(|e| e.to_string())?
        .state_space;
    let sets = vec![
        ("[0,1]", unit()),
        ("thirds", thirds()),
        ("{0,1}", NearlyClosedSet::points(&[0.0, 1.0]).unwrap()),
        (
            "middle-thirds",
            NearlyClosedSet::svc(SvcSet::middle_thirds(0.0, 1.0).unwrap()).unwrap(),
        ),
        ("fat", fat()),
        (
            "kept 0.3 on [2,5]",
            NearlyClosedSet::svc(SvcSet::with_kept_fraction(2.0, 5.0, 0.3).unwrap()).unwrap(),
        ),
        (
            "mixed",
            NearlyClosedSet::new(
                vec![
                    Piece::Interval(-1.0, -0.5),
                    Piece::Point(0.0),
                    Piece::Svc(SvcSet::middle_fourths(1.0, 2.0).unwrap()),
                ],
                true,
                true,
            )
            .unwrap(),
        ),
        ("cantor endpoints", points),
        ("periodic", periodic),
        (
            "five atoms",
            catalog::entry("five-atoms")
                .map_err(|e| e.to_string())?
                .state_space,
        ),
    ];
    let mut worst = 0.0f64;
    for (name, e) in &sets {
        let t = Instant::now();
        let (l, r) = (e.l(), e.r());
        let id = TestFunction::Pl(PLFunction::identity(l, r));
        let rep = energy_on(e, &ScaleFunction::natural(e), &id, &id, 1e-10)
            .map_err(|err| format!("{name}: {err}"))?;
        let elapsed = t.elapsed();
        let want = 0.5 * (r - l);
        check(
            rep.total.contains(want) || (rep.total.mid() - want).abs() <= 1e-12,
            || format!("{name}: [{}, {}] misses {want}", rep.total.lo, rep.total.hi),
        )?;
        check(rep.total.width() <= 1e-9, || {
            format!("{name}: width {:e}", rep.total.width())
        })?;
        check(elapsed < Duration::from_secs(1), || {
            format!("{name}: {elapsed:?}")
        })?;
        worst = worst.max(rep.total.width());
    }
    Ok(format!("{} sets, widest bracket {worst:e}", sets.len()))
}

/// `½ Σ ∫ f'² over E-intervals + ½ Σ (Δf)² / gap` for a finite union of
/// closed intervals and points.
fn trace_oracle(pieces: &[(f64, f64)], f: &PLFunction) -> f64 {
    let mut total = 0.0;
    for &(a, b) in pieces {
        for (x0, x1, v0, v1) in f.pieces() {
            let (lo, hi) = (x0.max(a), x1.min(b));
            if hi > lo {
                let k = (v1 - v0) / (x1 - x0);
                total += 0.5 * k * k * (hi - lo);
            }
        }
    }
    for w in pieces.windows(2) {
        let (a, b) = (w[0].1, w[1].0);
        let d = f.eval(b) - f.eval(a);
        total += 0.5 * d * d / (b - a);
    }
    total
}

fn trace_identity() -> Outcome {
    let t = Instant::now();
    let stage6 = SvcSet::middle_fourths(0.0, 1.0).unwrap().stage_blocks(6);
    let cases: Vec<(&str, Vec<(f64, f64)>)> = vec![
        ("thirds", vec![(0.0, 1.0 / 3.0), (2.0 / 3.0, 1.0)]),
        ("stage-6 fat Cantor", stage6),
        ("{0,1}", vec![(0.0, 0.0), (1.0, 1.0)]),
    ];
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for (name, spans) in &cases {
        let e = if spans.iter().all(|&(a, b)| a == b) {
            NearlyClosedSet::points(&spans.iter().map(|s| s.0).collect::<Vec<_>>()).unwrap()
        } else {
            NearlyClosedSet::intervals(spans).unwrap()
        };
        for k in 0..50 {
            let f = random_pl(&mut r, 0.0, 1.0, 6);
            let id =
                trace_energy_identity(&e, &f, 1e-12).map_err(|err| format!("{name}: {err}"))?;
            let scale = id.rhs.mid().abs().max(1e-300);
            let rel = id.gap / scale;
            let oracle = trace_oracle(spans, &f);
            let rel_oracle = (id.lhs.mid() - oracle).abs() / oracle.abs().max(1e-300);
            check(rel <= 1e-10 && rel_oracle <= 1e-10, || {
                format!("{name} probe {k}: gap {rel:e}, against oracle {rel_oracle:e}")
            })?;
            worst = worst.max(rel).max(rel_oracle);
        }
    }
    let elapsed = t.elapsed();
    check(elapsed < Duration::from_secs(5), || format!("{elapsed:?}"))?;
    Ok(format!(
        "150 probes, worst relative gap {worst:e}, {elapsed:.2?}"
    ))
}

fn sufficiency() -> Outcome {
    let fat_e = fat();
    let cases = vec![
        (
            "finite-union G",
            fat_e.clone(),
            cut(&fat_e, &[(0.0, 0.25), (0.6, 0.8)]),
        ),
        (
            "ubiquitous G",
            unit(),
            MeasurableSubset::union(vec![ubiq(0.0, 0.5), MeasurableSubset::interval(0.5, 1.0)]),
        ),
        ("G = E", thirds(), thirds().to_subset()),
    ];
    let mut worst_disc = 0.0f64;
    let mut worst_id = 0.0f64;
    for (k, (name, e, g)) in cases.into_iter().enumerate() {
        let parent = FormDescriptor::natural(&e).unwrap();
        let scale = ScaleFunction::from_charset(&e, g, None, 1e-12)
            .map_err(|err| format!("{name}: {err}"))?;
        let child = parent.with_scale(scale.clone()).unwrap();
        let probes = composite_probes(&scale, 20, 30 + k as u64);
        let rep = verify_subspace(&child, &parent, &probes, 1e-8)
            .map_err(|err| format!("{name}: {err}"))?;
        check(rep.verdict == Verdict::Pass, || {
            format!(
                "{name}: verdict {:?} ({:?}), first failing row {:?}",
                rep.verdict,
                rep.admissible,
                rep.rows.iter().find(|r| r.verdict != Verdict::Pass)
            )
        })?;
        for row in &rep.rows {
            let disc = row
                .discrepancy
                .ok_or_else(|| format!("{name}: probe {} skipped", row.probe))?;
            let gap = row.identity_gap.unwrap();
            check(disc.abs() <= 1e-8 && gap <= 1e-10, || {
                format!(
                    "{name} probe {}: discrepancy {disc:e}, identity gap {gap:e}",
                    row.probe
                )
            })?;
            worst_disc = worst_disc.max(disc.abs());
            worst_id = worst_id.max(gap);
        }
    }
    Ok(format!(
        "60 probes PASS, worst discrepancy {worst_disc:e}, worst identity gap {worst_id:e}"
    ))
}

fn necessity() -> Outcome {
    let e = unit();
    let parent = FormDescriptor::natural(&e).unwrap();
    let half =
        ScaleFunction::general_pl(&e, PLFunction::new(vec![0.0, 1.0], vec![0.0, 0.5]).unwrap())
            .unwrap();
    let child = parent.with_scale(half).unwrap();
    let mut r = rng(4);
    let probes: Vec<TestFunction> = (0..20)
        .map(|_| TestFunction::Pl(random_pl(&mut r, 0.0, 1.0, 5)))
        .collect();
    let rep = verify_subspace(&child, &parent, &probes, 1e-10).map_err(|err| err.to_string())?;
    check(rep.verdict == Verdict::Fail, || {
        format!("verdict {:?}", rep.verdict)
    })?;
    let mut worst = 0.0f64;
    for (row, h) in rep.rows.iter().zip(&probes) {
        let disc = row
            .discrepancy
            .ok_or_else(|| format!("probe {} skipped", row.probe))?;
        // child energy on a slope-½ scale is ∫h'², the parent's is ½∫h'²
        let TestFunction::Pl(f) = h else {
            unreachable!()
        };
        let oracle = -f
            .pieces()
            .map(|(x0, x1, v0, v1)| 0.5 * (v1 - v0).powi(2) / (x1 - x0))
            .sum::<f64>();
        let predicted = row.predicted.unwrap().mid();
        check(
            (disc - predicted).abs() <= 1e-10 && (disc - oracle).abs() <= 1e-10,
            || {
                format!(
                    "probe {}: measured {disc}, predicted {predicted}, oracle {oracle}",
                    row.probe
                )
            },
        )?;
        worst = worst.max((disc - predicted).abs());
    }
    check(rep.defect_matched == Some(true), || {
        "defect not matched".into()
    })?;
    Ok(format!(
        "FAIL verdict, 20 probes, worst |measured - predicted| {worst:e}"
    ))
}

/// Expected exit time from `(a, b)` by a dense LU solve of
/// `Σ_j q_ij (T_j - T_i) = -1`.
fn dense_exit_times(c: &ChainModel) -> Vec<f64> {
    let n = c.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for i in 0..n {
        if i == 0 || i == n - 1 {
            m[(i, i)] = 1.0;
            continue;
        }
        for j in 0..n {
            let q = c.rate(i, j);
            if q > 0.0 {
                m[(i, j)] += q;
                m[(i, i)] -= q;
            }
        }
        rhs[i] = -1.0;
    }
    let t = m.lu().solve(&rhs).expect("nonsingular");
    t.iter().copied().collect()
}

fn random_chain(r: &mut ChaCha8Rng, n: usize) -> ChainModel {
    let mut xs: Vec<f64> = (0..n).map(|_| r.gen::<f64>()).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let ws = xs.iter().map(|_| r.gen_range(0.1..2.0)).collect();
    ChainModel::new(xs, ws, false, false).unwrap()
}

fn oracle_suite() -> Outcome {
    let mut r = rng(5);
    let mut worst = [0.0f64; 4];
    let mut count = 0;
    for n in 2..=10 {
        for _ in 0..5 {
            let c = random_chain(&mut r, n);
            let xs = c.states().to_vec();
            let (a, b) = (xs[0], xs[xs.len() - 1]);
            let db = c.detailed_balance_defect();
            check(db <= DETAILED_BALANCE_ULPS * f64::EPSILON, || {
                format!("n={n}: detailed balance {db:e}")
            })?;
            let dense = dense_exit_times(&c);
            for (i, &x) in xs.iter().enumerate() {
                let h = hitting_prob_exact(&c, x, a, b).map_err(|e| e.to_string())?;
                let hv = (h - (b - x) / (b - a)).abs();
                let tv =
                    (exit_time_exact(&c, x, a, b).map_err(|e| e.to_string())? - dense[i]).abs();
                check(hv <= 1e-12 && tv <= 1e-10, || {
                    format!("n={n}, x={x}: hitting {hv:e}, exit time {tv:e}")
                })?;
                worst[0] = worst[0].max(hv);
                worst[1] = worst[1].max(tv);
            }
            let f: Vec<f64> = xs.iter().map(|_| r.gen_range(-1.0..1.0)).collect();
            let g: Vec<f64> = xs.iter().map(|_| r.gen_range(-1.0..1.0)).collect();
            let lhs = c.generator_form(&f, &g);
            let form = c.form().map_err(|e| e.to_string())?;
            let pf = TestFunction::Pl(PLFunction::new(xs.clone(), f).unwrap());
            let pg = TestFunction::Pl(PLFunction::new(xs.clone(), g).unwrap());
            let rhs = energy(&form, &pf, &pg, 1e-13, EnergyMode::Functional)
                .map_err(|e| e.to_string())?
                .total;
            // relative once the energies exceed 1
            let fv = (lhs - rhs.mid()).abs() / lhs.abs().max(1.0);
            check(fv <= 1e-12, || {
                format!("n={n}: <-Lf,g> = {lhs}, energy = {}", rhs.mid())
            })?;
            worst[2] = worst[2].max(fv);
            worst[3] = worst[3].max(db);
            count += 1;
        }
    }
    Ok(format!(
        "{count} chains: hitting {:e}, exit time {:e}, form {:e}, detailed balance {:e}",
        worst[0], worst[1], worst[2], worst[3]
    ))
}

fn five_state_chain() -> ChainModel {
    ChainModel::new(
        vec![0.0, 0.1, 0.4, 0.6, 1.0],
        vec![0.5, 1.0, 2.0, 0.7, 1.5],
        false,
        false,
    )
    .unwrap()
}

fn monte_carlo() -> Outcome {
    let t = Instant::now();
    let c = five_state_chain();
    let n = 100_000;
    let sim = |threads| {
        run_paths(n, Some(threads), |k| {
            simulate_chain_stopped(&c, 0.4, 1e12, &[0.0, 1.0], 17, k).unwrap()
        })
    };
    let one = sim(1);
    let eight = sim(8);
    check(one == eight, || {
        "paths differ between 1 and 8 threads".into()
    })?;
    let rep = empirical_checks(&eight, &c, Some((0.0, 1.0))).map_err(|e| e.to_string())?;
    let h = rep.hitting.clone().unwrap();
    check(rep.skip_violations == 0, || {
        format!("{} skip violations", rep.skip_violations)
    })?;
    check(h.resolved == n as usize, || {
        format!("{} unresolved", n as usize - h.resolved)
    })?;
    check(h.within_4_sigma, || {
        format!(
            "frequency {} vs exact {} (z = {})",
            h.frequency, h.exact, h.z
        )
    })?;
    let elapsed = t.elapsed();
    check(elapsed < Duration::from_secs(60), || format!("{elapsed:?}"))?;
    Ok(format!(
        "skip-free 100%, P = {:.5} vs {:.5} (z = {:.2}), threads 1 = 8, {elapsed:.2?}",
        h.frequency, h.exact, h.z
    ))
}

fn cross_simulator() -> Outcome {
    let m = catalog::entry("five-atoms")
        .map_err(|e| e.to_string())?
        .speed;
    let form = FormDescriptor::from_speed(&m).map_err(|e| e.to_string())?;
    let chain = ChainModel::from_atomic(form.mu()).map_err(|e| e.to_string())?;
    let tc = TimeChange::new(&m, 0.01).map_err(|e| e.to_string())?;
    let n = 10_000;
    let a = run_paths(n, None, |k| {
        simulate_chain_stopped(&chain, 0.5, 1e12, &[0.0, 1.0], 23, k).unwrap()
    });
    let b = run_paths(n, None, |k| {
        tc.simulate(0.5, 1e12, &[0.0, 1.0], 29, k).unwrap()
    });
    let s = exit_side_agreement(&a, &b, 0.5);
    check(s.resolved == [n as usize; 2], || {
        format!("unresolved paths: {:?}", s.resolved)
    })?;
    check(s.within_4_sigma, || {
        format!("{:?} (z = {})", s.left_frequency, s.z)
    })?;
    Ok(format!(
        "left exit: chain {:.4}, time change {:.4}, z = {:.2}",
        s.left_frequency[0], s.left_frequency[1], s.z
    ))
}

fn classification_matrix() -> Outcome {
    let t = Instant::now();
    let cases = [
        ("[0,1]", unit(), true, MinimalKind::No),
        ("thirds", thirds(), true, MinimalKind::No),
        (
            "middle-thirds",
            NearlyClosedSet::svc(SvcSet::middle_thirds(0.0, 1.0).unwrap()).unwrap(),
            false,
            MinimalKind::TriviallyUnique,
        ),
        ("fat SVC", fat(), true, MinimalKind::Yes),
        (
            "{0,1}",
            NearlyClosedSet::points(&[0.0, 1.0]).unwrap(),
            false,
            MinimalKind::TriviallyUnique,
        ),
    ];
    for (name, e, proper, minimal) in cases {
        let c = classify(&e, None, 1e-9).map_err(|err| format!("{name}: {err}"))?;
        check(
            c.proper_subspaces == proper && c.minimal_exists == minimal,
            || {
                format!(
                    "{name}: got ({}, {:?})",
                    c.proper_subspaces, c.minimal_exists
                )
            },
        )?;
    }
    let elapsed = t.elapsed();
    check(elapsed < Duration::from_secs(1), || format!("{elapsed:?}"))?;
    Ok(format!("5 verdicts exact, {elapsed:.2?}"))
}

fn minimal_form() -> Outcome {
    let e = fat();
    let mu = StieltjesMeasure::reference_on(&e).unwrap();
    let d = minimal_subspace(&e, &mu)
        .map_err(|err| err.to_string())?
        .ok_or("no minimal subspace")?;
    let scale = d.scale().clone();
    for (k, h) in composite_probes(&scale, 20, 9).iter().enumerate() {
        let rep = energy(d.form(), h, h, 1e-9, EnergyMode::Strict)
            .map_err(|err| format!("probe {k}: {err}"))?;
        check(rep.local == Bracket::ZERO, || {
            format!("probe {k}: local [{}, {}]", rep.local.lo, rep.local.hi)
        })?;
    }
    let s = TestFunction::composite(PLFunction::identity(0.0, 0.5), scale);
    let rep = energy(d.form(), &s, &s, 1e-9, EnergyMode::Strict).map_err(|err| err.to_string())?;
    check(
        rep.total.contains(0.25) && rep.total.width() <= 1e-6,
        || format!("energy(s, s) = [{}, {}]", rep.total.lo, rep.total.hi),
    )?;
    let id = TestFunction::Pl(PLFunction::identity(0.0, 1.0));
    let v = in_domain(d.form(), &id, 1e-9).map_err(|err| err.to_string())?;
    check(matches!(v, DomainVerdict::No(_)), || {
        format!("identity verdict {v:?}")
    })?;
    Ok(format!(
        "local = 0 on 20 probes, energy(s, s) in [{}, {}], identity rejected",
        rep.total.lo, rep.total.hi
    ))
}

fn lattice_order() -> Outcome {
    let tol = 1e-9;
    let fe = fat();
    let fmu = StieltjesMeasure::reference_on(&fe).unwrap();
    let ue = unit();
    let umu = StieltjesMeasure::reference_on(&ue).unwrap();
    let on_fat = |g: MeasurableSubset| SubspaceDescriptor::new(&fe, &fmu, g, tol).unwrap();
    let on_unit = |g: MeasurableSubset| SubspaceDescriptor::new(&ue, &umu, g, tol).unwrap();
    let empty = on_fat(MeasurableSubset::Empty);
    let full = SubspaceDescriptor::full(&fe, &fmu).unwrap();
    let left = on_fat(cut(&fe, &[(0.0, 0.5)]));
    let quarter = on_fat(cut(&fe, &[(0.0, 0.25)]));
    let right = on_fat(cut(&fe, &[(0.5, 1.0)]));
    let unit_full = SubspaceDescriptor::full(&ue, &umu).unwrap();
    let u_left = on_unit(MeasurableSubset::union(vec![
        ubiq(0.0, 0.5),
        MeasurableSubset::interval(0.5, 1.0),
    ]));
    let u_right = on_unit(MeasurableSubset::union(vec![
        MeasurableSubset::interval(0.0, 0.5),
        ubiq(0.5, 1.0),
    ]));
    let pairs = [
        (&empty, &full, Decision::Subset),
        (&left, &full, Decision::Subset),
        (&quarter, &left, Decision::Subset),
        (&full, &left, Decision::Superset),
        (&left, &right, Decision::Incomparable),
        (&full, &full, Decision::Equal),
        (&empty, &right, Decision::Subset),
        (&u_left, &unit_full, Decision::Subset),
        (&unit_full, &unit_full, Decision::Equal),
        (&u_left, &u_right, Decision::Incomparable),
    ];
    let mut worst = 0.0f64;
    let mut probes = 0;
    for (k, (a, b, want)) in pairs.iter().enumerate() {
        let got = compare(a, b, tol).map_err(|err| err.to_string())?.decision;
        check(got == *want, || {
            format!("pair {k}: {got:?}, expected {want:?}")
        })?;
        if got != Decision::Subset {
            continue;
        }
        for (j, h) in composite_probes(a.scale(), 10, 100 + k as u64)
            .iter()
            .enumerate()
        {
            let v = in_domain(b.form(), h, tol).map_err(|err| err.to_string())?;
            check(v == DomainVerdict::Yes, || {
                format!("pair {k} probe {j}: larger domain says {v:?}")
            })?;
            let ea = energy(a.form(), h, h, 1e-10, EnergyMode::Strict)
                .map_err(|err| err.to_string())?
                .total;
            let eb = energy(b.form(), h, h, 1e-10, EnergyMode::Strict)
                .map_err(|err| err.to_string())?
                .total;
            let diff = (ea.mid() - eb.mid()).abs();
            check(diff <= 1e-8, || {
                format!("pair {k} probe {j}: energies {} vs {}", ea.mid(), eb.mid())
            })?;
            worst = worst.max(diff);
            probes += 1;
        }
    }
    Ok(format!(
        "10 pairs matched, {probes} probes carried over, worst energy difference {worst:e}"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("identity energy law", identity_energy),
        ("trace identity", trace_identity),
        ("subspace sufficiency", sufficiency),
        ("subspace necessity witness", necessity),
        ("finite-chain oracles", oracle_suite),
        ("chain Monte Carlo", monte_carlo),
        ("chain vs time change", cross_simulator),
        ("classification matrix", classification_matrix),
        ("minimal form", minimal_form),
        ("subspace order", lattice_order),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.2}s): {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.2}s): {reason}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
