use proptest::prelude::*;

use quasidiff::bracket::Bracket;
use quasidiff::forms::{energy, trace_energy_identity, EnergyMode, FormDescriptor, TestFunction};
use quasidiff::lattice::{
    compare, construct_proper, has_proper_subspaces, is_proper, minimal_subspace, Decision,
    SubspaceDescriptor, Tri,
};
use quasidiff::markov::{discretize, hitting_prob_exact, ChainModel, DETAILED_BALANCE_ULPS};
use quasidiff::measures::StieltjesMeasure;
use quasidiff::pl::PLFunction;
use quasidiff::scale::ScaleFunction;
use quasidiff::sets::{MeasurableSubset, Membership, NearlyClosedSet, SvcSet, UbiquitousSet};

const TOL: f64 = 1e-9;

fn spans_from(steps: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut x = 0.0;
    steps
        .iter()
        .map(|&(len, gap)| {
            let span = (x, x + len);
            x += len + gap;
            span
        })
        .collect()
}

/// Disjoint closed intervals starting at 0.
fn finite_union() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.05f64..1.0, 0.05f64..1.0), 1..5).prop_map(|v| spans_from(&v))
}

fn fat_svc() -> impl Strategy<Value = SvcSet> {
    (0.1f64..0.9).prop_map(|kept| SvcSet::with_kept_fraction(0.0, 1.0, kept).unwrap())
}

/// Piecewise-linear function on `[0, r]` with a few interior breaks.
fn pl_on(r: f64) -> impl Strategy<Value = PLFunction> {
    prop::collection::vec((0.0f64..1.0, -2.0f64..2.0), 1..5).prop_map(move |mut v| {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-3);
        let mut xs = vec![0.0];
        let mut ys = vec![0.3];
        for (t, y) in v {
            let x = t * r;
            if x > 1e-3 && x < r - 1e-3 {
                xs.push(x);
                ys.push(y);
            }
        }
        xs.push(r);
        ys.push(-0.7);
        PLFunction::new(xs, ys).unwrap()
    })
}

fn natural_form(spans: &[(f64, f64)]) -> (NearlyClosedSet, FormDescriptor) {
    let e = NearlyClosedSet::intervals(spans).unwrap();
    let f = FormDescriptor::natural(&e).unwrap();
    (e, f)
}

fn pl_energy(form: &FormDescriptor, f: &PLFunction, g: &PLFunction) -> Bracket {
    energy(
        form,
        &TestFunction::Pl(f.clone()),
        &TestFunction::Pl(g.clone()),
        TOL,
        EnergyMode::Strict,
    )
    .unwrap()
    .total
}

fn atoms() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.05f64..1.0, 0.1f64..3.0), 2..9).prop_map(|v| {
        let mut x = 0.0;
        v.into_iter()
            .map(|(step, m)| {
                x += step;
                (x, m)
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gaps_and_measure_fill_the_hull(spans in finite_union()) {
        let e = NearlyClosedSet::intervals(&spans).unwrap();
        let gaps = e.gaps(usize::MAX, TOL).unwrap();
        let m = e.lebesgue_measure().unwrap();
        let total = Bracket::new(gaps.listed_length(), gaps.listed_length() + gaps.tail) + m;
        prop_assert!(total.contains_within(e.r() - e.l(), 1e-12), "{total:?}");
    }

    #[test]
    fn gaps_and_measure_fill_the_hull_of_fat_cantor_sets(k in fat_svc()) {
        let e = NearlyClosedSet::svc(k).unwrap();
        let gaps = e.gaps(4096, 1.0).unwrap();
        let m = e.lebesgue_measure().unwrap();
        let total = Bracket::new(gaps.listed_length(), gaps.listed_length() + gaps.tail) + m;
        prop_assert!(total.contains_within(1.0, 1e-12), "{total:?}");
    }

    #[test]
    fn ubiquitous_sets_split_every_subinterval(
        budget in 0.1f64..0.9,
        probes in prop::collection::vec((0.0f64..1.0, 1e-3f64..1.0), 100),
    ) {
        let u = UbiquitousSet::new(0.0, 1.0, budget).unwrap();
        for (t, w) in probes {
            let lo = t * (1.0 - 1e-3);
            let hi = (lo + w).min(1.0);
            let m = u.mass_in(lo, hi, 1e-12).measure;
            prop_assert!(m.lo > 0.0 && m.hi < hi - lo, "J=({lo},{hi}) {m:?}");
        }
    }

    #[test]
    fn inclusion_exclusion(a in finite_union(), b in finite_union(), k in fat_svc()) {
        let a = MeasurableSubset::intervals(a);
        let b = MeasurableSubset::union(vec![MeasurableSubset::intervals(b), MeasurableSubset::svc(k)]);
        let (lo, hi) = (0.0, 10.0);
        let m = |s: MeasurableSubset| s.measure_in(lo, hi, 1e-10);
        let left = m(MeasurableSubset::union(vec![a.clone(), b.clone()]))
            + m(MeasurableSubset::intersection(vec![a.clone(), b.clone()]));
        let right = m(a) + m(b);
        prop_assert!(left.widen(1e-12).overlaps(&right), "{left:?} {right:?}");
    }

    #[test]
    fn membership_agrees_with_pieces(spans in finite_union(), xs in prop::collection::vec(0.0f64..8.0, 32)) {
        let e = NearlyClosedSet::intervals(&spans).unwrap();
        for x in xs {
            let inside = spans.iter().any(|&(a, b)| a <= x && x <= b);
            match e.contains(x, 0) {
                Membership::In => prop_assert!(inside, "{x}"),
                Membership::Out => prop_assert!(!inside, "{x}"),
                Membership::Unknown => {}
            }
        }
    }

    #[test]
    fn cumulative_is_monotone(a in atoms(), k in fat_svc(), mut xs in prop::collection::vec(-1.0f64..10.0, 2..20)) {
        let mut pieces = StieltjesMeasure::indicator(MeasurableSubset::svc(k), 1.5).unwrap().indicators().to_vec();
        pieces.truncate(1);
        let mu = StieltjesMeasure::new(a, Vec::new(), pieces).unwrap();
        xs.sort_by(f64::total_cmp);
        let vals: Vec<Bracket> = xs.iter().map(|&x| mu.cumulative(x, TOL).unwrap()).collect();
        for w in vals.windows(2) {
            prop_assert!(w[0].hi <= w[1].hi + 2.0 * TOL, "{w:?}");
        }
    }

    #[test]
    fn atomic_pushforward_keeps_total_mass(a in atoms(), slope in 0.2f64..4.0, bend in 0.2f64..4.0) {
        let mu = StieltjesMeasure::atomic(&a).unwrap();
        let e = mu.support().unwrap();
        let (l, r) = (e.l(), e.r());
        let mid = 0.5 * (l + r);
        let s = PLFunction::new(vec![l, mid, r], vec![0.0, slope * (mid - l), slope * (mid - l) + bend * (r - mid)]).unwrap();
        let scale = ScaleFunction::general_pl(&e, s).unwrap();
        let pushed = mu.pushforward(&scale, TOL).unwrap();
        prop_assert_eq!(pushed.total_mass(0.0), mu.total_mass(0.0));
    }

    #[test]
    fn integration_is_linear(a in atoms(), f in pl_on(10.0), g in pl_on(10.0), c in -3.0f64..3.0) {
        let mu = StieltjesMeasure::atomic(&a).unwrap();
        let combo = PLFunction::lin_comb(1.0, &f, c, &g);
        let lhs = mu.integrate(&combo, TOL).unwrap();
        let rhs = mu.integrate(&f, TOL).unwrap() + mu.integrate(&g, TOL).unwrap().scale(c);
        prop_assert!(lhs.widen(1e-12 * (1.0 + rhs.abs_upper())).overlaps(&rhs), "{lhs:?} {rhs:?}");
    }

    #[test]
    fn energy_is_symmetric_positive_and_bounded(spans in finite_union(), seed in 0.0f64..1.0) {
        let (e, form) = natural_form(&spans);
        let r = e.r();
        let f = PLFunction::new(vec![0.0, 0.4 * r, r], vec![seed, -1.0, 2.0]).unwrap();
        let g = PLFunction::new(vec![0.0, 0.7 * r, r], vec![1.0, seed, 0.0]).unwrap();
        let fg = pl_energy(&form, &f, &g);
        let gf = pl_energy(&form, &g, &f);
        prop_assert!(fg.overlaps(&gf), "{fg:?} {gf:?}");
        let ff = pl_energy(&form, &f, &f);
        let gg = pl_energy(&form, &g, &g);
        prop_assert!(ff.lo >= -TOL && gg.lo >= -TOL);
        let cs = fg.abs_upper().powi(2) - ff.hi * gg.hi;
        prop_assert!(cs <= TOL, "{cs}");
    }

    #[test]
    fn energy_is_linear(spans in finite_union(), c in -2.0f64..2.0) {
        let (e, form) = natural_form(&spans);
        let r = e.r();
        let f = PLFunction::new(vec![0.0, 0.3 * r, r], vec![0.0, 1.0, -1.0]).unwrap();
        let g = PLFunction::new(vec![0.0, 0.6 * r, r], vec![2.0, 0.0, 0.5]).unwrap();
        let h = PLFunction::identity(0.0, r);
        let lhs = pl_energy(&form, &PLFunction::lin_comb(1.0, &f, c, &g), &h);
        let rhs = pl_energy(&form, &f, &h) + pl_energy(&form, &g, &h).scale(c);
        prop_assert!(lhs.widen(1e-12).overlaps(&rhs), "{lhs:?} {rhs:?}");
    }

    #[test]
    fn unit_contraction(spans in finite_union(), f in pl_on(1.0)) {
        let (e, form) = natural_form(&spans);
        let r = e.r();
        let f = PLFunction::new(f.breaks().iter().map(|x| x * r).collect(), f.values().iter().map(|v| 1.5 * v).collect()).unwrap();
        let full = pl_energy(&form, &f, &f);
        let clamped = pl_energy(&form, &f.clamp(0.0, 1.0), &f.clamp(0.0, 1.0));
        prop_assert!(clamped.lo <= full.hi + TOL, "{clamped:?} {full:?}");
    }

    #[test]
    fn identity_energy_is_half_the_hull(spans in finite_union()) {
        let (e, form) = natural_form(&spans);
        let id = PLFunction::identity(e.l(), e.r());
        let en = pl_energy(&form, &id, &id);
        prop_assert!(en.contains_within(0.5 * (e.r() - e.l()), TOL), "{en:?}");
    }

    #[test]
    fn identity_energy_on_fat_cantor_sets(k in fat_svc()) {
        let e = NearlyClosedSet::svc(k).unwrap();
        let form = FormDescriptor::natural(&e).unwrap();
        let id = PLFunction::identity(0.0, 1.0);
        let en = pl_energy(&form, &id, &id);
        prop_assert!(en.contains_within(0.5, TOL), "{en:?}");
    }

    #[test]
    fn trace_identity_closes(spans in finite_union(), f in pl_on(1.0)) {
        let e = NearlyClosedSet::intervals(&spans).unwrap();
        let r = e.r();
        let f = PLFunction::new(f.breaks().iter().map(|x| x * r).collect(), f.values().to_vec()).unwrap();
        let t = trace_energy_identity(&e, &f, TOL).unwrap();
        prop_assert!(t.gap <= t.lhs.width() + t.rhs.width() + TOL, "{t:?}");
    }

    #[test]
    fn discretized_chains_balance_exactly(a in atoms()) {
        let mu = StieltjesMeasure::atomic(&a).unwrap();
        let form = FormDescriptor::new(mu.support().unwrap(), ScaleFunction::natural(&mu.support().unwrap()), mu.clone()).unwrap();
        let c = discretize(&form, a.len()).unwrap();
        prop_assert!(c.detailed_balance_defect() <= DETAILED_BALANCE_ULPS * f64::EPSILON);
    }

    #[test]
    fn hitting_probabilities_are_linear(a in atoms(), picks in (0usize..100, 0usize..100, 0usize..100)) {
        let c = ChainModel::from_atomic(&StieltjesMeasure::atomic(&a).unwrap()).unwrap();
        let xs = c.states();
        let mut idx = [picks.0 % xs.len(), picks.1 % xs.len(), picks.2 % xs.len()];
        idx.sort();
        prop_assume!(idx[0] < idx[2]);
        let (lo, x, hi) = (xs[idx[0]], xs[idx[1]], xs[idx[2]]);
        let p = hitting_prob_exact(&c, x, lo, hi).unwrap();
        prop_assert!((p - (hi - x) / (hi - lo)).abs() <= 1e-12, "{p}");
    }

    #[test]
    fn hitting_probabilities_do_not_depend_on_resolution(n in 4usize..40) {
        let e = NearlyClosedSet::interval(0.0, 1.0).unwrap();
        let form = FormDescriptor::natural(&e).unwrap();
        let c = discretize(&form, n).unwrap();
        let xs = c.states().to_vec();
        let (lo, hi) = (xs[0], xs[xs.len() - 1]);
        for &x in &xs {
            let p = hitting_prob_exact(&c, x, lo, hi).unwrap();
            prop_assert!((p - (hi - x) / (hi - lo)).abs() <= 1e-12);
        }
    }

    #[test]
    fn every_subspace_sits_below_the_full_form(
        spans in finite_union(),
        budget in 0.1f64..0.9,
        piece in 0usize..10,
    ) {
        let e = NearlyClosedSet::intervals(&spans).unwrap();
        let mu = StieltjesMeasure::reference_on(&e).unwrap();
        let (c, d) = spans[piece % spans.len()];
        let g = MeasurableSubset::union(vec![
            MeasurableSubset::ubiquitous(UbiquitousSet::new(c, d, budget).unwrap()),
            MeasurableSubset::difference(e.to_subset(), MeasurableSubset::interval(c, d)),
        ]);
        let sub = SubspaceDescriptor::new(&e, &mu, g, TOL).unwrap();
        let full = SubspaceDescriptor::full(&e, &mu).unwrap();
        let got = compare(&sub, &full, TOL).unwrap().decision;
        prop_assert!(matches!(got, Decision::Subset | Decision::Equal), "{got:?}");
        prop_assert_eq!(compare(&full, &sub, TOL).unwrap().decision, Decision::Superset);
        prop_assert_eq!(is_proper(&sub, TOL).unwrap().0, Tri::Yes);
        let built = construct_proper(&e, &mu, TOL).unwrap().unwrap();
        prop_assert_eq!(is_proper(&built, TOL).unwrap().0, Tri::Yes);
    }

    #[test]
    fn the_minimal_subspace_is_least(k in fat_svc(), budget in 0.1f64..0.9) {
        let e = NearlyClosedSet::svc(k).unwrap();
        let mu = StieltjesMeasure::reference_on(&e).unwrap();
        let least = minimal_subspace(&e, &mu).unwrap().unwrap();
        let g = MeasurableSubset::intersection(vec![
            e.to_subset(),
            MeasurableSubset::ubiquitous(UbiquitousSet::new(0.0, 1.0, budget).unwrap()),
        ]);
        for other in [SubspaceDescriptor::new(&e, &mu, g, TOL).unwrap(), SubspaceDescriptor::full(&e, &mu).unwrap()] {
            let got = compare(&least, &other, TOL).unwrap().decision;
            prop_assert!(matches!(got, Decision::Subset | Decision::Equal), "{got:?}");
        }
        let local = energy(
            least.form(),
            &TestFunction::composite(PLFunction::identity(0.0, 0.5), least.scale().clone()),
            &TestFunction::composite(PLFunction::identity(0.0, 0.5), least.scale().clone()),
            TOL,
            EnergyMode::Strict,
        )
        .unwrap()
        .local;
        prop_assert_eq!(local, Bracket::ZERO);
    }

    #[test]
    fn null_sets_admit_no_proper_subspace(xs in prop::collection::btree_set(0u32..1000, 2..8)) {
        let pts: Vec<f64> = xs.into_iter().map(|k| k as f64 / 1000.0).collect();
        let e = NearlyClosedSet::points(&pts).unwrap();
        let mu = StieltjesMeasure::atomic(&pts.iter().map(|&x| (x, 1.0)).collect::<Vec<_>>()).unwrap();
        prop_assert!(!has_proper_subspaces(&e, TOL).unwrap().0);
        prop_assert!(construct_proper(&e, &mu, TOL).unwrap().is_none());
        let least = minimal_subspace(&e, &mu).unwrap().unwrap();
        prop_assert_eq!(is_proper(&least, TOL).unwrap().0, Tri::No);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn charset_scales_move_by_gap_length_across_gaps(budget in 0.1f64..0.9) {
        let e = NearlyClosedSet::svc(SvcSet::middle_fourths(0.0, 1.0).unwrap()).unwrap();
        let g = MeasurableSubset::intersection(vec![
            e.to_subset(),
            MeasurableSubset::ubiquitous(UbiquitousSet::new(0.0, 1.0, budget).unwrap()),
        ]);
        let s = ScaleFunction::from_charset(&e, g, None, 1e-7).unwrap();
        for (a, b) in e.gaps(16, 1.0).unwrap().gaps {
            let rise = s.eval(b, 1e-7) - s.eval(a, 1e-7);
            prop_assert!(rise.contains_within(b - a, 1e-12), "({a},{b}) {rise:?}");
            let ext = s.extend();
            prop_assert_eq!(ext.eval(a, 1e-7), s.eval(a, 1e-7));
        }
    }
}
