//! Acceptance suite: every criterion below is pinned with its tolerance and
//! prints one PASS line when it holds. The two reference systems are the
//! planar circle system (equilibrium at the origin enclosed by an invariant
//! circle, attractor the closed unit disk) and the double well (two sinks and
//! a saddle on the segment attractor), both at depth 64, tau 0.5, one bloat
//! ring on the artifact map.

mod common;

use morseflow::grid::{BoxId, CubicalSet};
use morseflow::homology::{betti, critical_groups, morse_numbers, HomologyField};
use morseflow::lyapunov::MorseLyapunov;
use morseflow::morse::forward_invariant_trim;
use morseflow::report::verify_inequalities;
use rand::Rng;
use rayon::prelude::*;

fn circle_ml() -> &'static MorseLyapunov {
    static ML: std::sync::OnceLock<MorseLyapunov> = std::sync::OnceLock::new();
    ML.get_or_init(|| common::circle().analysis.lyapunov().unwrap())
}

fn double_well_ml() -> &'static MorseLyapunov {
    static ML: std::sync::OnceLock<MorseLyapunov> = std::sync::OnceLock::new();
    ML.get_or_init(|| common::double_well().analysis.lyapunov().unwrap())
}

#[test]
fn criterion_01_circle_morse_graph() {
    let fix = common::circle();
    let graph = &fix.analysis.graph;
    let grid = &fix.analysis.grid;
    let w = grid.max_width();
    assert_eq!(graph.len(), 2, "expected exactly 2 recurrent components");

    // component 1 within two box widths of the origin
    for b in graph.components()[0].iter() {
        let d = grid.distance_to_box(b, &[0.0, 0.0]);
        assert!(d <= 2.0 * w, "M1 box at distance {d}");
    }
    // component 2 within two box widths of the unit circle
    for b in graph.components()[1].iter() {
        let (lo, hi) = grid.box_bounds(b);
        let rmin = grid.distance_to_box(b, &[0.0, 0.0]);
        let rmax = lo
            .iter()
            .zip(&hi)
            .map(|(&l, &h)| l.abs().max(h.abs()).powi(2))
            .sum::<f64>()
            .sqrt();
        let d = if rmin <= 1.0 && 1.0 <= rmax { 0.0 } else { (rmin - 1.0).abs().min((rmax - 1.0).abs()) };
        assert!(d <= 2.0 * w, "M2 box at distance {d} from the circle");
    }
    assert!(fix.build_seconds <= 60.0, "pipeline took {:.1}s", fix.build_seconds);
    println!("criterion 01 PASS: 2 components, covers within 2 widths, built in {:.1}s", fix.build_seconds);
}

#[test]
fn criterion_02_circle_critical_groups() {
    let fix = common::circle();
    let hom = fix.analysis.homology().unwrap();
    assert_eq!(hom.table.field, HomologyField::Z2);
    assert_eq!(hom.table.groups[0].ranks, vec![1, 0, 0], "C(M1)");
    assert_eq!(hom.table.groups[1].ranks, vec![0, 0, 0], "C(M2)");
    assert_eq!(hom.table.quotient[0].ranks, vec![1, 0, 0], "quotient C(M1)");
    assert_eq!(hom.table.quotient[1].ranks, vec![0, 0, 1], "quotient C(M2)");
    println!("criterion 02 PASS: critical groups (1,0,0), (0,0,0); quotient (1,0,0), (0,0,1)");
}

#[test]
fn criterion_03_circle_morse_report() {
    let fix = common::circle();
    let hom = fix.analysis.homology().unwrap();
    let report = fix.analysis.report("circle-attractor", &hom);
    assert_eq!(report.plain.morse_numbers, vec![1, 0, 0]);
    assert_eq!(report.plain.betti_numbers, vec![1, 0, 0]);
    assert!(report.plain.inequalities.iter().all(|&b| b));
    assert!(report.plain.equation);
    assert_eq!(report.plain.euler, 1);
    assert_eq!(report.quotient.morse_numbers, vec![1, 0, 1]);
    assert_eq!(report.quotient.betti_numbers, vec![1, 0, 1]);
    assert!(report.quotient.equation);
    assert_eq!(report.quotient.euler, 2);
    println!("criterion 03 PASS: m=(1,0,0), beta=(1,0,0), chi=1; quotient m=(1,0,1), chi=2");
}

#[test]
fn criterion_04_double_well_report() {
    let fix = common::double_well();
    assert_eq!(fix.analysis.graph.len(), 3);
    let hom = fix.analysis.homology().unwrap();
    let m = morse_numbers(&hom.table.groups);
    assert_eq!(m, vec![2, 1, 0]);
    let report = verify_inequalities(&m, &hom.basin.ranks);
    assert_eq!(report.betti_numbers, vec![1, 0, 0]);
    // 2 >= 1 and -1 >= -1
    assert!(report.inequalities[0] && report.inequalities[1]);
    assert!(report.equation && report.euler == 1);
    assert_eq!(report.gamma, vec![1, 0, 0]);
    assert!(report.gamma_nonnegative);
    println!("criterion 04 PASS: 3 components, m=(2,1,0), gamma=(1,0,0), equation 1=1");
}

#[test]
fn criterion_05_strict_values() {
    for (fix, ml) in [(common::circle(), circle_ml()), (common::double_well(), double_well_ml())] {
        let table = ml.box_table().unwrap();
        let mut worst: f64 = 0.0;
        for (k, comp) in fix.analysis.graph.components().iter().enumerate() {
            for b in comp.iter() {
                worst = worst.max((table.value[b.0] - k as f64).abs());
            }
        }
        assert!(worst <= 0.05, "{}: max |V - (k-1)| = {worst}", fix.name);
        println!("criterion 05 PASS ({}): max |V - (k-1)| = {worst:.2e} <= 0.05", fix.name);
    }
}

#[test]
fn criterion_06_dini_certificate() {
    for (fix, ml) in [(common::circle(), circle_ml()), (common::double_well(), double_well_ml())] {
        let allowed = {
            let basin = fix.analysis.filt.basin(fix.analysis.filt.len());
            basin.difference(&fix.analysis.certificate_exclusion())
        };
        let mut rng = common::rng(0xd1a1 ^ fix.name.len() as u64);
        let samples = common::sample_points(&allowed, 1000, &mut rng);
        let report = ml.dini_certificate(&samples).unwrap();
        assert_eq!(report.checked, 1000);
        assert!(report.pass, "{}: {} violations, worst margin {}", fix.name, report.violations.len(), report.worst_margin);
        println!(
            "criterion 06 PASS ({}): 1000 samples, 0 violations, worst margin {:.3e}",
            fix.name, report.worst_margin
        );
    }
}

#[test]
fn criterion_07_psi_contraction() {
    for (fix, ml) in [(common::circle(), circle_ml()), (common::double_well(), double_well_ml())] {
        let lambda = ml.params().lambda;
        let h = ml.params().h;
        let basin = fix.analysis.filt.basin(fix.analysis.filt.len());
        let mut rng = common::rng(0x9c1 ^ fix.name.len() as u64);
        let points = common::sample_points(basin, 200, &mut rng);
        let mut checked = 0;
        for x in &points {
            let trace = ml.trace(x).unwrap();
            let at0 = ml.eval_trace(&trace, 0).unwrap();
            for tau in [0.1, 0.5] {
                let node = (tau / h).round() as usize;
                let shifted = ml.eval_trace(&trace, node).unwrap();
                for (l0, l1) in at0.levels.iter().zip(&shifted.levels) {
                    use morseflow::lyapunov::Membership::Interior;
                    if l0.membership == Interior && l1.membership == Interior {
                        let bound = (-lambda * tau).exp() * l0.psi * (1.0 + 1e-6);
                        assert!(l1.psi <= bound + 1e-300, "{}: {} > {}", fix.name, l1.psi, bound);
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked >= 200, "{}: too few interior contraction checks ({checked})", fix.name);
        println!("criterion 07 PASS ({}): {checked} contraction inequalities hold", fix.name);
    }
}

#[test]
fn criterion_08_deformation_retract() {
    let fix = common::circle();
    let ml = circle_ml();
    let (a, b) = (0.25, 0.75);
    let tol = 1e-6 * (b - a);
    let grid = &fix.analysis.grid;

    // 500 random points in the b-sublevel (but above a), via rejection
    let mut rng = common::rng(0x8e7);
    let mut points = Vec::new();
    let mut fixed_points = Vec::new();
    while points.len() < 500 || fixed_points.len() < 100 {
        let p = common::random_point_in(grid, BoxId(rng.gen_range(0..grid.box_count())), &mut rng);
        let Ok(eval) = ml.evaluate(&p) else { continue };
        if eval.value <= a && fixed_points.len() < 100 {
            fixed_points.push(p);
        } else if eval.value > a && eval.value <= b && points.len() < 500 {
            points.push(p);
        }
    }
    let results: Vec<f64> = points
        .par_iter()
        .map(|p| {
            let y = ml.retract(1.0, p, a, b).unwrap();
            ml.evaluate(&y).unwrap().value
        })
        .collect();
    for v in &results {
        assert!(*v <= a + tol, "retract landed at V = {v}");
    }
    // the a-sublevel is fixed pointwise, exactly
    for p in &fixed_points {
        assert_eq!(ml.retract(1.0, p, a, b).unwrap(), *p);
    }
    println!("criterion 08 PASS: 500 retractions into V_a within {tol:.1e}, 100 fixed points exact");
}

#[test]
fn criterion_09_homology_oracle_equivalence() {
    let mut rng = common::rng(0x0e0);
    for trial in 0..200 {
        let n = [4, 5, 6, 8][trial % 4];
        let grid = common::small_grid(n);
        let (x, a) = common::random_pair(&grid, &mut rng);
        let expected = common::oracle_betti(&x, &a);
        // betti() asserts boundary-squares-to-zero and Euler-Poincare inside
        let got = betti(&x, &a, HomologyField::Z2).unwrap();
        assert_eq!(got.ranks, expected, "trial {trial}");
    }
    println!("criterion 09 PASS: 200 random pairs match the brute-force oracle exactly");
}

#[test]
fn criterion_10_rank_inequality_suite() {
    let mut rng = common::rng(0x1ea);
    for trial in 0..50 {
        let grid = common::small_grid(6);
        let (x, y, z) = common::random_triple(&grid, &mut rng);
        let xz = betti(&x, &z, HomologyField::Z2).unwrap().ranks;
        let xy = betti(&x, &y, HomologyField::Z2).unwrap().ranks;
        let yz = betti(&y, &z, HomologyField::Z2).unwrap().ranks;
        for q in 0..xz.len() {
            assert!(xz[q] <= xy[q] + yz[q], "rank subadditivity, trial {trial} q={q}");
            let part = |v: &[usize]| -> i64 {
                (0..=q).map(|j| (v[j] as i64) * if (q - j) % 2 == 0 { 1 } else { -1 }).sum()
            };
            assert!(part(&xz) <= part(&xy) + part(&yz), "partial sums, trial {trial} q={q}");
        }
        let chi =
            |v: &[usize]| -> i64 { v.iter().enumerate().map(|(q, &r)| (r as i64) * if q % 2 == 0 { 1 } else { -1 }).sum() };
        assert_eq!(chi(&xz), chi(&xy) + chi(&yz), "Euler additivity, trial {trial}");
    }
    println!("criterion 10 PASS: subadditivity and Euler additivity on 50 nested triples, exact");
}

#[test]
fn criterion_11_invariance_of_critical_groups() {
    for fix in [common::circle(), common::double_well()] {
        let analysis = &fix.analysis;
        let map = &analysis.hit_map;
        let l = analysis.filt.len();
        let reference: Vec<Vec<usize>> = (1..=l)
            .map(|k| critical_groups(map, &analysis.filt, k, HomologyField::Z2).unwrap().ranks)
            .collect();

        // route 1: one-ring shrink of every neighborhood, re-trimmed
        let shrunk: Vec<CubicalSet> = (1..=l)
            .map(|k| {
                let w = analysis.filt.neighborhood(k);
                let eroded = w.difference(&CubicalSet::from_boxes(w.grid().clone(), w.face_boundary()));
                let trimmed = forward_invariant_trim(map, &eroded);
                assert!(analysis.filt.attractor(k).is_subset(&trimmed), "shrink lost A_{k}");
                trimmed
            })
            .collect();
        for k in 1..=l {
            let a = if k == 1 {
                CubicalSet::empty(analysis.grid.clone())
            } else {
                shrunk[k - 2].clone()
            };
            let ranks = betti(&shrunk[k - 1], &a, HomologyField::Z2).unwrap().ranks;
            assert_eq!(ranks, reference[k - 1], "{}: shrунk route differs at k={k}", fix.name);
        }

        // route 2: sublevel pairs of two structurally different strict M-L
        // functions
        for (lambda, scale) in [(1.0, 1.0), (2.0, 2.0)] {
            let ml = analysis.lyapunov_variant(lambda, scale).unwrap();
            let table = ml.box_table().unwrap();
            for k in 1..=l {
                let x = table.sublevel_cover(k as f64 - 0.5);
                let a = table.sublevel_cover(k as f64 - 1.5);
                let ranks = betti(&x, &a, HomologyField::Z2).unwrap().ranks;
                assert_eq!(
                    ranks,
                    reference[k - 1],
                    "{}: sublevel route (lambda={lambda}) differs at k={k}",
                    fix.name
                );
            }
        }
        println!("criterion 11 PASS ({}): neighborhood shrink and both M-L sublevel routes agree", fix.name);
    }
}

#[test]
fn criterion_12_integrator_order() {
    let exact = {
        let u0 = 0.25f64;
        (u0 * (2.0f64).exp() / (1.0 - u0 + u0 * (2.0f64).exp())).sqrt()
    };
    let field = morseflow::VectorField::DoubleWell;
    let run = |h: f64| (morseflow::integrate(&field, &[0.5, 0.0], h, 1.0).unwrap().last()[0] - exact).abs();
    let dw_ratio = run(0.05) / run(0.025);
    assert!((12.0..=20.0).contains(&dw_ratio), "double-well ratio {dw_ratio}");

    let sink = morseflow::VectorField::LinearSink { dim: 1 };
    let sink_exact = (-0.7f64).exp();
    let srun = |h: f64| (morseflow::integrate(&sink, &[1.0], h, 0.7).unwrap().last()[0] - sink_exact).abs();
    let sink_ratio = srun(0.1) / srun(0.05);
    assert!((12.0..=20.0).contains(&sink_ratio), "linear-sink ratio {sink_ratio}");
    println!("criterion 12 PASS: convergence ratios {dw_ratio:.2} and {sink_ratio:.2} in [12, 20]");
}
