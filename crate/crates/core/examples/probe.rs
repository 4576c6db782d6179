//! Scratch probe for pipeline parameter behavior (not part of the test suite).

use std::sync::Arc;

use morseflow::grid::CubicalGrid;
use morseflow::morse::{condense_merged, filtration};
use morseflow::outer::{OuterMap, OuterParams};
use morseflow::VectorField;

fn main() {
    let depth = 64;
    let tau = 0.5;
    let rec_factor: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4.0);
    for name in ["circle-attractor", "double-well"] {
        let field = VectorField::builtin(name, 2).unwrap();
        let grid = Arc::new(CubicalGrid::new(vec![-2.0, -2.0], vec![2.0, 2.0], vec![depth, depth]).unwrap());
        let params = OuterParams { tau, h: 1e-2, samples_per_axis: 3, bloat_rings: 0 };
        let t0 = std::time::Instant::now();
        let map = OuterMap::build(grid.clone(), &field, params).unwrap();
        let rec_params = OuterParams { tau: tau * rec_factor, ..params };
        let rec_map = OuterMap::build(grid.clone(), &field, rec_params).unwrap();
        let graph = condense_merged(&rec_map);
        println!("== {name}: {} recurrent components (built in {:?})", graph.len(), t0.elapsed());
        let w = grid.widths()[0];
        for (i, c) in graph.components().iter().enumerate() {
            let mut min_r = f64::INFINITY;
            let mut max_r: f64 = 0.0;
            let mut min_d_circle = f64::INFINITY;
            let mut max_d_circle: f64 = 0.0;
            for b in c.iter() {
                let center = grid.box_center(b);
                let r = (center[0] * center[0] + center[1] * center[1]).sqrt();
                min_r = min_r.min(r);
                max_r = max_r.max(r);
                let dc = (r - 1.0).abs();
                min_d_circle = min_d_circle.min(dc);
                max_d_circle = max_d_circle.max(dc);
            }
            println!(
                "   M{} size {:4}  r in [{:.3},{:.3}] ({:.2},{:.2} widths)  |r-1| max {:.3} ({:.2} widths)",
                i + 1, c.len(), min_r, max_r, min_r / w, max_r / w, max_d_circle, max_d_circle / w
            );
        }
        match filtration(&graph, &map, &rec_map) {
            Ok(filt) => {
                for k in 1..=filt.len() {
                    println!(
                        "   A{k} {:5} boxes   basin {:5}   W{k} {:5}",
                        filt.attractor(k).len(),
                        filt.basin(k).len(),
                        filt.neighborhood(k).len()
                    );
                }
                use morseflow::homology::{basin_betti, critical_group_table, quotient_basin_betti, HomologyField};
                let t1 = std::time::Instant::now();
                let table = critical_group_table(&map, &graph, &filt, HomologyField::Z2).unwrap();
                let beta = basin_betti(&filt, HomologyField::Z2).unwrap();
                let beta_q = quotient_basin_betti(&graph, &filt, HomologyField::Z2).unwrap();
                for (k, g) in table.groups.iter().enumerate() {
                    println!("   C(M{}) = {:?}   C~(M{}) = {:?}", k + 1, g.ranks, k + 1, table.quotient[k].ranks);
                }
                println!("   beta = {:?}  beta~ = {:?}  (homology in {:?})", beta.ranks, beta_q.ranks, t1.elapsed());

                use morseflow::lyapunov::{LyapunovParams, MorseLyapunov};
                let t2 = std::time::Instant::now();
                let ml = MorseLyapunov::build(&field, &map, &graph, &filt, LyapunovParams::new(tau, 1e-2)).unwrap();
                println!("   lyapunov build {:?}  critical ranges {:?}", t2.elapsed(), ml.critical_ranges());
                let t3 = std::time::Instant::now();
                let table = ml.box_table().unwrap();
                println!("   box table in {:?}", t3.elapsed());
                // strict M-L values on Morse covers
                for (k, c) in graph.components().iter().enumerate() {
                    let mut worst: f64 = 0.0;
                    for b in c.iter() {
                        worst = worst.max((table.value[b.0] - k as f64).abs());
                    }
                    println!("   max |V - {k}| on M{} = {worst:.2e}", k + 1);
                }
                // quick dini sample on a coarse grid of points
                let mut samples = Vec::new();
                let excluded = {
                    let mut e = graph.recurrent_set().collar(2);
                    let outside = filt.basin(filt.len()).complement().collar(2);
                    e = e.union(&outside);
                    for k in 1..=filt.len() {
                        e = e.union(&filt.attractor(k).collar(2));
                    }
                    e
                };
                for b in 0..grid.box_count() {
                    if b % 7 == 0 && !excluded.contains(morseflow::BoxId(b)) {
                        samples.push(grid.box_center(morseflow::BoxId(b)));
                    }
                }
                let t4 = std::time::Instant::now();
                let dini = ml.dini_certificate(&samples).unwrap();
                println!(
                    "   dini: {} samples, {} violations, worst margin {:.3e} ({:?})",
                    dini.checked,
                    dini.violations.len(),
                    dini.worst_margin,
                    t4.elapsed()
                );
                for v in dini.violations.iter().take(5) {
                    println!("     violation at {:?}: rate {:.3e} bound {:.3e} witness {:.3e}", v.point, v.rate, v.bound, v.witness);
                }
            }
            Err(e) => {
                println!("   filtration error: {e}");
                use morseflow::morse::combinatorial_attractor;
                let mut seed = morseflow::CubicalSet::empty(grid.clone());
                for (i, c) in graph.components().iter().enumerate() {
                    seed = seed.union(c);
                    match combinatorial_attractor(&map, &seed) {
                        Ok(h) => println!("   hull(M1..M{}) = {} boxes", i + 1, h.len()),
                        Err(e) => println!("   hull(M1..M{}) error: {e}", i + 1),
                    }
                }
            }
        }
    }
}
