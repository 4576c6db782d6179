//! The homology engine against an independent brute-force oracle, plus the
//! rank identities the Morse inequalities rest on.

mod common;

use morseflow::grid::CubicalSet;
use morseflow::homology::{betti, euler, HomologyField};

#[test]
fn engine_matches_oracle_on_random_pairs() {
    let mut rng = common::rng(0x901);
    for trial in 0..60 {
        let n = [4, 6, 8][trial % 3];
        let grid = common::small_grid(n);
        let (x, a) = common::random_pair(&grid, &mut rng);
        let expected = common::oracle_betti(&x, &a);
        let got = betti(&x, &a, HomologyField::Z2).unwrap();
        assert_eq!(got.ranks, expected, "trial {trial} on {n}x{n}");
    }
}

#[test]
fn rationals_agree_with_z2_on_planar_pairs() {
    // planar cubical pairs carry no torsion, so the ranks must coincide
    let mut rng = common::rng(0x902);
    for _ in 0..15 {
        let grid = common::small_grid(6);
        let (x, a) = common::random_pair(&grid, &mut rng);
        let z2 = betti(&x, &a, HomologyField::Z2).unwrap();
        let q = betti(&x, &a, HomologyField::Rational).unwrap();
        assert_eq!(z2.ranks, q.ranks);
    }
}

#[test]
fn subadditivity_and_euler_additivity_on_triples() {
    let mut rng = common::rng(0x903);
    for trial in 0..50 {
        let grid = common::small_grid(6);
        let (x, y, z) = common::random_triple(&grid, &mut rng);
        let xz = betti(&x, &z, HomologyField::Z2).unwrap().ranks;
        let xy = betti(&x, &y, HomologyField::Z2).unwrap().ranks;
        let yz = betti(&y, &z, HomologyField::Z2).unwrap().ranks;
        let m = xz.len();
        // R_q(X,Z) <= R_q(X,Y) + R_q(Y,Z)
        for q in 0..m {
            assert!(xz[q] <= xy[q] + yz[q], "rank subadditivity fails at q={q}, trial {trial}");
        }
        // alternating partial sums are subadditive as well
        for q in 0..m {
            let part = |v: &[usize]| -> i64 {
                (0..=q)
                    .map(|j| {
                        let t = v[j] as i64;
                        if (q - j) % 2 == 0 {
                            t
                        } else {
                            -t
                        }
                    })
                    .sum()
            };
            assert!(part(&xz) <= part(&xy) + part(&yz), "partial-sum subadditivity fails at q={q}, trial {trial}");
        }
        // Euler numbers are additive, exactly
        let chi = |v: &[usize]| -> i64 {
            v.iter().enumerate().map(|(q, &r)| if q % 2 == 0 { r as i64 } else { -(r as i64) }).sum()
        };
        assert_eq!(chi(&xz), chi(&xy) + chi(&yz), "Euler additivity fails, trial {trial}");
    }
}

#[test]
fn excision_on_random_instances() {
    let mut rng = common::rng(0x904);
    for trial in 0..20 {
        let grid = common::small_grid(6);
        let (x, a) = common::random_pair(&grid, &mut rng);
        // remove the interior boxes of A, keep its face boundary
        let boundary = CubicalSet::from_boxes(grid.clone(), a.face_boundary());
        let x_cut = x.difference(&a).union(&boundary);
        let full = betti(&x, &a, HomologyField::Z2).unwrap();
        let cut = betti(&x_cut, &boundary, HomologyField::Z2).unwrap();
        assert_eq!(full.ranks, cut.ranks, "excision fails at trial {trial}");
    }
}

#[test]
fn euler_of_small_shapes() {
    let grid = common::small_grid(5);
    let mut solid = CubicalSet::empty(grid.clone());
    for i in 1..4 {
        for j in 1..4 {
            solid.insert(grid.from_multi(&[i, j]));
        }
    }
    let empty = CubicalSet::empty(grid.clone());
    assert_eq!(euler(&solid, &empty, HomologyField::Z2).unwrap(), 1);

    let mut ring = solid.clone();
    ring.remove(grid.from_multi(&[2, 2]));
    assert_eq!(euler(&ring, &empty, HomologyField::Z2).unwrap(), 0);
}
