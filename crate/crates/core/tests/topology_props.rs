use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scno_core::topology::{
    attached_cell_family, betti, betti_over, greedy_collapse, simplex_skeleton, verify_normal_morse_data,
    SimplicialComplex,
};
use scno_core::Gf2;

fn choose(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn random_complex(seed: u64) -> SimplicialComplex {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=7);
    let facets: Vec<Vec<usize>> = (0..rng.gen_range(0..=6))
        .map(|_| {
            let mut f: Vec<usize> = (1..=n).filter(|_| rng.gen_bool(0.45)).collect();
            if f.is_empty() {
                f.push(rng.gen_range(1..=n));
            }
            f
        })
        .collect();
    SimplicialComplex::new(n, facets).unwrap()
}

/// `sum (-1)^d f_d` straight from the faces.
fn euler_from_faces(c: &SimplicialComplex) -> i64 {
    c.face_counts()
        .iter()
        .enumerate()
        .map(|(d, &f)| if d % 2 == 0 { f as i64 } else { -(f as i64) })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn euler_characteristic_is_the_alternating_betti_sum(seed in any::<u64>()) {
        let c = random_complex(seed);
        let b = betti(&c);
        prop_assert_eq!(b.euler_characteristic, euler_from_faces(&c));
        prop_assert_eq!(b.alternating_sum(), euler_from_faces(&c));
        let b2 = betti_over::<Gf2>(&c);
        prop_assert_eq!(b2.alternating_sum(), euler_from_faces(&c));
        // mod 2 coefficients can only add classes (torsion)
        for d in -1..=c.dimension().max(0) {
            prop_assert!(b2.reduced(d) >= b.reduced(d));
        }
    }

    #[test]
    fn collapsible_complexes_are_acyclic(seed in any::<u64>()) {
        let c = random_complex(seed);
        if greedy_collapse(&c) {
            prop_assert!(betti(&c).is_acyclic());
        }
    }

    #[test]
    fn facet_text_round_trips(seed in any::<u64>()) {
        let c = random_complex(seed);
        let back = SimplicialComplex::from_facet_text(&c.to_facet_text(), Some(c.n_vertices())).unwrap();
        prop_assert_eq!(back, c);
    }
}

#[test]
fn skeleta_of_simplices_have_one_nonzero_betti_number() {
    for p in 1..=8usize {
        for q in 0..p {
            let dim = q as isize - 1;
            let sk = simplex_skeleton(p, dim).unwrap();
            let b = betti(&sk);
            for d in -1..=p as isize {
                let want = if d == dim { choose(p - 1, q) } else { 0 };
                assert_eq!(b.reduced(d), want, "p {p} q {q} dimension {d}");
            }
            assert_eq!(betti_over::<Gf2>(&sk), b, "p {p} q {q}");
            assert_eq!(b.euler_characteristic, euler_from_faces(&sk));
        }
    }
}

#[test]
fn attached_families_agree_in_both_characteristics() {
    for p in 1..=8usize {
        for q in 0..p {
            let cells = attached_cell_family(p, q).unwrap();
            assert_eq!(cells.len(), choose(p - 1, q));
            let sk = simplex_skeleton(p, q as isize - 1).unwrap();
            let union = sk.union(&SimplicialComplex::new(p, cells).unwrap());
            let b = betti(&union);
            assert!(b.is_acyclic(), "p {p} q {q}");
            assert_eq!(betti_over::<Gf2>(&union), b);
            assert_eq!(b.euler_characteristic, euler_from_faces(&union));
            let report = verify_normal_morse_data(p, q).unwrap();
            assert!(report.all_ok(), "p {p} q {q}: {report:?}");
        }
    }
}

#[test]
fn projective_plane_shows_torsion_mod_two() {
    // six-vertex triangulation of the real projective plane
    let facets = [
        [1, 2, 4], [1, 2, 6], [1, 3, 4], [1, 3, 5], [1, 5, 6],
        [2, 3, 5], [2, 3, 6], [2, 4, 5], [3, 4, 6], [4, 5, 6],
    ];
    let c = SimplicialComplex::new(6, facets.iter().map(|f| f.to_vec())).unwrap();
    let q = betti(&c);
    let two = betti_over::<Gf2>(&c);
    assert!(q.is_acyclic());
    assert_eq!((two.reduced(1), two.reduced(2)), (1, 1));
    assert_eq!(euler_from_faces(&c), 1);
}
