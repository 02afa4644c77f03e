use std::sync::Arc;

use num_rational::Ratio;
use proptest::prelude::*;

use lamoo::dominance::{dominance_counts, dominance_counts_bruteforce, dominates, non_dominated_indices};
use lamoo::hypervolume::{hv_exact, hv_sweep_2d, hv_wfg};
use lamoo::partition::{label_by_dominance, RegionPath};
use lamoo::svm::{svm_train, Side, SvmConfig};
use lamoo::theory::{g, g_inverse};
use lamoo::{Bounds, SampleSet};

/// Points on a small integer grid, so ties and duplicates are common.
fn grid_points(m: usize, max_n: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(0i64..6, m), 1..max_n)
}

fn as_ratio(pts: &[Vec<i64>]) -> Vec<Vec<Ratio<i64>>> {
    pts.iter().map(|p| p.iter().map(|&v| Ratio::from_integer(v)).collect()).collect()
}

fn as_f64(pts: &[Vec<i64>]) -> Vec<Vec<f64>> {
    pts.iter().map(|p| p.iter().map(|&v| v as f64).collect()).collect()
}

proptest! {
    #[test]
    fn dominance_is_irreflexive_and_antisymmetric(a in prop::collection::vec(0i64..4, 3), b in prop::collection::vec(0i64..4, 3)) {
        let (a, b) = (as_f64(&[a])[0].clone(), as_f64(&[b])[0].clone());
        prop_assert!(!dominates(&a, &a).unwrap());
        prop_assert!(!(dominates(&a, &b).unwrap() && dominates(&b, &a).unwrap()));
    }

    #[test]
    fn fast_counts_match_brute_force(m in 2usize..5, seed_pts in grid_points(4, 80)) {
        let pts: Vec<Vec<f64>> = as_f64(&seed_pts).into_iter().map(|p| p[..m].to_vec()).collect();
        let counts = dominance_counts(&pts);
        prop_assert_eq!(&counts, &dominance_counts_bruteforce(&pts));
        let front: Vec<usize> = (0..pts.len()).filter(|&i| counts[i] == 0).collect();
        prop_assert_eq!(non_dominated_indices(&pts), front);
    }

    #[test]
    fn hypervolume_ignores_order(pts in grid_points(2, 30), rot in 0usize..30) {
        let q = as_ratio(&pts);
        let mut shuffled = q.clone();
        shuffled.rotate_left(rot % q.len());
        shuffled.reverse();
        let r = [Ratio::from_integer(6), Ratio::from_integer(6)];
        let hv = hv_sweep_2d(&q, &r).unwrap();
        prop_assert_eq!(hv, hv_sweep_2d(&shuffled, &r).unwrap());
        prop_assert_eq!(hv, hv_wfg(&shuffled, &r).unwrap());
    }

    #[test]
    fn hypervolume_is_monotone(pts in grid_points(3, 20), extra in prop::collection::vec(0i64..6, 3)) {
        let q = as_ratio(&pts);
        let r = vec![Ratio::from_integer(6); 3];
        let before = hv_exact(&q, &r).unwrap();
        let mut more = q.clone();
        more.push(as_ratio(&[extra])[0].clone());
        prop_assert!(hv_exact(&more, &r).unwrap() >= before);
    }

    #[test]
    fn labels_split_by_dominance(pts in grid_points(2, 60)) {
        prop_assume!(pts.len() >= 2);
        let set = SampleSet::from_objectives(2, as_f64(&pts)).unwrap();
        let labels = label_by_dominance(&set).unwrap();
        let good = labels.iter().filter(|&&s| s == Side::Good).count();
        prop_assert_eq!(good, pts.len().div_ceil(2));
        let counts = dominance_counts(&as_f64(&pts));
        let worst_good = (0..pts.len()).filter(|&i| labels[i] == Side::Good).map(|i| counts[i]).max().unwrap();
        let best_bad = (0..pts.len()).filter(|&i| labels[i] == Side::Bad).map(|i| counts[i]).min().unwrap_or(usize::MAX);
        prop_assert!(worst_good <= best_bad);
    }

    #[test]
    fn g_is_decreasing_and_inverted(w in prop::collection::vec(0.1f64..100.0, 1..8), l1 in -6f64..4.0, step in 0.01f64..3.0) {
        let (a, b) = (10f64.powf(l1), 10f64.powf(l1 + step));
        prop_assert!(g(a, &w).unwrap() > g(b, &w).unwrap());
        let k = g(a, &w).unwrap();
        let back = g_inverse(k, &w).unwrap();
        prop_assert!((back - a).abs() <= 1e-6 * a, "lambda {a} recovered as {back}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn child_region_lies_in_parent(
        xs in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 12..30),
        probes in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 200),
    ) {
        let labels: Vec<Side> = xs.iter().map(|x| if x[0] + x[1] < 1.0 { Side::Good } else { Side::Bad }).collect();
        prop_assume!(labels.contains(&Side::Good) && labels.contains(&Side::Bad));
        let first = Arc::new(svm_train(&xs, &labels, &SvmConfig::default()).unwrap());
        let flipped: Vec<Side> = xs.iter().map(|x| if x[0] < 0.5 { Side::Good } else { Side::Bad }).collect();
        prop_assume!(flipped.contains(&Side::Good) && flipped.contains(&Side::Bad));
        let second = Arc::new(svm_train(&xs, &flipped, &SvmConfig::default()).unwrap());
        let root = RegionPath::root(Arc::new(Bounds::cube(2, 0.0, 1.0).unwrap()));
        let child = root.child(first, Side::Good);
        let grandchild = child.child(second, Side::Bad);
        for p in &probes {
            if grandchild.contains(p) {
                prop_assert!(child.contains(p));
            }
            if child.contains(p) {
                prop_assert!(root.contains(p));
            }
        }
    }
}
