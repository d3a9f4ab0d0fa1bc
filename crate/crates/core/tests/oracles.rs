use num_rational::Ratio;

use mplab::gallery::{self, LatticeMeasure};
use mplab::harness::sweep_space;
use mplab::mechanism;
use mplab::packing::{self, PackingMode};
use mplab::scales;
use mplab::{Metric, MechanismKind, PointId};

#[test]
fn two_point_sampling_frequency() {
    let z = gallery::line(2).unwrap();
    let m = mechanism::build_exponential(&z, 2.0 * 3f64.ln(), Some(0.5)).unwrap();
    let trials = 100_000u64;
    let hits = (0..trials).filter(|&s| m.sample(PointId(0), s) == PointId(0)).count() as f64;
    let p = 0.75;
    let sd = (p * (1.0 - p) / trials as f64).sqrt();
    assert!((hits / trials as f64 - p).abs() <= 3.0 * sd, "{hits}");
}

#[test]
fn line_packing_examples() {
    let z = gallery::line(4).unwrap();
    let all: Vec<PointId> = z.points().collect();
    let count = |e: f64| packing::packing_number(&z, Metric::Rho1, &all, e, PackingMode::Exact).unwrap().count;
    assert_eq!(count(0.5), 4);
    assert_eq!(count(1.0), 2);
    assert_eq!(count(2.0), 2);
    assert_eq!(count(3.0), 1);
}

#[test]
fn hamming_square_packing() {
    let z = gallery::hamming_cube(2).unwrap();
    let all: Vec<PointId> = z.points().collect();
    let r = packing::packing_number(&z, Metric::Rho1, &all, 1.0, PackingMode::Exact).unwrap();
    assert_eq!(r.count, 2);
    let g = packing::greedy_maximal_separated(&z, Metric::Rho1, &all, 1.0, None);
    assert_eq!(g.points, vec![PointId(0), PointId(3)]);
}

#[test]
fn single_point_scales_vanish() {
    let z = gallery::line(1).unwrap();
    let r = scales::scale_report(&z, 1.0).unwrap();
    assert_eq!(r.entropic.value, 0.0);
    assert_eq!(r.diametric.value, 0.0);
}

#[test]
fn lattice_w1_is_a_metric() {
    let z = gallery::lattice_measure_space(1, 3, 3).unwrap();
    assert_eq!(z.len(), 10);
    assert!(z.validate().is_clean());
    let d = z.metric(Metric::Rho1);
    for i in 0..z.len() {
        for j in 0..z.len() {
            assert_eq!(d.get(i, j), d.get(j, i));
            assert_eq!(d.get(i, j) == 0.0, i == j);
            for k in 0..z.len() {
                assert!(d.get(i, k) <= d.get(i, j) + d.get(j, k) + 1e-12);
            }
        }
    }
}

#[test]
fn w1_of_point_masses_is_sup_distance() {
    let n = 4;
    for a in 0..n * n {
        for b in 0..n * n {
            let mu = LatticeMeasure::point_mass(2, n, a).unwrap();
            let nu = LatticeMeasure::point_mass(2, n, b).unwrap();
            let t = gallery::w1_distance(&mu, &nu).unwrap();
            let (ca, cb) = (mu.coords(a), nu.coords(b));
            let steps = ca.iter().zip(&cb).map(|(x, y)| x.abs_diff(*y)).max().unwrap();
            assert!(t.certified);
            assert_eq!(t.cost, Ratio::new(steps as i64, n as i64));
        }
    }
}

#[test]
fn composition_count_matches_binomial() {
    fn count(total: usize, parts: usize) -> u64 {
        if parts == 1 {
            1
        } else {
            (0..=total).map(|k| count(total - k, parts - 1)).sum()
        }
    }
    for gamma in [0.5, 0.25] {
        let c = gallery::wasserstein_cover(1, gamma).unwrap();
        let k = c.size();
        assert!(k <= 8);
        assert_eq!(c.lambda_size.to_string(), count(k, k).to_string());
    }
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let z = gallery::fg_ultrametric_cube(&gallery::UltrametricProfile::baire(2.0, 6).unwrap()).unwrap();
    let alphas = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
    let kinds = [MechanismKind::Exponential, MechanismKind::UltrametricRelaxed];
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sweep_space(&z, "baire", &alphas, &kinds, 200, 5).unwrap())
            .to_csv_string()
            .unwrap()
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn relaxed_mechanism_lemmas_on_geometric_cube() {
    let profile = gallery::UltrametricProfile::geometric(2.0, 3.0, 6).unwrap();
    let z = gallery::fg_ultrametric_cube(&profile).unwrap();
    for alpha in [0.5, 2.0, 8.0, 32.0] {
        let m = mechanism::build_ultrametric_relaxed(&z, alpha, None).unwrap();
        assert!(mechanism::audit_privacy(&m, &z).unwrap().pass);
        assert!(mechanism::verify_relaxed_lemmas(&m, &z).unwrap().all_hold());
    }
}
