use proptest::prelude::*;

use wavelaws::dno::dno_apply;
use wavelaws::harness::is_known_check;
use wavelaws::PeriodicGrid;

fn grid() -> PeriodicGrid {
    PeriodicGrid::new(64, 20.0, -10.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dno_is_linear_in_q(a in 0.0f64..0.05, c in -3.0f64..3.0, s in 1.5f64..4.0) {
        let g = grid();
        let eta = g.from_fn(|x| a * (-(x / s).powi(2)).exp());
        let q = g.from_fn(|x| (x / s) * (-(x / s).powi(2)).exp());
        let one = dno_apply(&eta, &q, 1.0, 4).unwrap();
        let scaled = dno_apply(&eta, &q.scale(c), 1.0, 4).unwrap();
        prop_assert!((&scaled - &one.scale(c)).max_abs() <= 1e-13 * (1.0 + c.abs()));
    }

    #[test]
    fn dno_output_has_zero_mean(a in 0.0f64..0.1, m in 1usize..6, qa in -1.0f64..1.0) {
        let g = grid();
        let k = 2.0 * std::f64::consts::PI * m as f64 / g.length();
        let eta = g.from_fn(|x| a * (k * x).sin());
        let q = g.from_fn(|x| qa * (-(x / 2.0).powi(2)).exp());
        let gq = dno_apply(&eta, &q, 1.0, 4).unwrap();
        prop_assert!(gq.integrate().abs() <= 1e-13);
    }

    #[test]
    fn dno_is_symmetric(a in 0.0f64..0.05, s in 1.5f64..3.0) {
        let g = grid();
        let eta = g.from_fn(|x| a * (-(x / s).powi(2)).exp());
        let u = g.from_fn(|x| (-(x - 1.0).powi(2) / 4.0).exp());
        let v = g.from_fn(|x| x * (-(x * x) / 6.0).exp());
        let gu = dno_apply(&eta, &u, 1.0, 6).unwrap();
        let gv = dno_apply(&eta, &v, 1.0, 6).unwrap();
        let (l, r) = ((&v * &gu).integrate(), (&u * &gv).integrate());
        prop_assert!((l - r).abs() <= 1e-6 * (l.abs() + r.abs() + 1e-12));
    }

    #[test]
    fn arbitrary_text_is_rarely_a_check(id in "[a-zA-Z_0-9]{0,24}") {
        if is_known_check(&id) {
            prop_assert!(
                id.ends_with("_conserved")
                    || id.starts_with("weak_")
                    || id.starts_with("vort_")
                    || id.starts_with("green_")
                    || id.starts_with("bulk_")
                    || matches!(id.as_str(), "hamiltonian_matches_T2" | "contour_bulk_I2" | "edge_guard")
            );
        }
    }
}
