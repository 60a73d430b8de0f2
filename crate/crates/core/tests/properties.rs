use proptest::prelude::*;

use subq::box_quantum::BoxConfig;
use subq::thermo_field::{heat_from_probability, probability_from_heat};
use subq::vft_walls::{adiabatic_level_shift, vft_ratio, work_classical, work_quantum, WallMove};

fn box_cfg() -> impl Strategy<Value = BoxConfig> {
    (0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0, 1u32..60).prop_map(|(m, l, h, n)| BoxConfig::new(m, l, h, n).unwrap())
}

proptest! {
    #[test]
    fn heat_round_trip(cfg in box_cfg(), pairs in prop::collection::vec((1e-6f64..10.0, 1e-6f64..10.0), 1..64)) {
        let (p, p0): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let q = heat_from_probability(&p, &p0, &cfg).unwrap();
        let back = probability_from_heat(&q, &p0, &cfg).unwrap();
        for (a, b) in back.iter().zip(&p) {
            prop_assert!((a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn work_forms_agree(cfg in box_cfg(), frac in -0.9f64..2.0) {
        let m = WallMove::new(cfg, frac * cfg.length).unwrap();
        let (a, b) = (work_classical(&m), work_quantum(&m));
        prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(f64::MIN_POSITIVE));
        // compression does positive work, expansion negative
        prop_assert!(a * m.delta <= 0.0);
    }

    #[test]
    fn ratio_reciprocity(x in -0.5f64..0.5) {
        let cfg = BoxConfig::natural(1);
        let r = vft_ratio(&WallMove::new(cfg, x).unwrap()) * vft_ratio(&WallMove::new(cfg, -x).unwrap());
        prop_assert!((r - 1.0).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn first_order_shift_error_is_quadratic(cfg in box_cfg(), frac in 1e-4f64..0.05) {
        let m = WallMove::new(cfg, frac * cfg.length).unwrap();
        let s = adiabatic_level_shift(&m);
        // E ∝ L⁻²: the remainder is 3E(δL/L)² to leading order
        let bound = 3.5 * cfg.energy() * frac * frac;
        prop_assert!((s.exact - s.first_order).abs() <= bound);
    }
}
