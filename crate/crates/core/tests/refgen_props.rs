use posepilot_core::pose::{HandPair, Point2};
use posepilot_core::refgen::{
    integrate_setpoints, map_axis, map_axis_with, reference_from_zones, BandResponse, OutsideResponse, Rect,
    ReferenceGenerator, ReferenceVector, ScalingFactors, Setpoints, Zone, ZoneMode,
};
use proptest::prelude::*;

/// Strictly nested interval quadruple `lo < dlo < dhi < hi` inside [0, 1].
fn interval() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    prop::array::uniform4(0.0f64..1.0).prop_filter_map("distinct", |mut v| {
        v.sort_by(f64::total_cmp);
        (v[0] < v[1] && v[1] < v[2] && v[2] < v[3] && v[3] - v[0] > 1e-6).then_some((v[0], v[1], v[2], v[3]))
    })
}

/// Nested interval whose dead band is centered on the outer midpoint.
fn centered() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.0f64..0.45, 0.05f64..0.5, 0.05f64..0.95).prop_map(|(lo, half, frac)| {
        let half = half.min(1.0 - lo) / 2.0;
        let mid = lo + half;
        let dead = half * frac;
        (lo, mid - dead, mid + dead, lo + 2.0 * half)
    })
}

fn all_modes() -> [ZoneMode; 4] {
    let b = [BandResponse::Verbatim, BandResponse::RescaledContinuous];
    let o = [OutsideResponse::Zero, OutsideResponse::ClampAtBoundary];
    [
        ZoneMode { band: b[0], outside: o[0] },
        ZoneMode { band: b[0], outside: o[1] },
        ZoneMode { band: b[1], outside: o[0] },
        ZoneMode { band: b[1], outside: o[1] },
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn output_bounded_and_zero_where_required((lo, dlo, dhi, hi) in interval(), p in -0.5f64..1.5) {
        let c = 0.5 * (lo + hi);
        for mode in all_modes() {
            let r = map_axis_with(p, lo, dlo, dhi, hi, c, mode);
            prop_assert!((-1.0..=1.0).contains(&r));
            if (dlo..=dhi).contains(&p) {
                prop_assert_eq!(r, 0.0);
            }
            if (p < lo || p > hi) && mode.outside == OutsideResponse::Zero {
                prop_assert_eq!(r, 0.0);
            }
        }
    }

    #[test]
    fn unit_magnitude_at_outer_edges((lo, dlo, dhi, hi) in centered()) {
        let c = 0.5 * (lo + hi);
        prop_assert_eq!(map_axis(lo, lo, dlo, dhi, hi, c), 1.0);
        prop_assert_eq!(map_axis(hi, lo, dlo, dhi, hi, c), -1.0);
    }

    #[test]
    fn odd_about_center((lo, dlo, dhi, hi) in centered(), t in 0.0f64..1.0) {
        let c = 0.5 * (lo + hi);
        let d = t * (hi - c);
        let edge = |x: f64, e: f64| (x - e).abs() < 1e-9;
        prop_assume!(!edge(d, dhi - c) && !edge(d, hi - c));
        let a = map_axis(c + d, lo, dlo, dhi, hi, c);
        let b = map_axis(c - d, lo, dlo, dhi, hi, c);
        prop_assert!((a + b).abs() < 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn verbatim_is_linear_in_the_band((lo, dlo, dhi, hi) in centered(), t in 0.0f64..1.0) {
        let c = 0.5 * (lo + hi);
        let p = lo + t * (dlo - lo);
        prop_assume!(p < dlo);
        let r = map_axis(p, lo, dlo, dhi, hi, c);
        prop_assert!((r - (c - p) / (c - lo)).abs() < 1e-12);
    }

    #[test]
    fn rescaled_band_is_continuous_at_dead_edge((lo, dlo, dhi, hi) in interval()) {
        let mode = ZoneMode { band: BandResponse::RescaledContinuous, outside: OutsideResponse::Zero };
        let c = 0.5 * (lo + hi);
        let eps = 1e-12 * (dlo - lo).max(1e-300);
        let just_out = map_axis_with(dlo - eps, lo, dlo, dhi, hi, c, mode);
        prop_assert!(just_out.abs() < 1e-9);
        prop_assert_eq!(map_axis_with(lo, lo, dlo, dhi, hi, c, mode), 1.0);
        prop_assert_eq!(map_axis_with(hi, lo, dlo, dhi, hi, c, mode), -1.0);
    }

    #[test]
    fn setpoint_steps_are_exact(k in 1u32..200, r in -1.0f64..=1.0) {
        let s = ScalingFactors::default();
        let mut sp = Setpoints::default();
        for _ in 0..k {
            sp = integrate_setpoints(sp, ReferenceVector { r1: r, r2: r, r3: r, r4: r }, &s);
        }
        prop_assert_eq!(sp.phi, r * 0.15);
        prop_assert_eq!(sp.theta, r * 0.15);
        // repeated addition of the same increment: compare to the product within rounding
        prop_assert!((sp.psi - f64::from(k) * r * 0.06).abs() <= 1e-12);
        prop_assert!((sp.z - f64::from(k) * r * 0.01).abs() <= 1e-12);
    }
}

#[test]
fn documented_axis_examples() {
    let (lo, dlo, dhi, hi, c) = (0.20, 0.45, 0.55, 0.80, 0.50);
    assert_eq!(map_axis(0.50, lo, dlo, dhi, hi, c), 0.0);
    assert_eq!(map_axis(0.20, lo, dlo, dhi, hi, c), 1.0);
    assert!((map_axis(0.35, lo, dlo, dhi, hi, c) - 0.5).abs() < 1e-12);
    assert_eq!(map_axis(0.10, lo, dlo, dhi, hi, c), 0.0);
}

#[test]
fn hands_drive_their_own_axes() {
    let (z1, z2) = (Zone::default_zone1(), Zone::default_zone2());
    let mut g = ReferenceGenerator::new(z1, z2, ZoneMode::default());
    // arm with both wrists in the dead zones
    assert_eq!(g.make_reference(&HandPair { left: z1.center(), right: z2.center() }), ReferenceVector::ZERO);
    assert!(g.is_armed());
    let r = g.make_reference(&HandPair { left: Point2::new(z1.center().x, 0.20), right: z2.center() });
    assert_eq!(r, ReferenceVector { r1: 1.0, r2: 0.0, r3: 0.0, r4: 0.0 });
    let r = g.make_reference(&HandPair { left: z1.center(), right: Point2::new(0.95, z2.center().y) });
    assert_eq!(r, ReferenceVector { r1: 0.0, r2: 0.0, r3: 0.0, r4: -1.0 });
}

#[test]
fn unarmed_generator_stays_silent() {
    let (z1, z2) = (Zone::default_zone1(), Zone::default_zone2());
    let mut g = ReferenceGenerator::new(z1, z2, ZoneMode::default());
    for i in 0..50 {
        let x = 0.06 + 0.007 * i as f64;
        let hands = HandPair { left: Point2::new(x, 0.3), right: Point2::new(0.6, 0.75) };
        assert_eq!(g.make_reference(&hands), ReferenceVector::ZERO);
        assert_ne!(reference_from_zones(&hands, &z1, &z2, ZoneMode::default()), ReferenceVector::ZERO);
    }
}

#[test]
fn zones_must_nest() {
    let outer = Rect::new(0.1, 0.1, 0.5, 0.5).unwrap();
    assert!(Zone::new(outer, Rect::new(0.1, 0.2, 0.3, 0.3).unwrap()).is_err());
    assert!(Zone::new(outer, Rect::new(0.2, 0.2, 0.3, 0.3).unwrap()).is_ok());
    assert!(Rect::new(0.5, 0.1, 0.4, 0.2).is_err());
}
