use proptest::prelude::*;
use roman_core::kinematics::*;

fn radius() -> impl Strategy<Value = f64> {
    0.002..0.05f64
}

fn axis() -> impl Strategy<Value = Axis> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("non-degenerate", |(x, y, z)| x * x + y * y + z * z > 1e-3)
        .prop_map(|(x, y, z)| Axis::new([x, y, z]).unwrap())
}

fn rotational_stage() -> impl Strategy<Value = TransmissionStage> {
    prop_oneof![
        (radius(), radius()).prop_map(|(a, b)| TransmissionStage::Spur(SpurPair::new(a, b))),
        (radius(), radius(), axis())
            .prop_map(|(a, b, ax)| TransmissionStage::Bevel(BevelPair::new(a, b, ax))),
    ]
}

fn chain(with_rack: bool) -> impl Strategy<Value = TransmissionChain> {
    (prop::collection::vec(rotational_stage(), 0..5), radius()).prop_map(move |(mut stages, r)| {
        if with_rack {
            stages.push(TransmissionStage::Rack(GearRack::new(r, true)));
        }
        TransmissionChain::new(stages).unwrap()
    })
}

fn any_chain() -> impl Strategy<Value = TransmissionChain> {
    prop_oneof![chain(false), chain(true)]
}

/// Closed-form magnitude gain: product of |r_in / r_out|, times r for a rack.
fn speed_gain_oracle(chain: &TransmissionChain) -> f64 {
    let mut gain = 1.0;
    for stage in &chain.stages {
        match stage {
            TransmissionStage::Spur(p) => gain *= p.r_in / p.r_out,
            TransmissionStage::Bevel(p) => gain *= p.r_in / p.r_out,
            TransmissionStage::Rack(r) => gain *= r.r,
            _ => unreachable!(),
        }
    }
    gain
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn power_is_conserved(c in any_chain(), omega in -50.0..50.0f64, tau in -2.0..2.0f64) {
        let input = ShaftState::new(omega, tau);
        let out = chain_transmit(input, &c, 0.0).unwrap();
        let (p_in, p_out) = (input.power().abs(), out.power().abs());
        prop_assert!(rel(p_in, p_out) <= 1e-9 || (p_in < 1e-300 && p_out < 1e-300));
    }

    #[test]
    fn gains_compose_multiplicatively(c in any_chain(), omega in 0.1..50.0f64, tau in 0.01..2.0f64) {
        let gain = speed_gain_oracle(&c);
        let out = chain_transmit(ShaftState::new(omega, tau), &c, 0.0).unwrap();
        prop_assert!(rel(out.rate().abs(), omega * gain) <= 1e-9);
        prop_assert!(rel(out.effort().abs(), tau / gain) <= 1e-9);
        prop_assert!(rel(c.jacobian(0.3).unwrap().abs(), gain) <= 1e-9);
    }

    #[test]
    fn bevel_preserves_power(a in radius(), b in radius(), ax in axis(), omega in -50.0..50.0f64, tau in -2.0..2.0f64) {
        let input = ShaftState::new(omega, tau);
        let out = bevel_transmit(input, &BevelPair::new(a, b, ax)).unwrap();
        prop_assert!(rel(input.power(), out.power()) <= 1e-9 || input.power() == 0.0);
        prop_assert!((out.axis.norm() - 1.0).abs() <= 1e-9);
        prop_assert_eq!(out.axis, ax);
    }

    #[test]
    fn rack_power_matches_shaft(omega in -50.0..50.0f64, tau in -2.0..2.0f64, r in radius()) {
        let out = rack_transmit(ShaftState::new(omega, tau), &GearRack::new(r, true), 0.0).unwrap();
        prop_assert!(rel(out.power(), omega * tau) <= 1e-9 || omega * tau == 0.0);
    }

    #[test]
    fn reflect_inverts_transmit(c in any_chain(), tau in 0.01..2.0f64) {
        let out = chain_transmit(ShaftState::new(1.0, tau), &c, 0.0).unwrap();
        let back = chain_reflect_load(out.effort(), &c, 0.0).unwrap();
        prop_assert!(rel(back, tau) <= 1e-9, "{} vs {}", back, tau);
    }

    #[test]
    fn position_derivative_matches_velocity(c in any_chain(), theta in -20.0..20.0f64) {
        let h = 1e-6;
        let fd = (chain_output(theta + h, &c).unwrap() - chain_output(theta - h, &c).unwrap()) / (2.0 * h);
        let v = chain_transmit(ShaftState::new(1.0, 0.1), &c, theta).unwrap().rate();
        prop_assert!(rel(fd, v) <= 1e-4, "fd {} vs {}", fd, v);
    }

    #[test]
    fn pin_derivative_matches_velocity(r in radius(), theta in -20.0..20.0f64) {
        prop_assume!(theta.cos().abs() > 0.05);
        let c = TransmissionChain::new(vec![TransmissionStage::PinInSlot(PinInSlot { crank_radius: r, sided: Sided::Double })]).unwrap();
        let h = 1e-6;
        let fd = (chain_output(theta + h, &c).unwrap() - chain_output(theta - h, &c).unwrap()) / (2.0 * h);
        let v = chain_transmit(ShaftState::new(1.0, 0.1), &c, theta).unwrap().rate();
        prop_assert!(rel(fd, v) <= 1e-4);
    }

    #[test]
    fn pin_in_slot_is_bounded(r in radius(), theta in -1e3..1e3f64) {
        let double = PinInSlot { crank_radius: r, sided: Sided::Double };
        let single = PinInSlot { crank_radius: r, sided: Sided::Single };
        prop_assert!(pin_in_slot_position(theta, &double).abs() <= r);
        let s = pin_in_slot_position(theta, &single);
        prop_assert!((0.0..=r).contains(&s));
    }

    #[test]
    fn locked_ratchet_never_backs_up(steps in prop::collection::vec(-0.01..0.01f64, 1..200)) {
        let r = Ratchet::new(1);
        let mut x = 0.0;
        for dx in steps {
            let next = ratchet_advance(&r, x, dx).position();
            prop_assert!(next >= x);
            x = next;
        }
    }

    #[test]
    fn motor_speed_falls_with_load(u in 0.01..1.0f64, a in 0.0..0.5f64, b in 0.0..0.5f64) {
        let spec = MotorSpec::default();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(motor_output(u, hi, &spec).omega <= motor_output(u, lo, &spec).omega);
    }
}

#[test]
fn motor_full_command_reaches_no_load_speed() {
    let spec = MotorSpec::default();
    assert_eq!(motor_output(1.0, 0.0, &spec).omega, spec.omega_noload);
    assert_eq!(motor_output(-1.0, 0.0, &spec).omega, -spec.omega_noload);
}
