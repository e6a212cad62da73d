mod common;

use common::{random_complex, random_unitary, rng};
use loqc::fock::extract_gate_map;
use loqc::gates::target;
use loqc::metrics::{fidelity, norm_bounds, success};
use loqc::{AncillaSpec, DualRailEncoding, GateMap};
use num_complex::Complex64;
use rand::Rng;

#[test]
fn fidelity_properties_on_random_maps() {
    let mut r = rng(101);
    let targets = [
        target("cz", None).unwrap(),
        target("cs", Some(std::f64::consts::FRAC_PI_2)).unwrap(),
    ];
    for i in 0..1000 {
        let a = GateMap::new(random_complex(&mut r, 4, 4)).unwrap();
        let t = &targets[i % 2];
        let f = fidelity(&a, t).unwrap();
        assert!((0.0..=1.0 + 1e-15).contains(&f), "F = {f}");
        let c = Complex64::from_polar(r.gen_range(0.01..10.0), r.gen_range(-3.0..3.0));
        let fc = fidelity(&a.scaled(c), t).unwrap();
        assert!((f - fc).abs() < 1e-12);
        let b = norm_bounds(&a);
        assert!(b.min_sq <= b.hs * (1.0 + 1e-12) && b.hs <= b.max_sq * (1.0 + 1e-12));
    }
}

#[test]
fn target_times_constant_is_perfect() {
    let t = target("cz", None).unwrap();
    let a = t.as_gate_map().scaled(Complex64::from_polar(0.3, 1.2));
    assert!((fidelity(&a, &t).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn success_is_bounded_and_scale_invariant() {
    let mut r = rng(202);
    let enc = DualRailEncoding::standard(2, 2);
    let anc = AncillaSpec::knill_cz();
    for _ in 0..1000 {
        let u = random_unitary(&mut r, 6);
        let a = extract_gate_map(&u, &enc, &anc).unwrap();
        let s = success(&a, &u, 4);
        assert!((0.0..=1.0).contains(&s));
        let c = Complex64::from_polar(r.gen_range(0.1..5.0), r.gen_range(-3.0..3.0));
        let v = u.scaled(c);
        let sc = success(&extract_gate_map(&v, &enc, &anc).unwrap(), &v, 4);
        assert!((s - sc).abs() < 1e-10);
    }
}

#[test]
fn doubling_the_device_keeps_success() {
    let mut r = rng(7);
    let enc = DualRailEncoding::standard(2, 2);
    let anc = AncillaSpec::knill_cz();
    let u = random_unitary(&mut r, 6);
    let v = u.scaled(Complex64::new(2.0, 0.0));
    let s = success(&extract_gate_map(&u, &enc, &anc).unwrap(), &u, 4);
    let s2 = success(&extract_gate_map(&v, &enc, &anc).unwrap(), &v, 4);
    assert!((s - s2).abs() < 1e-12);
}
