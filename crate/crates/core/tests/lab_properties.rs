use lagbatch_core::instance::validate_instance;
use lagbatch_core::lab::{brute_force_bounds, generate, load, Family, FamilyParams};
use lagbatch_core::CoreError;

fn params() -> Vec<FamilyParams> {
    let mut v = Vec::new();
    for seed in 0..3 {
        v.push(FamilyParams::sslp(4, 5, 4, seed));
        v.push(FamilyParams::sslpv(4, 5, 4, seed));
        v.push(FamilyParams::smcf(3, 5, 2, 4, seed));
    }
    v
}

#[test]
fn generated_instances_are_well_formed_and_bounded() {
    for p in params() {
        let inst = generate(&p).unwrap();
        assert!(validate_instance(&inst).is_ok(), "{}", inst.name);
        assert_eq!(inst.p1, inst.n1);
        assert!(inst.is_pure_binary());
        let b = brute_force_bounds(&inst).unwrap();
        assert!(b.lp_relax.is_finite());
        assert!(b.lp_relax <= b.mip_opt + 1e-6);
        let e = b.enum_opt.unwrap();
        assert!((e - b.mip_opt).abs() <= 1e-6 * (1.0 + e.abs()), "{}: {e} vs {}", inst.name, b.mip_opt);
        assert_eq!(generate(&p).unwrap(), inst);
    }
}

#[test]
fn family_shapes() {
    for p in params() {
        let inst = generate(&p).unwrap();
        let (n1, n2, m2) = p.dims();
        assert_eq!((inst.n1, inst.n2(), inst.m2()), (n1, n2, m2));
        if p.family == Family::Smcf {
            // All recourse costs are finite, nonnegative and continuous.
            assert!(inst.scenarios.iter().all(|s| s.d.iter().all(|&d| d >= 0.0)));
        }
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load(std::path::Path::new("/nonexistent/instance.json")).unwrap_err();
    assert!(matches!(err, CoreError::Io { .. }));
}
