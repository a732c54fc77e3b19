use finobs::evolution::{EllipticSymbol, EvolutionFamily, GridSpace, ProjectorKind};
use finobs::observation::SensorSpec;
use finobs::pipeline::{
    certify_instance, compute_traces, derive_chain, epsilon_balance_check, run_telescope, verify_obs, AuditMode,
    CertifiedBundle, CertifyOptions, Instance,
};
use finobs::time_sets::TimeSet;
use finobs::{Error, NormExponent, SetMode};

fn heat_identity(n: usize) -> Instance {
    let grid = GridSpace::new(1, n, NormExponent::TWO).unwrap();
    let family = EvolutionFamily::new(EllipticSymbol::heat(1, 1.0).unwrap(), grid.clone()).unwrap();
    let sensors = SensorSpec::full(1, 1.0).realize(&grid).unwrap();
    Instance::new(family, sensors, TimeSet::full(1.0).unwrap(), ProjectorKind::Sharp).unwrap()
}

#[test]
fn traces_of_heat_with_identity_sensors() {
    let inst = heat_identity(64);
    let x0 = inst.grid().plane_wave([1, 0]);
    let rec = compute_traces(&inst, &x0, &[0.0, 0.25, 0.5, 1.0], 0).unwrap();
    for (i, &t) in rec.times.iter().enumerate() {
        assert!((rec.f[i] - (-t).exp() * rec.f[0]).abs() < 1e-12 * rec.f[0]);
        assert_eq!(rec.f[i], rec.g[i]);
    }
    let zero = compute_traces(&inst, &inst.grid().zeros(), &[0.0, 1.0], 1).unwrap();
    assert!(zero.f.iter().chain(&zero.g).all(|&v| v == 0.0));
}

#[test]
fn heat_full_interval_chain_passes() {
    let inst = heat_identity(64);
    let certs = certify_instance(&inst, &CertifyOptions::default()).unwrap();
    let b = &certs.bundle.constants;
    assert_eq!((b.d2, b.d3, b.gamma2), (1.0, 1.0, 2.0));
    assert_eq!((b.growth_bound, b.growth_rate), (1.0, 0.0));
    let der = derive_chain(&inst.set, b, SetMode::FullInterval, 8, None).unwrap();
    for (id, x0) in inst.random_batch(4, 7).iter().enumerate() {
        let audit = run_telescope(&inst, b, &der, x0, id).unwrap();
        assert!(audit.pass, "{:?}", audit.failures());
        assert!(audit.max_identity_error <= 1e-10);
        assert!(audit.remainder >= 0.0);
    }
    let zero = run_telescope(&inst, b, &der, &inst.grid().zeros(), 9).unwrap();
    assert!(zero.pass);

    let rs = [NormExponent::ONE, NormExponent::TWO, NormExponent::Infinity];
    let batch = inst.random_batch(5, 3);
    let report = verify_obs(&inst, &certs.bundle, &der, &rs, &batch, AuditMode::Certify).unwrap();
    assert_eq!(report.tables.len(), 3);
    assert_eq!(report.pass, Some(true));
    assert!(report.tables.iter().all(|t| t.min_margin >= 0.0));
}

#[test]
fn obs_refuses_uncertified_bundle_unless_diagnostic() {
    let inst = heat_identity(32);
    let certs = certify_instance(&inst, &CertifyOptions::default()).unwrap();
    let der = derive_chain(&inst.set, &certs.bundle.constants, SetMode::FullInterval, 4, None).unwrap();
    let hand = CertifiedBundle::uncertified(certs.bundle.constants, inst.grid().spec());
    let batch = inst.random_batch(2, 0);
    let err = verify_obs(&inst, &hand, &der, &[NormExponent::ONE], &batch, AuditMode::Certify).unwrap_err();
    assert!(matches!(err, Error::Certification(_)));
    let diag = verify_obs(&inst, &hand, &der, &[NormExponent::ONE], &batch, AuditMode::Diagnostic).unwrap();
    assert_eq!(diag.pass, None);
    assert!(diag.tables[0].pass.is_none());

    let zero = verify_obs(
        &inst,
        &certs.bundle,
        &der,
        &[NormExponent::ONE],
        &[inst.grid().zeros()],
        AuditMode::Certify,
    )
    .unwrap();
    let row = &zero.tables[0].rows[0];
    assert_eq!((row.lhs, row.rhs, row.margin), (0.0, 0.0, 0.0));
}

#[test]
fn balance_holds_and_fault_injection_is_caught() {
    let inst = heat_identity(64);
    let certs = certify_instance(&inst, &CertifyOptions::default()).unwrap();
    let b = certs.bundle.constants;
    let x0 = &inst.random_batch(1, 11)[0];
    for (s, t, eps) in [
        (0.0, 0.5, 0.3),
        (0.2, 0.3, 0.01),
        (0.5, 1.0, 0.999),
        (0.0, 0.01, 1e-300),
    ] {
        let audit = epsilon_balance_check(&inst, &b, s, t, eps, x0).unwrap();
        assert!(audit.pass, "{:?}", audit.failed_steps());
    }
    let mut bad = b;
    bad.d3 *= 10.0;
    let wave = inst.grid().plane_wave([1, 0]);
    let audit = epsilon_balance_check(&inst, &bad, 0.0, 0.5, 0.3, &wave).unwrap();
    assert!(audit.min_step_slack() < 0.0);
    assert!(audit.failed_steps().contains(&"dissipation"));
    assert!(matches!(audit.into_result(), Err(Error::Audit(_))));

    let zero = epsilon_balance_check(&inst, &b, 0.0, 0.5, 0.5, &inst.grid().zeros()).unwrap();
    assert!(zero.pass && zero.lhs == 0.0 && zero.rhs == 0.0);
    assert!(epsilon_balance_check(&inst, &b, 0.5, 0.5, 0.5, x0).is_err());
    assert!(epsilon_balance_check(&inst, &b, 0.0, 0.5, 1.0, x0).is_err());
}
