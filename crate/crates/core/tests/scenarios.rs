use hopelogic::interchange::{ModelDoc, ScenarioDoc, UpdateDoc};
use hopelogic::scenarios::{abp_run, abp_step, builtin_scenarios, AbpState, Mode};
use hopelogic::validate;

#[test]
fn assertions_name_existing_worlds() {
    for sc in builtin_scenarios() {
        assert!(validate(&sc.model.to_raw()).is_empty(), "{}", sc.name);
        for a in &sc.assertions {
            assert!(sc.model.world(&a.world).is_ok(), "{}: {}", sc.name, a.world);
        }
        assert!(!sc.assertions.is_empty());
    }
}

#[test]
fn figures_match_updated_models() {
    for sc in builtin_scenarios() {
        let report = sc.run(Mode::Direct).unwrap();
        if let Some(fig) = &sc.figure {
            let updated = sc.updated_model().unwrap().expect("figure implies an update");
            assert!(validate(&updated.to_raw()).is_empty(), "{}", sc.name);
            assert_eq!(report.figure.len(), fig.correct.len(), "{}", sc.name);
        }
        assert!(report.passed(), "{}", sc.name);
    }
}

#[test]
fn documents_round_trip() {
    for sc in builtin_scenarios() {
        let doc = ScenarioDoc::from_scenario(&sc);
        let text = serde_json::to_string(&doc).unwrap();
        let back: ScenarioDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        let model = ModelDoc::to_model(&back.model).unwrap();
        assert_eq!(model.to_raw(), sc.model.to_raw(), "{}", sc.name);
        let sig = model.signature();
        for (u, d) in sc.updates.models().zip(&back.updates) {
            assert_eq!(UpdateDoc::to_model(d, sig, &sc.updates).unwrap(), **u, "{}", sc.name);
        }
    }
}

#[test]
fn abp_trace_is_periodic() {
    let t = abp_run(8).unwrap();
    assert_eq!(t.len(), 25);
    for (k, s) in t.iter().enumerate() {
        assert!(s.receiver_consistent());
        assert!(s.same_variables(&t[k % 6]));
        assert_eq!(s.phase as usize, k % 6 + 1);
    }
    assert_eq!(t.last().unwrap().packet, 8);
}

#[test]
fn single_receiver_fault_is_recoverable_at_every_step() {
    for s in abp_run(2).unwrap() {
        let mut bad = s;
        bad.q_r = !bad.q_r;
        let fixed: AbpState = bad.recover_receiver();
        assert_eq!(fixed, s);
        assert!(abp_step(fixed).is_ok());
    }
}
