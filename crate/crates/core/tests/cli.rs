use std::path::{Path, PathBuf};

use hopelogic::cli::run;
use hopelogic::interchange::{load_model, save_model, UpdateDoc};
use hopelogic::scenarios::{builtin_scenarios, scenario, two_agent_model};
use hopelogic::KripkeModel;
use tempfile::TempDir;

struct Output {
    code: i32,
    out: String,
    err: String,
}

fn hl(args: &[&str]) -> Output {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("hopelogic").chain(args.iter().copied()), &mut out, &mut err);
    Output { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn write_model(dir: &TempDir, name: &str, m: &KripkeModel) -> String {
    let path = dir.path().join(name);
    save_model(m, &path).unwrap();
    path.to_str().unwrap().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn every_scenario_assertion_holds_through_the_cli() {
    let dir = TempDir::new().unwrap();
    for sc in builtin_scenarios() {
        let model = write_model(&dir, &format!("{}.json", sc.name), &sc.model);
        let sig = sc.model.signature();
        let mut args = Vec::new();
        for u in sc.updates.models() {
            let path = dir.path().join(format!("{}-{}.json", sc.name, u.name()));
            std::fs::write(&path, serde_json::to_string(&UpdateDoc::from_model(u, sig)).unwrap()).unwrap();
            args.push("--update-model".to_string());
            args.push(path.to_str().unwrap().to_string());
        }
        for a in &sc.assertions {
            let mut call = vec!["eval", model.as_str(), a.world.as_str(), a.formula.as_str()];
            call.extend(args.iter().map(String::as_str));
            let o = hl(&call);
            assert_eq!(o.code, if a.expected { 0 } else { 1 }, "{}: {} at {}: {}", sc.name, a.formula, a.world, o.err);
            assert_eq!(o.out.trim(), a.expected.to_string());
        }
    }
}

#[test]
fn diagnosis_eval_prints_true() {
    let dir = TempDir::new().unwrap();
    let m = write_model(&dir, "m.json", &two_agent_model());
    let o = hl(&["eval", &m, "00", "[~H{a} false | K{b} H{a} false, ~H{b} false] K{a} ~H{a} false"]);
    assert_eq!((o.code, o.out.trim()), (0, "true"));
    let o = hl(&["--format", "structured", "eval", &m, "10", "~H{a} false"]);
    let v: serde_json::Value = serde_json::from_str(&o.out).unwrap();
    assert_eq!((o.code, &v["value"]), (1, &serde_json::Value::Bool(false)));
}

#[test]
fn broken_model_is_rejected_with_the_condition() {
    let dir = TempDir::new().unwrap();
    // both worlds are correct for a and a cannot tell them apart, but hope omits the link
    let path = write(
        dir.path(),
        "bad.json",
        r#"{
            "agents": ["a"],
            "props": ["p"],
            "worlds": ["u", "v"],
            "valuation": {"u": ["p"]},
            "K": {"a": [["u", "v"]]},
            "H": {"a": [["u", "u"], ["v", "v"]]}
        }"#,
    );
    let p = path.to_str().unwrap();
    let o = hl(&["validate", p]);
    assert_eq!(o.code, 3);
    assert!(o.out.contains("oneH"), "{}", o.out);
    let o = hl(&["eval", p, "u", "p"]);
    assert_eq!(o.code, 3);
    assert!(o.err.contains("oneH"));
}

#[test]
fn valid_model_validates() {
    let dir = TempDir::new().unwrap();
    let m = write_model(&dir, "m.json", &two_agent_model());
    let o = hl(&["--format", "structured", "validate", &m]);
    assert_eq!(o.code, 0);
    assert!(o.out.contains("\"valid\":true"));
}

#[test]
fn update_output_reloads_to_the_same_model() {
    let dir = TempDir::new().unwrap();
    let m = two_agent_model();
    let input = write_model(&dir, "m.json", &m);
    let target = dir.path().join("out.json");
    let o = hl(&["update", &input, "--public", "~H{a} false", "~H{b} false", "-o", target.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", o.err);
    let v = hopelogic::parse("~H{a} false", m.signature(), &Default::default()).unwrap();
    let w = hopelogic::parse("~H{b} false", m.signature(), &Default::default()).unwrap();
    let expected = hopelogic::apply_public(&m, &[v, w]).unwrap();
    assert_eq!(load_model(&target).unwrap().to_raw(), expected.to_raw());
}

#[test]
fn product_update_from_files() {
    let sc = scenario("private-correction").unwrap();
    let dir = TempDir::new().unwrap();
    let model = write_model(&dir, "m.json", &sc.model);
    let u = sc.updates.models().next().unwrap();
    let upath = write(dir.path(), "u.json", &serde_json::to_string(&UpdateDoc::from_model(u, sc.model.signature())).unwrap());
    let o = hl(&["--format", "structured", "update", &model, "--update-model", upath.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", o.err);
    let doc: hopelogic::interchange::ModelDoc = serde_json::from_str(&o.out).unwrap();
    assert_eq!(doc.worlds.len(), sc.model.world_count() * u.action_count());
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let m = write_model(&dir, "m.json", &two_agent_model());
    assert_eq!(hl(&["eval", "/nonexistent/model.json", "00", "p_a"]).code, 2);
    assert_eq!(hl(&["eval", &m, "00", "K{a} (p_a &"]).code, 2);
    assert_eq!(hl(&["eval", &m, "zz", "p_a"]).code, 2);
    assert_eq!(hl(&["eval", &m, "00", "K{c} p_a"]).code, 2);
    let junk = write(dir.path(), "junk.json", "{\"agents\": 3}");
    assert_eq!(hl(&["validate", junk.to_str().unwrap()]).code, 2);
    assert_eq!(hl(&["no-such-command"]).code, 2);
    assert_eq!(hl(&["scenario", "run", "no-such-scenario"]).code, 2);
}

#[test]
fn countermodel_exit_codes() {
    let o = hl(&["countermodel", "--agents", "a", "H{a} false -> K{a} H{a} false"]);
    assert_eq!(o.code, 1, "{}", o.out);
    let o = hl(&["countermodel", "--agents", "a,b", "K{a} p -> H{a} p"]);
    assert_eq!(o.code, 0, "{}", o.out);
}

#[test]
fn translate_removes_dynamic_operators() {
    let o = hl(&["--trace", "translate", "--agents", "a,b", "[~H{a} false, T] K{a} p"]);
    assert_eq!(o.code, 0, "{}", o.err);
    let first = o.out.lines().next().unwrap();
    assert!(!first.contains('['), "{}", o.out);
}

#[test]
fn scenarios_run_and_list() {
    let o = hl(&["--cross-check", "scenario", "run", "--all"]);
    assert_eq!(o.code, 0, "{}{}", o.out, o.err);
    let listed = hl(&["scenario", "list"]).out;
    for sc in builtin_scenarios() {
        assert!(listed.contains(&sc.name));
    }
    let dump = hl(&["scenario", "dump", "abp-recovery"]);
    let doc: hopelogic::interchange::ScenarioDoc = serde_json::from_str(&dump.out).unwrap();
    assert_eq!(doc.updates.len(), 1);
}

#[test]
fn dot_export_has_one_edge_per_linked_pair() {
    let dir = TempDir::new().unwrap();
    let m = write_model(&dir, "m.json", &two_agent_model());
    let o = hl(&["export-dot", &m]);
    assert_eq!(o.code, 0);
    assert!(o.out.starts_with("graph"));
    // a links 00-01 and 10-11, b links 00-10 and 01-11
    assert_eq!(o.out.matches(" -- ").count(), 4, "{}", o.out);
}
