use std::path::Path;
use std::process::{Command, Output};

fn hmtk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmtk")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).unwrap()
}

#[test]
fn pipeline_through_files() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    let o = hmtk(p, &["generate", "--kind", "grid1d", "--n", "64", "--out", "s.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(p.join("s.json").exists());

    let o = hmtk(p, &["cubes", "--space", "s.json", "--out", "t.json", "--verify"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o.stdout)["violations"], 0);

    let o = hmtk(p, &["wavelets", "--tree", "t.json", "--out", "b.json", "--plain"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o.stdout)["basis_checks"]["n_mothers"], 60);

    let values: String = (0..64).map(|i| format!("{}\n", (i as f64 / 7.0).cos())).collect();
    std::fs::write(p.join("f.csv"), values).unwrap();
    let o = hmtk(p, &["norm", "--basis", "b.json", "--theta", "0.3", "--fn-file", "f.csv", "--report", "n.json"]);
    assert_eq!(code(&o), 0);
    let n = json(&std::fs::read(p.join("n.json")).unwrap());
    assert!(n["lip"]["value"].as_f64().unwrap() > 0.0);
    assert!(n["ratio"].as_f64().is_some());

    let o = hmtk(p, &["norm", "--space", "s.json", "--theta", "0.3", "--fn", "one"]);
    assert_eq!(code(&o), 0);

    let o = hmtk(p, &["equiv", "--space", "s.json", "--theta", "0.3", "--report", "e.json"]);
    assert_eq!(code(&o), 0);
    let e = json(&std::fs::read(p.join("e.json")).unwrap());
    assert!(e["envelope_C"].as_f64().unwrap().is_finite());
    for key in ["space", "params", "axioms", "basis_checks", "probes", "geometry", "verdicts"] {
        assert!(e.get(key).is_some(), "{key}");
    }
    assert_eq!(e["probes"].as_array().unwrap().len(), 20);

    let o = hmtk(p, &["geometry", "--space", "s.json", "--report", "g.json"]);
    assert_eq!(code(&o), 0);
    let o = hmtk(p, &["report", "e.json", "g.json", "--out", "r.json"]);
    assert_eq!(code(&o), 0);
    let r = json(&std::fs::read(p.join("r.json")).unwrap());
    assert_eq!(r["summary"]["pass"], true);
    assert!(r["sections"].get("e").is_some() && r["sections"].get("g").is_some());
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    let bad = r#"{"name":"bad","points":[{"id":0,"weight":1},{"id":1,"weight":1}],"metric":{"kind":"matrix","matrix":[0,1,2,0]}}"#;
    std::fs::write(p.join("bad.json"), bad).unwrap();
    let o = hmtk(p, &["cubes", "--space", "bad.json"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("asymmetric"));

    let o = hmtk(p, &["cubes", "--space", "missing.json"]);
    assert_eq!(code(&o), 2);

    std::fs::write(p.join("garbage.json"), "{\"name\": 3").unwrap();
    let o = hmtk(p, &["validate", "--space", "garbage.json"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    let o = hmtk(p, &["generate", "--kind", "grid1d", "--n", "64", "--out", "s.json", "--frobnicate"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let o = hmtk(p, &["generate", "--kind", "grid1d", "--n", "4", "--out", "s.json"]);
    assert_eq!(code(&o), 2);

    let o = hmtk(p, &["generate", "--kind", "grid1d", "--n", "64", "--out", "s.json"]);
    assert_eq!(code(&o), 0);
    let o = hmtk(p, &["equiv", "--space", "s.json", "--theta", "1.5"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn csv_input() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    let rows: String = std::iter::once("id,weight,x\n".to_string()).chain((0..64).map(|i| format!("{i},0.0625,{}\n", i as f64 / 16.0))).collect();
    std::fs::write(p.join("pts.csv"), rows).unwrap();
    let o = hmtk(p, &["validate", "--csv", "pts.csv", "--metric", "snowflake", "--metric-param", "0.5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o.stdout)["a0"], 1.0);
    let o = hmtk(p, &["validate", "--csv", "pts.csv", "--metric", "snowflake"]);
    assert_eq!(code(&o), 2);
}
