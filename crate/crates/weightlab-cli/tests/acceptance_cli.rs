//! CLI acceptance: reproducibility of reports (criterion 10 of the
//! acceptance list) and the exit-code contract.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_weightlab"))
}

fn tmpdir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("weightlab_cli_{tag}_{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn criterion_10_verify_all_is_byte_identical() {
    let dir = tmpdir("determinism");
    let a = dir.join("run_a.json");
    let b = dir.join("run_b.json");
    for out in [&a, &b] {
        let st = bin()
            .args([
                "verify",
                "all",
                "--seed",
                "7",
                "--resolution",
                "512",
                "--depth",
                "5",
                "--random",
                "3",
                "--format",
                "both",
                "--out",
            ])
            .arg(out)
            .status()
            .expect("binary runs");
        assert!(st.success(), "verify all must pass on the default matrix");
    }
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    let json_identical = bytes_a == bytes_b;
    // CSV side tables must agree too
    let csv_a = std::fs::read(dir.join("run_a_verdicts.csv")).unwrap();
    let csv_b = std::fs::read(dir.join("run_b_verdicts.csv")).unwrap();
    let csv_identical = csv_a == csv_b;
    println!(
        "ACCEPTANCE C10 [{}] two runs of `verify all --seed 7` produce byte-identical reports — json {} bytes, csv {} bytes",
        if json_identical && csv_identical { "PASS" } else { "FAIL" },
        bytes_a.len(),
        csv_a.len(),
    );
    assert!(json_identical, "JSON reports differ between identical runs");
    assert!(csv_identical, "CSV tables differ between identical runs");
}

#[test]
fn exit_codes_follow_the_contract() {
    // 0: all verdicts pass
    let st = bin()
        .args(["verify", "monotonicity", "--resolution", "256", "--depth", "4", "--random", "1"])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    // 2: usage/config errors
    let st = bin().args(["verify", "nonsense"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
    let st = bin()
        .args(["cfi", "--signal", r#"{"type":"bump","center":0,"width":1,"height":1}"#, "--p", "3", "--q", "2"])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2), "q <= p must be a usage error");
    let st = bin()
        .args(["verify", "all", "--resolution", "1000"])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2), "non power-of-two resolution is a config error");
}

#[test]
fn constants_report_contains_closed_form_value() {
    let dir = tmpdir("constants");
    let out = dir.join("constants.json");
    let spec = dir.join("const.json");
    std::fs::write(&spec, r#"{"type":"constant"}"#).unwrap();
    let st = bin()
        .args(["constants", "--p", "2", "--resolution", "1024", "--depth", "6", "--weight"])
        .arg(&spec)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let constants = json["constants"].as_array().unwrap();
    let cp = constants
        .iter()
        .find(|c| c["op"] == "cp_constant")
        .expect("cp_constant row present");
    let v = cp["estimate"]["value"].as_f64().unwrap();
    assert!((v - 1.0 / 3.0).abs() < 0.01, "cp of the constant weight should be ~1/3, got {v}");
}

#[test]
fn divergent_power_reports_zero_constant() {
    let dir = tmpdir("divergent");
    let out = dir.join("div.json");
    let spec = dir.join("power.json");
    // a = n(p-1) at p = 2 diverges; the dichotomy reports [w]_{C_p} = 0
    std::fs::write(&spec, r#"{"type":"power","exponent":1.0}"#).unwrap();
    let st = bin()
        .args(["constants", "--p", "2", "--resolution", "512", "--depth", "4", "--weight"])
        .arg(&spec)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let cp = json["constants"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["op"] == "cp_constant")
        .unwrap();
    assert_eq!(cp["estimate"]["value"].as_f64().unwrap(), 0.0);
    // a slightly under the threshold stays finite and positive
    std::fs::write(&spec, r#"{"type":"power","exponent":0.9}"#).unwrap();
    let st = bin()
        .args(["constants", "--p", "2", "--resolution", "512", "--depth", "4", "--weight"])
        .arg(&spec)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let cp = json["constants"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["op"] == "cp_constant")
        .unwrap();
    let v = cp["estimate"]["value"].as_f64().unwrap();
    assert!(v > 0.0 && v.is_finite());
}

#[test]
fn grid_weight_spec_round_trip() {
    let dir = tmpdir("gridspec");
    let grid_file = dir.join("values.txt");
    let mut text = String::new();
    for i in 0..64 {
        text.push_str(&format!("{}\n", 1.0 + (i % 5) as f64));
    }
    std::fs::write(&grid_file, text).unwrap();
    let spec = dir.join("grid.json");
    std::fs::write(
        &spec,
        r#"{"type":"grid","file":"values.txt","box":[-1.0,1.0],"resolution":64}"#,
    )
    .unwrap();
    let out = dir.join("out.json");
    let st = bin()
        .args(["constants", "--p", "2", "--resolution", "512", "--depth", "4", "--weight"])
        .arg(&spec)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success(), "grid spec must load from a relative file path");
}
