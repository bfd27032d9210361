mod common;

use common::{golden_path, json_close, run_case, CASES};

#[test]
fn cli_reports_match_golden_files() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut failures = Vec::new();
    for case in CASES {
        let (code, text) = run_case(case);
        assert_eq!(code, case.exit, "{}: exit code", case.name);
        let path = golden_path(case);
        if update {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &text).unwrap();
            continue;
        }
        let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
        let got: serde_json::Value = serde_json::from_str(&text).unwrap();
        let want: serde_json::Value = serde_json::from_str(&want).unwrap();
        if let Err(e) = json_close(&got, &want, 1e-9, case.name) {
            failures.push(e);
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn reruns_are_byte_identical() {
    for case in CASES {
        let (_, first) = run_case(case);
        let (_, second) = run_case(case);
        assert_eq!(first, second, "{}", case.name);
    }
}

#[test]
fn reports_carry_status_and_command() {
    for case in CASES {
        let (code, text) = run_case(case);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let status = v["status"].as_str().unwrap();
        assert_eq!(status == "ok", code == 0, "{}", case.name);
        if code == 2 {
            assert_eq!(status, "infeasible");
            assert!(v["error"].is_string());
        }
        let argv: Vec<&str> = v["command"].as_array().unwrap().iter().map(|a| a.as_str().unwrap()).collect();
        assert_eq!(&argv[..case.args.len()], case.args);
    }
}
