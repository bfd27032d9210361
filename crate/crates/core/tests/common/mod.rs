#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;

pub struct Case {
    pub name: &'static str,
    pub args: &'static [&'static str],
    pub exit: i32,
}

pub const CASES: &[Case] = &[
    Case { name: "analyze_depolarizing", args: &["analyze", "--channel", "depolarizing.json"], exit: 0 },
    Case { name: "analyze_amp_damp", args: &["analyze", "--channel", "amp_damp.json"], exit: 0 },
    Case {
        name: "dilate_stinespring",
        args: &["dilate", "--channel", "amp_damp.json", "--env", "env_pure2.json", "--mode", "stinespring"],
        exit: 0,
    },
    Case {
        name: "dilate_subsystem",
        args: &["dilate", "--channel", "amp_damp.json", "--env", "env_mixed4.json", "--m", "2", "--seed", "3"],
        exit: 0,
    },
    Case {
        name: "dilate_rank_infeasible",
        args: &["dilate", "--channel", "depolarizing.json", "--env", "env_pure2.json", "--mode", "stinespring"],
        exit: 2,
    },
    Case {
        name: "design_stochastic",
        args: &["design", "stochastic", "--spec", "dephasing_spec.json", "--env", "env_biased2.json"],
        exit: 0,
    },
    Case {
        name: "design_convex",
        args: &["design", "convex", "--spec", "convex_spec.json", "--env", "env_block8.json"],
        exit: 0,
    },
    Case {
        name: "design_convex_flat",
        args: &["design", "convex", "--spec", "convex_spec.json", "--env", "env_flat8.json"],
        exit: 2,
    },
    Case { name: "decompose_depolarizing", args: &["decompose", "extreme", "--channel", "depolarizing.json"], exit: 0 },
    Case {
        name: "realize_depolarizing",
        args: &["realize", "average", "--channel", "depolarizing.json", "--env", "env_pure2.json", "--seed", "11"],
        exit: 0,
    },
    Case { name: "protocol_lv2", args: &["protocol", "lv2", "--config", "amp_damp.json", "--cycles", "16"], exit: 0 },
    Case { name: "protocol_lv3", args: &["protocol", "lv3", "--config", "pauli_mixture.json", "--cycles", "16"], exit: 0 },
    Case { name: "protocol_fbdd", args: &["protocol", "fbdd", "--config", "fbdd.json"], exit: 0 },
    Case { name: "protocol_fbdd_unmixed", args: &["protocol", "fbdd", "--config", "fbdd_unmixed.json"], exit: 2 },
    Case { name: "protocol_split", args: &["protocol", "split", "--config", "split.json", "--seed", "5"], exit: 0 },
    Case {
        name: "optimize_amp_damp",
        args: &[
            "optimize", "--problem", "problem.json", "--target", "amp_damp.json", "--iters", "60", "--restarts", "2",
            "--seed", "9",
        ],
        exit: 0,
    },
];

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn golden_path(case: &Case) -> PathBuf {
    fixtures_dir().join("golden").join(format!("{}.json", case.name))
}

/// Runs the binary from the fixture directory; returns the exit code and
/// the JSON report printed on stdout.
pub fn run_case(case: &Case) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qdf"))
        .args(case.args)
        .arg("--json")
        .current_dir(fixtures_dir())
        .env("QDF_THREADS", "1")
        .output()
        .expect("spawn qdf");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).expect("utf-8 report"))
}

/// Structural equality with floats compared to an absolute tolerance.
pub fn json_close(a: &serde_json::Value, b: &serde_json::Value, tol: f64, path: &str) -> Result<(), String> {
    use serde_json::Value::*;
    match (a, b) {
        (Number(x), Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            if (x - y).abs() <= tol {
                Ok(())
            } else {
                Err(format!("{path}: {x} vs {y}"))
            }
        }
        (Array(x), Array(y)) => {
            if x.len() != y.len() {
                return Err(format!("{path}: length {} vs {}", x.len(), y.len()));
            }
            for (i, (u, v)) in x.iter().zip(y).enumerate() {
                json_close(u, v, tol, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        (Object(x), Object(y)) => {
            if x.len() != y.len() || x.keys().any(|k| !y.contains_key(k)) {
                return Err(format!("{path}: keys differ"));
            }
            for (k, u) in x {
                json_close(u, &y[k], tol, &format!("{path}.{k}"))?;
            }
            Ok(())
        }
        _ if a == b => Ok(()),
        _ => Err(format!("{path}: {a} vs {b}")),
    }
}
