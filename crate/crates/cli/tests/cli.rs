use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use crackfield::report::results_csv;
use crackfield::Series;
use crackfield_service::{app, AppState, ServiceConfig};

const STEEL: &str =
    r#"{"model": "isotropic", "E": 210e9, "nu": 0.3, "plane_state": "plane_strain"}"#;

fn crackfield(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crackfield"))
        .current_dir(dir)
        .args(args)
        .env("CRACKFIELD_LOG", "error")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = crackfield(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_json(p: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

fn validator(name: &str) -> jsonschema::Validator {
    let mut opts = jsonschema::options();
    let mut target = None;
    for entry in std::fs::read_dir(schema_dir()).unwrap() {
        let doc = read_json(entry.unwrap().path());
        let id = doc["$id"].as_str().unwrap().to_string();
        if id == format!("urn:crackfield:{name}") {
            target = Some(doc.clone());
        }
        opts = opts.with_resource(id, jsonschema::Resource::from_contents(doc).unwrap());
    }
    let schema = target.unwrap_or_else(|| panic!("no schema {name}"));
    opts.build(&schema).unwrap()
}

/// Validates `value` against the shipped schema `name`.
fn assert_schema(name: &str, value: &Value) {
    let validator = validator(name);
    let errors: Vec<String> = validator
        .iter_errors(value)
        .map(|e| format!("{e} at {}", e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}");
}

/// Reference field in micrometers plus a material file.
fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("steel.json"), STEEL).unwrap();
    ok(dir.path(), &["synth", "--out", "field.csv"]);
    dir
}

const CRACK_UM: [&str; 8] = [
    "--units",
    "um",
    "--mouth=-1,0",
    "--tip",
    "0,0",
    "--mask-rect=-0.08,-0.08,0.08,0.08",
    "--material",
    "steel.json",
];

fn analyze(dir: &Path, out: &str, extra: &[&str]) -> Output {
    let mut args = vec!["analyze", "--input", "field.csv", "--out", out];
    args.extend(CRACK_UM);
    args.extend(extra);
    crackfield(dir, &args)
}

fn assert_reference_k(summary: &Value, tol: f64) {
    let p = &summary["plateau"];
    for (key, truth) in [("k_i", 3e6), ("k_ii", 1e6), ("k_iii", 5e6)] {
        let k = p[key]["mean"].as_f64().unwrap();
        assert!((k - truth).abs() <= tol * truth, "{key} = {k}");
    }
}

#[test]
fn reference_field_recovers_the_stress_intensity_factors() {
    let dir = workspace();
    let out = analyze(dir.path(), "run", &["--no-timestamp"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = read_json(dir.path().join("run/summary.json"));
    assert_reference_k(&summary, 0.05);
    assert_eq!(summary["grid"]["nx"], 51);
    assert_eq!(summary["no_plateau"], false);
    assert_schema("summary", &summary);
    assert_schema("synthetic", &read_json(dir.path().join("field.json")));
    let csv = std::fs::read_to_string(dir.path().join("run/results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 26);
    assert!(std::fs::read_to_string(dir.path().join("run/contours.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn single_precision_run() {
    let dir = workspace();
    let out = analyze(dir.path(), "f32", &["--precision", "f32"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = read_json(dir.path().join("f32/summary.json"));
    assert_eq!(summary["precision"], "f32");
    assert_reference_k(&summary, 0.05);
    assert_schema("summary", &summary);
}

#[test]
fn outputs_are_byte_identical() {
    let dir = workspace();
    for d in ["a", "b", "c"] {
        let extra: &[&str] = if d == "c" { &[] } else { &["--no-timestamp"] };
        assert!(analyze(dir.path(), d, extra).status.success());
    }
    let read = |d: &str, f: &str| std::fs::read(dir.path().join(d).join(f)).unwrap();
    for f in ["results.csv", "summary.json", "contours.svg"] {
        assert_eq!(read("a", f), read("b", f), "{f}");
    }
    assert_eq!(read("a", "summary.json"), read("c", "summary.json"));
    assert_eq!(read("a", "results.csv"), read("c", "results.csv"));
    // the timestamp comment is the only difference in the chart
    let plain = String::from_utf8(read("a", "contours.svg")).unwrap();
    let stamped = String::from_utf8(read("c", "contours.svg")).unwrap();
    let diff: Vec<&str> = stamped
        .lines()
        .filter(|l| !plain.lines().any(|p| p == *l))
        .collect();
    assert_eq!(diff.len(), 1, "{diff:?}");
    assert!(diff[0].contains("generated"));
}

fn error_of(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    let v: Value =
        serde_json::from_str(line).unwrap_or_else(|_| panic!("stderr is not JSON: {text}"));
    assert_schema("error", &v);
    v
}

#[test]
fn exit_codes() {
    let dir = workspace();
    let p = dir.path();

    let out = crackfield(
        p,
        &[
            "analyze",
            "-i",
            "field.csv",
            "-o",
            "x",
            "--mouth=-1,0",
            "--tip",
            "0,0",
            "--material",
            "missing.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["kind"], "ConfigError");

    let out = crackfield(
        p,
        &[
            "analyze",
            "-i",
            "absent.csv",
            "-o",
            "x",
            "--mouth=-1,0",
            "--tip",
            "0,0",
            "--material",
            "steel.json",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_of(&out)["kind"], "IoError");

    let out = crackfield(
        p,
        &[
            "analyze",
            "-i",
            "field.csv",
            "--units",
            "um",
            "-o",
            "x",
            "--mouth=-1,0",
            "--tip",
            "5,0",
            "-m",
            "steel.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let e = error_of(&out);
    assert_eq!(e["kind"], "TipOutsideGrid");
    assert_eq!(e["module"], "mesh");

    std::fs::write(p.join("bad.csv"), "x,y,ux,uy\n0,0,1,0\n1,0,nope,0\n").unwrap();
    let out = crackfield(
        p,
        &[
            "analyze",
            "-i",
            "bad.csv",
            "-o",
            "x",
            "--mouth=-1,0",
            "--tip",
            "0,0",
            "-m",
            "steel.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let e = error_of(&out);
    assert_eq!(
        (e["kind"].as_str(), e["line"].as_u64()),
        (Some("MalformedRow"), Some(3))
    );

    let out = crackfield(p, &["analyze", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));

    let out = crackfield(p, &["serve", "--bind", "0.0.0.0:0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["kind"], "ConfigError");

    let out = crackfield(
        p,
        &["analyze", "-i", "field.csv", "-o", "x", "-m", "steel.json"],
    );
    assert_eq!(out.status.code(), Some(2));

    // hardening model without hardening parameters
    let out = analyze(p, "x", &["--model", "ramberg-osgood"]);
    assert_eq!(out.status.code(), Some(2));

    // an output path that is a file
    std::fs::write(p.join("taken"), "").unwrap();
    let out = analyze(p, "taken/sub", &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!p.join("x").exists());
}

#[test]
fn config_file_and_flag_override() {
    let dir = workspace();
    let p = dir.path();
    std::fs::create_dir(p.join("cfg")).unwrap();
    let config = json!({
        "input": "../field.csv",
        "units": "um",
        "mouth": [-1.0, 0.0],
        "tip": [0.0, 0.0],
        "mask_rect": [-0.08, -0.08, 0.08, 0.08],
        "material": "../steel.json",
        "contours": 10,
        "plateau_window": [3, 8],
        "out": "../from-config"
    });
    assert_schema("config", &config);
    std::fs::write(p.join("cfg/run.json"), config.to_string()).unwrap();
    ok(
        p,
        &["analyze", "--config", "cfg/run.json", "--no-timestamp"],
    );
    let s = read_json(p.join("from-config/summary.json"));
    assert_eq!(s["contours"], 10);
    assert_eq!(s["plateau"]["explicit"], true);
    assert_eq!(s["plateau"]["start_contour"], 3);

    ok(
        p,
        &[
            "analyze",
            "--config",
            "cfg/run.json",
            "--contours",
            "12",
            "--out",
            "flagged",
        ],
    );
    let s = read_json(p.join("flagged/summary.json"));
    assert_eq!(s["contours"], 12);

    std::fs::write(p.join("cfg/typo.json"), r#"{"contuors": 3}"#).unwrap();
    let out = crackfield(p, &["analyze", "--config", "cfg/typo.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn in_plane_input_omits_mode_iii() {
    let dir = workspace();
    let p = dir.path();
    ok(p, &["synth", "--in-plane-only", "--out", "planar.csv"]);
    assert_eq!(read_json(p.join("planar.json"))["columns"], 4);
    let mut args = vec![
        "analyze",
        "-i",
        "planar.csv",
        "-o",
        "planar",
        "--anti-plane",
        "on",
    ];
    args.extend(CRACK_UM);
    ok(p, &args);
    let s = read_json(p.join("planar/summary.json"));
    assert!(s["plateau"]["k_iii"].is_null());
    assert!(s["plateau"]["j_total"].is_null());
    let warnings = s["warnings"].as_array().unwrap();
    assert!(
        warnings
            .iter()
            .any(|w| w.as_str().unwrap().contains("K_III")),
        "{warnings:?}"
    );
    let k = s["plateau"]["k_i"]["mean"].as_f64().unwrap();
    assert!((k - 3e6).abs() < 0.05 * 3e6);
}

#[test]
fn synthetic_noise_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let args = |out: &'static str, seed: &'static str| {
        [
            "synth", "--nx", "11", "--ny", "11", "--noise", "1e-3", "--seed", seed, "--out", out,
        ]
    };
    ok(p, &args("a.csv", "4"));
    ok(p, &args("b.csv", "4"));
    ok(p, &args("c.csv", "5"));
    let read = |f: &str| std::fs::read(p.join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
    let side = read_json(p.join("a.json"));
    assert_eq!(side["noise"]["seed"], 4);
    assert_schema("synthetic", &side);
}

#[test]
fn studies_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("steel.json"), STEEL).unwrap();
    ok(
        p,
        &[
            "synth",
            "--nx",
            "25",
            "--ny",
            "25",
            "--k-ii",
            "0",
            "--k-iii",
            "0",
            "--out",
            "small.csv",
        ],
    );

    let mut args = vec![
        "qsweep",
        "-i",
        "small.csv",
        "-o",
        "sweep",
        "--from-deg=-20",
        "--to-deg",
        "20",
        "--step-deg",
        "10",
    ];
    args.extend([
        "--units",
        "um",
        "--mouth=-0.48,0",
        "--tip",
        "0,0",
        "--mask-rect=-0.08,-0.08,0.08,0.08",
        "-m",
        "steel.json",
    ]);
    ok(p, &args);
    let sweep = read_json(p.join("sweep/study.json"));
    assert_schema("study", &sweep);
    assert_eq!(sweep["points"].as_array().unwrap().len(), 5);
    assert!(sweep["suggestion"]["angle"].as_f64().unwrap().abs() < 0.02);
    assert!(p.join("sweep/q_sweep.svg").exists());
    assert!(std::fs::read_to_string(p.join("sweep/study.csv"))
        .unwrap()
        .starts_with("study,"));

    let small = ["--nx", "25", "--ny", "25"];
    let mut args = vec![
        "noise-study",
        "-o",
        "noise",
        "--fractions",
        "1e-4,1e-3",
        "--trials",
        "2",
        "--seed",
        "3",
    ];
    args.extend(small);
    ok(p, &args);
    let noise = read_json(p.join("noise/study.json"));
    assert_schema("study", &noise);
    assert_eq!(noise["points"][0]["trials"], 2);
    assert!(p.join("noise/noise.svg").exists());

    let mut args = vec!["tip-study", "-o", "tip", "--dx=-1,0,1", "--dy", "0,1"];
    args.extend(small);
    ok(p, &args);
    let tip = read_json(p.join("tip/study.json"));
    assert_schema("study", &tip);
    assert_eq!(tip["points"].as_array().unwrap().len(), 6);
    assert!(p.join("tip/tip_offset_diagonal.svg").exists());

    // descending fractions are rejected as configuration
    let mut args = vec!["noise-study", "-o", "bad", "--fractions", "1e-3,1e-4"];
    args.extend(small);
    assert_eq!(crackfield(p, &args).status.code(), Some(2));
}

#[test]
fn report_redraws_the_chart() {
    let dir = workspace();
    let p = dir.path();
    assert!(analyze(p, "run", &["--no-timestamp"]).status.success());
    let original = std::fs::read(p.join("run/contours.svg")).unwrap();
    ok(p, &["report", "run", "--out", "again", "--no-timestamp"]);
    for f in ["results.csv", "summary.json", "contours.svg"] {
        assert_eq!(
            std::fs::read(p.join("run").join(f)).unwrap(),
            std::fs::read(p.join("again").join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(
        std::fs::read(p.join("again/contours.svg")).unwrap(),
        original
    );
    let out = crackfield(p, &["report", "nowhere"]);
    assert_eq!(out.status.code(), Some(3));
}

async fn call(
    router: &axum::Router,
    method: Method,
    uri: &str,
    body: Vec<u8>,
    ctype: &str,
) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", ctype)
        .body(Body::from(body))
        .unwrap();
    let res = router.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn command_line_and_service_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("steel.json"), STEEL).unwrap();
    ok(p, &["synth", "--units", "m", "--out", "field.csv"]);
    ok(
        p,
        &[
            "analyze",
            "-i",
            "field.csv",
            "--units",
            "m",
            "--mouth=-1e-6,0",
            "--tip",
            "0,0",
            "--mask-rect=-8e-8,-8e-8,8e-8,8e-8",
            "-m",
            "steel.json",
            "-o",
            "cli",
        ],
    );
    let cli_summary = read_json(p.join("cli/summary.json"));
    let cli_csv = std::fs::read_to_string(p.join("cli/results.csv")).unwrap();

    let router = app(AppState::new(ServiceConfig::default()));
    let csv = std::fs::read(p.join("field.csv")).unwrap();
    let (status, field) = call(
        &router,
        Method::POST,
        "/api/fields?units=m",
        csv,
        "text/csv",
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    assert_schema("service-field", &field);
    let id = field["id"].as_str().unwrap();
    let crack = json!({
        "mouth": [-1e-6, 0.0],
        "tip": [0.0, 0.0],
        "mask": {"kind": "rectangle", "vertices": [[-8e-8, -8e-8], [8e-8, 8e-8]]}
    });
    assert_schema("service-crack-request", &crack);
    let (status, echo) = call(
        &router,
        Method::PUT,
        &format!("/api/fields/{id}/crack"),
        crack.to_string().into(),
        "application/json",
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_schema("service-crack", &echo);
    assert_eq!(echo["snapped_chain_m"], cli_summary["snapped_chain_m"]);

    let (status, magnitude) = call(
        &router,
        Method::GET,
        &format!("/api/fields/{id}/magnitude"),
        vec![],
        "",
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_schema("service-magnitude", &magnitude);

    let request =
        json!({"kind": "analysis", "material": serde_json::from_str::<Value>(STEEL).unwrap()});
    assert_schema("service-job-request", &request);
    let (status, job) = call(
        &router,
        Method::POST,
        &format!("/api/fields/{id}/jobs"),
        request.to_string().into(),
        "application/json",
    )
    .await;
    assert_eq!(status, StatusCode::ACCEPTED);
    assert_schema("service-job", &job);
    let uri = format!("/api/jobs/{}", job["id"].as_str().unwrap());
    let mut done = Value::Null;
    for _ in 0..2400 {
        let (_, v) = call(&router, Method::GET, &uri, vec![], "").await;
        if v["status"] == "done" || v["status"] == "failed" {
            done = v;
            break;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    assert_eq!(done["status"], "done", "{done}");
    assert_schema("service-job", &done);
    assert_eq!(done["result"]["summary"], cli_summary);
    let series: Series = serde_json::from_value(done["result"]["series"].clone()).unwrap();
    assert_eq!(results_csv(&series), cli_csv);

    let (_, meta) = call(
        &router,
        Method::GET,
        &format!("/api/fields/{id}"),
        vec![],
        "",
    )
    .await;
    assert_schema("service-field", &meta);
    let (status, err) = call(&router, Method::GET, "/api/jobs/none", vec![], "").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_schema("error", &err);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn service_sweep_payload_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(
        p,
        &[
            "synth", "--units", "m", "--nx", "25", "--ny", "25", "--out", "f.csv",
        ],
    );
    let side = read_json(p.join("f.json"));
    let router = app(AppState::new(ServiceConfig::default()));
    let (_, field) = call(
        &router,
        Method::POST,
        "/api/fields",
        std::fs::read(p.join("f.csv")).unwrap(),
        "text/csv",
    )
    .await;
    let id = field["id"].as_str().unwrap();
    let crack = json!({"polyline": side["crack"]["polyline"], "mask": side["crack"]["mask"]});
    let (status, _) = call(
        &router,
        Method::PUT,
        &format!("/api/fields/{id}/crack"),
        crack.to_string().into(),
        "application/json",
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let request = json!({"kind": "qsweep", "material": serde_json::from_str::<Value>(STEEL).unwrap(), "contours": 8});
    let (_, job) = call(
        &router,
        Method::POST,
        &format!("/api/fields/{id}/jobs"),
        request.to_string().into(),
        "application/json",
    )
    .await;
    let uri = format!("/api/jobs/{}", job["id"].as_str().unwrap());
    for _ in 0..2400 {
        let (status, v) = call(&router, Method::GET, &uri, vec![], "").await;
        if v["status"] == "done" {
            assert_eq!(status, StatusCode::OK);
            assert_schema("service-job", &v);
            assert_eq!(v["result"]["study"]["points"].as_array().unwrap().len(), 13);
            return;
        }
        assert_ne!(v["status"], "failed", "{v}");
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    panic!("sweep did not finish");
}

#[test]
fn shipped_schemas_are_valid() {
    for entry in std::fs::read_dir(schema_dir()).unwrap() {
        let path = entry.unwrap().path();
        let doc = read_json(&path);
        assert!(
            doc["$id"].as_str().unwrap().starts_with("urn:crackfield:"),
            "{}",
            path.display()
        );
        let name = doc["$id"]
            .as_str()
            .unwrap()
            .trim_start_matches("urn:crackfield:")
            .to_string();
        assert_eq!(
            path.file_name().unwrap().to_str().unwrap(),
            format!("{name}.schema.json")
        );
        validator(&name);
    }
}
