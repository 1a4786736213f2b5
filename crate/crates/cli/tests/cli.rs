mod common;

use std::fs;

use common::*;
use mdsaccel_core::shard::Shard;
use serde_json::Value;

#[test]
fn encode_example_parity_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = encode_into(dir.path(), &[0x11, 0x12, 0x21, 0x22], 3, 2, 2);
    assert_schema("manifest", &manifest);
    assert_eq!((manifest["n"].as_u64(), manifest["original_len"].as_u64()), (Some(3), Some(4)));

    let shards = dir.path().join("shards");
    let read = |id: usize| Shard::read(shards.join(format!("shard_{id}.mdsf"))).unwrap().symbols;
    assert_eq!(read(1), [0x11, 0x12]);
    assert_eq!(read(2), [0x21, 0x22]);
    assert_eq!(read(3), [0x11 ^ 0x21, 0x12 ^ 0x22]);

    for nodes in ["1,2", "1,3", "2,3"] {
        let out_file = dir.path().join(format!("out_{nodes}.bin"));
        let out = bin().args(["decode", "--nodes", nodes, "--dir"]).arg(&shards).arg("--out").arg(&out_file).output().unwrap();
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(fs::read(&out_file).unwrap(), [0x11, 0x12, 0x21, 0x22]);
    }
}

#[test]
fn decode_survives_lost_and_corrupt_shards() {
    let dir = tempfile::tempdir().unwrap();
    let data: Vec<u8> = (0..=255u8).cycle().take(4 * 37).collect();
    encode_into(dir.path(), &data, 6, 4, 37);
    let shards = dir.path().join("shards");
    fs::remove_file(shards.join("shard_1.mdsf")).unwrap();
    let mut bytes = fs::read(shards.join("shard_2.mdsf")).unwrap();
    *bytes.last_mut().unwrap() ^= 1;
    fs::write(shards.join("shard_2.mdsf"), bytes).unwrap();

    let out_file = dir.path().join("out.bin");
    let out = bin().arg("decode").arg("--dir").arg(&shards).arg("--out").arg(&out_file).output().unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read(&out_file).unwrap(), data);

    fs::remove_file(shards.join("shard_3.mdsf")).unwrap();
    let out = bin().arg("decode").arg("--dir").arg(&shards).arg("--out").arg(&out_file).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn padding() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty");
    fs::write(&input, b"").unwrap();
    let shards = dir.path().join("shards");
    let out = bin().args(["encode", "-n", "4", "-k", "2", "-m", "1", "--pad", "--input"]).arg(&input).arg("--out-dir").arg(&shards).output().unwrap();
    assert_eq!(code(&out), 0);
    for id in 1..=4 {
        assert_eq!(Shard::read(shards.join(format!("shard_{id}.mdsf"))).unwrap().symbols, [0]);
    }
    let back = dir.path().join("back");
    assert_eq!(code(&bin().arg("decode").arg("--dir").arg(&shards).arg("--out").arg(&back).output().unwrap()), 0);
    assert_eq!(fs::read(&back).unwrap(), b"");

    // 5 bytes into k = 2 pads to m = 3
    fs::write(&input, b"hello").unwrap();
    let out = bin().args(["encode", "-n", "3", "-k", "2", "--pad", "--input"]).arg(&input).arg("--out-dir").arg(&shards).output().unwrap();
    assert_eq!(stdout_json(&out)["m"], 3);
    assert_eq!(code(&bin().args(["decode", "--nodes", "2,3", "--dir"]).arg(&shards).arg("--out").arg(&back).output().unwrap()), 0);
    assert_eq!(fs::read(&back).unwrap(), b"hello");
}

#[test]
fn usage_errors_exit_one_before_any_io() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing").display().to_string();
    let never = dir.path().join("never").display().to_string();
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["frobnicate"],
        vec!["simulate", "-n", "10", "-k", "6", "--model", "gauss:mu=1"],
        vec!["simulate", "-n", "10", "-k", "6", "--model", "uniform:T=-1"],
        vec!["simulate", "-n", "5", "-k", "6", "--model", "uniform:T=1"],
        vec!["simulate", "-n", "10", "-k", "6", "--model", "uniform:T=1", "--trials", "0"],
        vec!["simulate", "-n", "10", "-k", "6", "--model", "uniform:T=1", "-t", "7"],
        vec!["simulate", "-n", "3", "-k", "2", "--model", "pernode:1,2", "--log", &never],
        vec!["analytic", "-n", "10", "-k", "6", "--model", "pernode:1,2,3"],
        vec!["analytic", "-n", "3", "-k", "3", "--model", "uniform:T=1"],
        vec!["worst-case", "--family", "gamma"],
        vec!["worst-case", "--family", "sexp", "--lambda", "0"],
        vec!["worst-case", "--family", "sexp", "--lambda", "0.1,0.2"],
        vec!["encode", "-n", "2", "-k", "2", "--input", &missing, "--out-dir", &never],
        vec!["fetch", "--endpoints", "127.0.0.1:1,127.0.0.1:2", "-t", "1"],
        vec!["fetch", "--endpoints", "not-an-address", "-t", "1"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(code(&out), 1, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(!dir.path().join("never").exists());
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["simulate", "--help"])), 0);
}

#[test]
fn size_mismatch_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    fs::write(&input, [1, 2, 3]).unwrap();
    let out = bin().args(["encode", "-n", "3", "-k", "2", "-m", "2", "--input"]).arg(&input).arg("--out-dir").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(!dir.path().join("o").exists());
}

#[test]
fn runtime_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing");
    let out = bin().args(["encode", "-n", "3", "-k", "2", "--input"]).arg(&missing).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(code(&out), 2);
    let out = bin().args(["decode", "--dir"]).arg(dir.path()).arg("--out").arg(dir.path().join("x")).output().unwrap();
    assert_eq!(code(&out), 2);
    let out = bin().args(["serve-node", "--node-id", "1", "--shard"]).arg(&missing).output().unwrap();
    assert_eq!(code(&out), 2);
    // nothing listens on these ports
    let dead: Vec<String> = (0..3)
        .map(|_| std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().to_string())
        .collect();
    let endpoints = dead.join(",");
    assert_eq!(code(&run(&["fetch", "--strategy", "da", "-t", "1", "--endpoints", &endpoints])), 2);
    assert_eq!(code(&run(&["fetch", "--strategy", "aaul", "-t", "1", "-k", "2", "-m", "2", "--endpoints", &endpoints])), 2);
}

#[test]
fn analytic_outputs() {
    let v = stdout_json(&run(&["analytic", "-n", "10", "-k", "6", "--model", "uniform:T=100"]));
    assert_schema("analytic_summary", &v);
    assert!((v["e_y2"].as_f64().unwrap() - 450.0 / 11.0).abs() < 1e-9);
    assert!((v["gamma"].as_f64().unwrap() - 2.0 / 11.0).abs() < 1e-12);
    assert!((v["gamma_asymptotic"].as_f64().unwrap() - 0.16).abs() < 1e-12);

    let v = stdout_json(&run(&["analytic", "-n", "10", "-k", "6", "--model", "sexp:lambda=0.02,s=1"]));
    assert_schema("analytic_summary", &v);
    assert!((v["e_y2"].as_f64().unwrap() - 31.0).abs() < 1e-9);
    assert!((v["gamma"].as_f64().unwrap() - 20.0 / 51.0).abs() < 1e-12);
}

#[test]
fn worst_case_outputs() {
    let v = stdout_json(&run(&["worst-case", "--family", "uniform", "--upper", "100"]));
    assert_schema("analytic_summary", &v);
    assert_eq!(v["gamma"].as_f64(), Some(1.0 / 3.0));
    assert_eq!((v["e_y1"].as_f64(), v["e_y2"].as_f64()), (Some(100.0), Some(200.0 / 3.0)));

    let v = stdout_json(&run(&["worst-case", "--family", "sexp", "--lambda", "0.02", "--shift", "0", "--vt", "100"]));
    assert_schema("analytic_summary", &v);
    // E[min(100, max(X1, X3))] with X ~ Exp(0.02) is 100 (1 - e^-2) - 25 (1 - e^-4)
    let e_y2 = 100.0 * (1.0 - (-2.0f64).exp()) - 25.0 * (1.0 - (-4.0f64).exp());
    let g = v["gamma"].as_f64().unwrap();
    assert!((g - (1.0 - e_y2 / 100.0)).abs() < 1e-8, "{g}");

    let v = stdout_json(&run(&["worst-case", "--family", "sexp", "--shift", "5", "--vt", "4"]));
    assert!(v["gamma"].as_f64().unwrap().abs() < 1e-12);

    let v = stdout_json(&run(&["worst-case", "--family", "sexp", "--sweep", "--lambda", "0.02,0.04", "--shift", "0,10", "--vt", "50,100"]));
    assert_schema("worst_case_sweep", &v);
    assert_eq!(v.as_array().unwrap().len(), 8);
}

fn simulate(dir: &std::path::Path, tag: &str, extra: &[&str]) -> (Value, Vec<u8>, Vec<u8>) {
    let log = dir.join(format!("{tag}.jsonl"));
    let csv = dir.join(format!("{tag}.csv"));
    let out = bin()
        .args(["simulate", "-n", "10", "-k", "6", "--trials", "3000"])
        .args(extra)
        .arg("--log")
        .arg(&log)
        .arg("--csv")
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    (stdout_json(&out), fs::read(log).unwrap(), fs::read(csv).unwrap())
}

#[test]
fn simulate_outputs_and_logs() {
    let dir = tempfile::tempdir().unwrap();
    let (summary, log, csv) = simulate(dir.path(), "a", &["--model", "sexp:lambda=0.02,s=1", "--seed", "9"]);
    assert_schema("sim_summary", &summary);
    let lines: Vec<Value> = log.split(|&b| b == b'\n').filter(|l| !l.is_empty()).map(|l| serde_json::from_slice(l).unwrap()).collect();
    assert_eq!(lines.len(), 3000);
    for l in lines.iter().take(200) {
        assert_schema("trial_log_line", l);
    }
    let csv = String::from_utf8(csv).unwrap();
    assert_eq!(csv.lines().next(), Some("trial,y1,y2,mean_y1,mean_y2"));
    assert_eq!(csv.lines().count(), 3001);
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|f| f.parse().unwrap()).collect();
    assert!((last[3] - summary["mean_da"].as_f64().unwrap()).abs() < 1e-9);
    assert!((last[4] - summary["mean_accel"].as_f64().unwrap()).abs() < 1e-9);

    let (c, ..) = simulate(dir.path(), "c", &["--model", "const:v=7"]);
    assert_eq!(c["reduction_ratio"].as_f64(), Some(0.0));
}

#[test]
fn seed_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (flag, log_flag, _) = simulate(dir.path(), "flag", &["--model", "uniform:T=100", "--seed", "77"]);
    let log = dir.path().join("env.jsonl");
    let out = bin()
        .env("MDSF_SEED", "77")
        .args(["simulate", "-n", "10", "-k", "6", "--trials", "3000", "--model", "uniform:T=100", "--log"])
        .arg(&log)
        .output()
        .unwrap();
    let env = stdout_json(&out);
    assert_eq!(env["seed"], 77);
    assert_eq!(env["mean_accel"], flag["mean_accel"]);
    assert_eq!(fs::read(log).unwrap(), log_flag);
}

#[test]
fn serve_and_fetch_processes() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = encode_into(dir.path(), &[0x11, 0x12, 0x21, 0x22], 3, 2, 2);
    let shards = dir.path().join("shards");
    let logs: Vec<_> = (1..=3).map(|id| dir.path().join(format!("node{id}.jsonl"))).collect();
    let nodes: Vec<NodeProcess> = [50, 100, 50]
        .iter()
        .enumerate()
        .map(|(i, &d)| NodeProcess::start(i + 1, &shards.join(format!("shard_{}.mdsf", i + 1)), d, Some(&logs[i])))
        .collect();
    let endpoints = nodes.iter().map(|p| p.addr.to_string()).collect::<Vec<_>>().join(",");
    let manifest_path = shards.join("manifest.json");

    let fetch = |strategy: &str, out: &std::path::Path| {
        let o = bin()
            .args(["fetch", "--strategy", strategy, "-t", "2", "--endpoints", &endpoints, "--manifest"])
            .arg(&manifest_path)
            .arg("--out")
            .arg(out)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        stdout_json(&o)
    };
    let da_out = dir.path().join("da.bin");
    let da = fetch("da", &da_out);
    assert_schema("fetch_report", &da);
    assert_eq!(da["verified"], true);
    let fast_out = dir.path().join("aaul.bin");
    let fast = fetch("aaul", &fast_out);
    assert_schema("fetch_report", &fast);
    assert_eq!((fast["path"].as_str(), fast["verified"].as_bool()), (Some("decoded"), Some(true)));
    assert_eq!(fast["nodes_used"], serde_json::json!([1, 3]));
    assert_eq!(fs::read(&da_out).unwrap(), [0x21, 0x22]);
    assert_eq!(fs::read(&fast_out).unwrap(), [0x21, 0x22]);
    assert_eq!(fast["sha256"], manifest["checksums"][1]);

    let (da_ms, fast_ms) = (da["wall_latency_ms"].as_f64().unwrap(), fast["wall_latency_ms"].as_f64().unwrap());
    assert!((100.0..=120.0).contains(&da_ms), "{da_ms}");
    assert!((50.0..=70.0).contains(&fast_ms), "{fast_ms}");

    std::thread::sleep(std::time::Duration::from_millis(150));
    drop(nodes);
    for (i, path) in logs.iter().enumerate() {
        for line in fs::read_to_string(path).unwrap().lines() {
            let v: Value = serde_json::from_str(line).unwrap();
            assert_schema("request_log_line", &v);
            assert_eq!(v["node"], i + 1);
        }
    }
    // node 2: answered the direct read, never answered the cancelled one
    let node2: Vec<bool> = fs::read_to_string(&logs[1]).unwrap().lines().map(|l| serde_json::from_str::<Value>(l).unwrap()["replied"].as_bool().unwrap()).collect();
    assert_eq!(node2, [true, false]);
}
