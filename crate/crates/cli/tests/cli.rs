//! End-to-end tests of the tempco binary: command behavior, exit codes,
//! output formats and determinism.

use std::io::Cursor;
use std::path::Path;
use std::process::{Command, Output};

use tempco::{
    generate, logistic, read_records, run_filter, serialize_stream, FilterConfig, FilterMethod,
    FrameRecord, SynthConfig,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tempco"))
}

fn run_raw(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary spawns")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run_raw(args);
    assert!(
        out.status.success(),
        "tempco {args:?} failed with {:?}:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code_of(args: &[&str]) -> (i32, String) {
    let out = run_raw(args);
    (
        out.status.code().expect("exit code"),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn path_str(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

fn frame_json(id: &str, t: u64, q: f64, label: &str, attack_type: Option<&str>) -> String {
    let record = FrameRecord::<f64> {
        tracklet_id: id.to_string(),
        t,
        q,
        label: label.to_string(),
        attack_type: attack_type.map(|s| s.to_string()),
        embedding: None,
        mu_hat: None,
        p: None,
        var_hat: None,
    };
    serde_json::to_string(&record).unwrap()
}

fn small_corpus_file(dir: &Path, seed: u64) -> std::path::PathBuf {
    let config: SynthConfig<f64> = SynthConfig {
        n_live: 4,
        n_attack: 4,
        length: 60,
        seed,
        ..SynthConfig::default()
    };
    let tracklets = generate(&config).unwrap();
    let path = dir.join("corpus.jsonl");
    std::fs::write(&path, serialize_stream(&tracklets, None).unwrap()).unwrap();
    path
}

#[test]
fn smooth_matches_the_library_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_corpus_file(dir.path(), 11);
    let cases: [(FilterMethod, &[&str]); 3] = [
        (FilterMethod::Fastco, &["--method", "fastco", "--window", "5"]),
        (
            FilterMethod::FastcoRecursive,
            &["--method", "fastco-recursive", "--window", "3"],
        ),
        (FilterMethod::Ema, &["--method", "ema", "--ema-alpha", "0.1"]),
    ];
    for (method, extra) in cases {
        let output = dir.path().join("smoothed.jsonl");
        let mut args = vec![
            "smooth",
            "--input",
            path_str(&input),
            "--output",
            path_str(&output),
        ];
        args.extend_from_slice(extra);
        run_ok(&args);

        let mut config = FilterConfig::<f64> {
            method,
            ..FilterConfig::default()
        };
        if method == FilterMethod::Fastco {
            config.window = 5;
        }
        if method == FilterMethod::FastcoRecursive {
            config.window = 3;
        }
        let text = std::fs::read_to_string(&output).unwrap();
        let records = read_records::<f64>(Cursor::new(text)).unwrap();
        let tracklets =
            tempco::parse_stream::<f64>(Cursor::new(std::fs::read_to_string(&input).unwrap()))
                .unwrap();
        for tracklet in &tracklets {
            let expected = run_filter(tracklet, &config).unwrap();
            for frame in &expected {
                let (_, record) = records
                    .iter()
                    .find(|(_, r)| r.tracklet_id == tracklet.id() && r.t as usize == frame.t)
                    .unwrap();
                assert_eq!(record.mu_hat.unwrap().to_bits(), frame.mu_hat.to_bits());
                assert_eq!(record.p.unwrap().to_bits(), frame.p.to_bits());
                assert_eq!(record.var_hat.unwrap().to_bits(), frame.var_hat.to_bits());
            }
        }
    }
}

#[test]
fn smooth_with_method_none_passes_probabilities_through() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_corpus_file(dir.path(), 5);
    let output = dir.path().join("smoothed.jsonl");
    run_ok(&[
        "smooth",
        "--input",
        path_str(&input),
        "--output",
        path_str(&output),
        "--method",
        "none",
    ]);
    let text = std::fs::read_to_string(&output).unwrap();
    let records = read_records::<f64>(Cursor::new(text)).unwrap();
    assert!(!records.is_empty());
    for (_, record) in &records {
        assert_eq!(record.mu_hat.unwrap().to_bits(), record.q.to_bits());
        assert_eq!(record.p.unwrap().to_bits(), logistic(record.q).to_bits());
        assert_eq!(record.var_hat.unwrap(), 0.0);
    }
}

#[test]
fn smooth_preserves_the_input_line_order() {
    let dir = tempfile::tempdir().unwrap();
    // Two tracklets with interleaved lines and a blank line in the middle.
    let mut lines = Vec::new();
    for t in 0..6u64 {
        lines.push(frame_json("b", t, -1.0 - t as f64 * 0.1, "attack", Some("print")));
        lines.push(frame_json("a", t, 1.0 + t as f64 * 0.1, "live", None));
    }
    lines.insert(4, String::new());
    let input = dir.path().join("in.jsonl");
    let output = dir.path().join("out.jsonl");
    std::fs::write(&input, lines.join("\n")).unwrap();
    run_ok(&[
        "smooth",
        "--input",
        path_str(&input),
        "--output",
        path_str(&output),
    ]);

    let text = std::fs::read_to_string(&output).unwrap();
    let got: Vec<(String, u64)> = read_records::<f64>(Cursor::new(text))
        .unwrap()
        .into_iter()
        .map(|(_, r)| (r.tracklet_id, r.t))
        .collect();
    let expected: Vec<(String, u64)> = lines
        .iter()
        .filter(|l| !l.is_empty())
        .map(|l| {
            let r: FrameRecord<f64> = serde_json::from_str(l).unwrap();
            (r.tracklet_id, r.t)
        })
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn eval_json_and_csv_encode_identical_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_corpus_file(dir.path(), 3);
    let json_path = dir.path().join("report.json");
    let csv_path = dir.path().join("report.csv");
    run_ok(&[
        "eval",
        "--input",
        path_str(&input),
        "--output",
        path_str(&json_path),
        "--csv",
        path_str(&csv_path),
    ]);

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut rows = csv.lines();
    assert_eq!(
        rows.next().unwrap(),
        "K,threshold,apcer,bpcer,acer,eer,fnr@fpr=1e-5,fnr@fpr=1e-4,fnr@fpr=1e-3,fnr@fpr=1e-2,fnr@fpr=1e-1"
    );

    let check_row = |row: &str, k: u64, body: &serde_json::Value| {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 11);
        assert_eq!(cells[0].parse::<u64>().unwrap(), k);
        let keys = ["threshold", "apcer", "bpcer", "acer", "eer"];
        for (cell, key) in cells[1..6].iter().zip(keys) {
            let json = body[key].as_f64().unwrap();
            assert_eq!(cell.parse::<f64>().unwrap().to_bits(), json.to_bits(), "{key}");
        }
        for (j, cell) in cells[6..].iter().enumerate() {
            let json = body["fnr_at_fpr"][j]["fnr"].as_f64().unwrap();
            assert_eq!(cell.parse::<f64>().unwrap().to_bits(), json.to_bits());
        }
    };

    check_row(rows.next().unwrap(), 0, &report["frame"]);
    let segments = report["segments"].as_array().unwrap();
    for segment in segments {
        let k = segment["segment_length"].as_u64().unwrap();
        check_row(rows.next().unwrap(), k, &segment["report"]);
    }
    assert!(rows.next().is_none());
}

#[test]
fn eval_reports_the_default_segment_grid() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_corpus_file(dir.path(), 9);
    let json_path = dir.path().join("report.json");
    run_ok(&[
        "eval",
        "--input",
        path_str(&input),
        "--output",
        path_str(&json_path),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let ks: Vec<u64> = report["segments"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["segment_length"].as_u64().unwrap())
        .collect();
    assert_eq!(ks, vec![1, 3, 5, 10, 15, 30]);
    assert_eq!(report["method"], "fastco");
    assert_eq!(report["threshold_policy"], "eer");

    // A custom list is deduplicated and sorted.
    run_ok(&[
        "eval",
        "--input",
        path_str(&input),
        "--output",
        path_str(&json_path),
        "--segments",
        "5,3,3,1",
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let ks: Vec<u64> = report["segments"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["segment_length"].as_u64().unwrap())
        .collect();
    assert_eq!(ks, vec![1, 3, 5]);
}

#[test]
fn eval_on_a_noiseless_corpus_is_perfect_at_the_eer_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    let json_path = dir.path().join("report.json");
    run_ok(&[
        "synth",
        "--output",
        path_str(&corpus),
        "--n-live",
        "6",
        "--n-attack",
        "6",
        "--length",
        "30",
        "--sigma",
        "0",
        "--spike-prob",
        "0",
    ]);
    run_ok(&[
        "eval",
        "--input",
        path_str(&corpus),
        "--output",
        path_str(&json_path),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    for key in ["apcer", "bpcer", "acer", "eer"] {
        assert_eq!(report["frame"][key].as_f64().unwrap(), 0.0, "{key}");
    }
    for segment in report["segments"].as_array().unwrap() {
        for key in ["apcer", "bpcer", "acer", "eer"] {
            assert_eq!(segment["report"][key].as_f64().unwrap(), 0.0, "{key}");
        }
    }
}

#[test]
fn eval_threshold_policies_resolve_as_documented() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_corpus_file(dir.path(), 21);
    let json_path = dir.path().join("report.json");

    run_ok(&[
        "eval",
        "--input",
        path_str(&input),
        "--output",
        path_str(&json_path),
        "--threshold-policy",
        "fixed:0.5",
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(report["threshold"].as_f64().unwrap(), 0.5);
    assert_eq!(report["threshold_policy"], "fixed:0.5");
    assert_eq!(report["saturated"], false);

    // An unreachable FPR budget saturates to the reject-all sentinel: one
    // live below one attack leaves every real operating point with FPR 1.
    let inverted = dir.path().join("inverted.jsonl");
    std::fs::write(
        &inverted,
        [
            frame_json("l", 0, -0.4, "live", None),
            frame_json("a", 0, 0.4, "attack", Some("replay")),
        ]
        .join("\n"),
    )
    .unwrap();
    run_ok(&[
        "eval",
        "--input",
        path_str(&inverted),
        "--output",
        path_str(&json_path),
        "--method",
        "none",
        "--threshold-policy",
        "fpr:0",
        "--segments",
        "1",
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(report["saturated"], true);
    assert_eq!(report["threshold"].as_f64().unwrap(), 2.0);
    assert_eq!(report["frame"]["apcer"].as_f64().unwrap(), 0.0);
    assert_eq!(report["frame"]["bpcer"].as_f64().unwrap(), 1.0);

    let (code, stderr) = code_of(&[
        "eval",
        "--input",
        path_str(&input),
        "--output",
        path_str(&json_path),
        "--threshold-policy",
        "fixed:1.5",
    ]);
    assert_eq!(code, 1, "{stderr}");
}

#[test]
fn synth_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let c = dir.path().join("c.jsonl");
    let base = ["--n-live", "3", "--n-attack", "3", "--length", "50"];
    for (path, seed) in [(&a, "42"), (&b, "42"), (&c, "43")] {
        let mut args = vec!["synth", "--output", path_str(path), "--seed", seed];
        args.extend_from_slice(&base);
        run_ok(&args);
    }
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap());
    assert_ne!(bytes_a, std::fs::read(&c).unwrap());
}

#[test]
fn exit_codes_distinguish_validation_from_io() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let out = dir.path().join("out.jsonl");

    // I/O problems exit 2.
    let (code, stderr) = code_of(&[
        "eval",
        "--input",
        path_str(&missing),
        "--output",
        path_str(&out),
    ]);
    assert_eq!(code, 2, "{stderr}");

    let input = small_corpus_file(dir.path(), 1);
    let (code, _) = code_of(&[
        "smooth",
        "--input",
        path_str(&input),
        "--output",
        "/nonexistent-dir/out.jsonl",
    ]);
    assert_eq!(code, 2);

    // Validation problems exit 1, with a line-addressed message where a
    // specific input line is at fault.
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(
        &bad,
        format!("{}\nnot json\n", frame_json("a", 0, 1.0, "live", None)),
    )
    .unwrap();
    let (code, stderr) = code_of(&[
        "smooth",
        "--input",
        path_str(&bad),
        "--output",
        path_str(&out),
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("line 2"), "{stderr}");
    assert!(!out.exists(), "no partial output on validation failure");

    let live_only = dir.path().join("live_only.jsonl");
    std::fs::write(&live_only, frame_json("a", 0, 1.0, "live", None)).unwrap();
    let (code, stderr) = code_of(&[
        "eval",
        "--input",
        path_str(&live_only),
        "--output",
        path_str(&out),
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("attack"), "{stderr}");

    let (code, _) = code_of(&[
        "smooth",
        "--input",
        path_str(&input),
        "--output",
        path_str(&out),
        "--window",
        "0",
    ]);
    assert_eq!(code, 1);

    let (code, _) = code_of(&["synth", "--output", path_str(&out), "--spike-prob", "1.5"]);
    assert_eq!(code, 1);

    let (code, _) = code_of(&["synth", "--output", path_str(&out), "--length", "0"]);
    assert_eq!(code, 1);

    // Usage problems are validation errors too.
    let (code, _) = code_of(&["smooth", "--input", path_str(&input), "--no-such-flag"]);
    assert_eq!(code, 1);
    let (code, _) = code_of(&[
        "smooth",
        "--input",
        path_str(&input),
        "--output",
        path_str(&out),
        "--method",
        "kalman",
    ]);
    assert_eq!(code, 1);

    // Help and version are successes.
    assert_eq!(code_of(&["--help"]).0, 0);
    assert_eq!(code_of(&["--version"]).0, 0);
    assert_eq!(code_of(&["eval", "--help"]).0, 0);

    // A bad thread cap is rejected before any work happens.
    let status = bin()
        .args(["synth", "--output", path_str(&out)])
        .env("TEMPCO_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
}

#[test]
fn reruns_and_thread_counts_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs: Vec<Vec<Vec<u8>>> = Vec::new();
    for (run, threads) in [(0, None), (1, Some("1")), (2, Some("6"))] {
        let sub = dir.path().join(format!("run{run}"));
        std::fs::create_dir(&sub).unwrap();
        let corpus = sub.join("corpus.jsonl");
        let smoothed = sub.join("smoothed.jsonl");
        let report = sub.join("report.json");
        let csv = sub.join("report.csv");
        let chart = sub.join("chart.svg");
        let steps: Vec<Vec<&str>> = vec![
            vec![
                "synth",
                "--output",
                path_str(&corpus),
                "--n-live",
                "8",
                "--n-attack",
                "8",
                "--length",
                "64",
            ],
            vec![
                "smooth",
                "--input",
                path_str(&corpus),
                "--output",
                path_str(&smoothed),
            ],
            vec![
                "eval",
                "--input",
                path_str(&corpus),
                "--output",
                path_str(&report),
                "--csv",
                path_str(&csv),
            ],
            vec![
                "plot",
                "--input",
                path_str(&smoothed),
                "--output",
                path_str(&chart),
                "--tracklet",
                "live-0003",
            ],
        ];
        for step in steps {
            let mut cmd = bin();
            cmd.args(&step);
            match threads {
                Some(n) => cmd.env("TEMPCO_THREADS", n),
                None => cmd.env_remove("TEMPCO_THREADS"),
            };
            let out = cmd.output().unwrap();
            assert!(
                out.status.success(),
                "{step:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
        outputs.push(
            [&corpus, &smoothed, &report, &csv, &chart]
                .iter()
                .map(|p| std::fs::read(p).unwrap())
                .collect(),
        );
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

fn band_widths(svg_text: &str) -> Vec<f64> {
    let doc = roxmltree::Document::parse(svg_text).unwrap();
    let band = doc
        .descendants()
        .find(|n| n.attribute("id") == Some("band"))
        .expect("band polygon");
    assert_eq!(band.tag_name().name(), "polygon");
    let points: Vec<(f64, f64)> = band
        .attribute("points")
        .unwrap()
        .split_whitespace()
        .map(|pair| {
            let (x, y) = pair.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect();
    assert_eq!(points.len() % 2, 0);
    let n = points.len() / 2;
    (0..n)
        .map(|t| {
            let hi = points[t];
            let lo = points[2 * n - 1 - t];
            assert!((hi.0 - lo.0).abs() < 1e-9, "band columns align");
            lo.1 - hi.1
        })
        .collect()
}

#[test]
fn plot_parses_back_as_svg_with_the_documented_layers() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_corpus_file(dir.path(), 17);
    let smoothed = dir.path().join("smoothed.jsonl");
    let chart = dir.path().join("chart.svg");
    run_ok(&[
        "smooth",
        "--input",
        path_str(&input),
        "--output",
        path_str(&smoothed),
    ]);
    run_ok(&[
        "plot",
        "--input",
        path_str(&smoothed),
        "--output",
        path_str(&chart),
        "--tracklet",
        "live-0000",
    ]);

    let text = std::fs::read_to_string(&chart).unwrap();
    let doc = roxmltree::Document::parse(&text).expect("valid XML");
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");

    let by_id = |id: &str| {
        doc.descendants()
            .find(|n| n.attribute("id") == Some(id))
            .unwrap_or_else(|| panic!("element #{id}"))
    };
    assert_eq!(by_id("band").tag_name().name(), "polygon");
    assert_eq!(by_id("raw").tag_name().name(), "polyline");
    assert_eq!(by_id("smoothed").tag_name().name(), "polyline");
    // The thin raw line sits under the thick smoothed line.
    let raw_width: f64 = by_id("raw").attribute("stroke-width").unwrap().parse().unwrap();
    let smooth_width: f64 = by_id("smoothed")
        .attribute("stroke-width")
        .unwrap()
        .parse()
        .unwrap();
    assert!(raw_width < smooth_width);

    let desc = doc
        .descendants()
        .find(|n| n.tag_name().name() == "desc")
        .expect("desc metadata");
    let desc_text = desc.text().unwrap();
    assert!(desc_text.contains("live-0000"));
    assert!(desc_text.contains("logistic(mu_hat +- sqrt(var_hat))"));

    let labels: Vec<&str> = doc
        .descendants()
        .filter(|n| n.tag_name().name() == "text")
        .filter_map(|n| n.text())
        .collect();
    assert!(labels.contains(&"frame index"));
    assert!(labels.contains(&"probability"));

    let raw_points = by_id("raw").attribute("points").unwrap();
    assert_eq!(raw_points.split_whitespace().count(), 60);
    assert_eq!(band_widths(&text).len(), 60);
}

#[test]
fn plot_band_narrows_after_a_spike_decays() {
    let dir = tempfile::tempdir().unwrap();
    let qs = [
        2.0, 2.2, 1.9, 2.1, 2.0, -4.0, 2.0, 2.1, 1.9, 2.05, 2.0, 1.95, 2.1, 2.0, 2.05, 1.95,
    ];
    let lines: Vec<String> = qs
        .iter()
        .enumerate()
        .map(|(t, &q)| frame_json("clip", t as u64, q, "live", None))
        .collect();
    let input = dir.path().join("clip.jsonl");
    let smoothed = dir.path().join("smoothed.jsonl");
    let chart = dir.path().join("chart.svg");
    std::fs::write(&input, lines.join("\n")).unwrap();
    run_ok(&[
        "smooth",
        "--input",
        path_str(&input),
        "--output",
        path_str(&smoothed),
        "--window",
        "5",
    ]);
    run_ok(&[
        "plot",
        "--input",
        path_str(&smoothed),
        "--output",
        path_str(&chart),
        "--tracklet",
        "clip",
    ]);

    let widths = band_widths(&std::fs::read_to_string(&chart).unwrap());
    assert_eq!(widths.len(), qs.len());
    for &w in &widths {
        assert!(w >= 0.0, "band never inverts");
    }
    // While the spike sits inside the sliding window the prior is noisy and
    // the band is wide; once it leaves the window the band collapses.
    assert!(widths[7] > 20.0, "width during decay: {}", widths[7]);
    assert!(widths[13] < 3.0, "width after decay: {}", widths[13]);
    assert!(widths[13] < widths[7] / 4.0);
}

#[test]
fn plot_of_a_constant_stream_is_flat_with_a_zero_width_band() {
    let dir = tempfile::tempdir().unwrap();
    let lines: Vec<String> = (0..12)
        .map(|t| frame_json("flat", t, 1.2, "live", None))
        .collect();
    let input = dir.path().join("flat.jsonl");
    let smoothed = dir.path().join("smoothed.jsonl");
    let chart = dir.path().join("chart.svg");
    std::fs::write(&input, lines.join("\n")).unwrap();
    run_ok(&[
        "smooth",
        "--input",
        path_str(&input),
        "--output",
        path_str(&smoothed),
        "--init-var",
        "0",
    ]);
    run_ok(&[
        "plot",
        "--input",
        path_str(&smoothed),
        "--output",
        path_str(&chart),
        "--tracklet",
        "flat",
    ]);

    let text = std::fs::read_to_string(&chart).unwrap();
    for width in band_widths(&text) {
        assert_eq!(width, 0.0);
    }
    let doc = roxmltree::Document::parse(&text).unwrap();
    let smoothed_points = doc
        .descendants()
        .find(|n| n.attribute("id") == Some("smoothed"))
        .unwrap()
        .attribute("points")
        .unwrap()
        .to_string();
    let ys: Vec<&str> = smoothed_points
        .split_whitespace()
        .map(|pair| pair.split_once(',').unwrap().1)
        .collect();
    assert!(ys.windows(2).all(|w| w[0] == w[1]), "flat line: {ys:?}");
}

#[test]
fn plot_rejects_missing_tracklets_and_unsmoothed_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = small_corpus_file(dir.path(), 2);
    let smoothed = dir.path().join("smoothed.jsonl");
    let chart = dir.path().join("chart.svg");
    run_ok(&[
        "smooth",
        "--input",
        path_str(&input),
        "--output",
        path_str(&smoothed),
    ]);

    let (code, stderr) = code_of(&[
        "plot",
        "--input",
        path_str(&smoothed),
        "--output",
        path_str(&chart),
        "--tracklet",
        "live-9999",
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("not found"), "{stderr}");

    let (code, stderr) = code_of(&[
        "plot",
        "--input",
        path_str(&input),
        "--output",
        path_str(&chart),
        "--tracklet",
        "live-0000",
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("smooth"), "{stderr}");
    assert!(!chart.exists());
}

#[test]
fn grad_check_passes_on_the_shipped_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    let fixture = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/gradcheck_batch.jsonl");
    run_ok(&[
        "grad-check",
        "--input",
        fixture,
        "--output",
        path_str(&report_path),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    let checks = report["checks"].as_array().unwrap();
    let names: Vec<&str> = checks.iter().map(|c| c["loss"].as_str().unwrap()).collect();
    assert_eq!(
        names,
        ["classification", "temporal", "class-consistency", "combined"]
    );
    for check in checks {
        assert_eq!(check["status"], "passed", "{check}");
    }
}

#[test]
fn grad_check_on_identical_embeddings_trivially_passes() {
    let dir = tempfile::tempdir().unwrap();
    let batch = dir.path().join("batch.jsonl");
    let lines: Vec<String> = (0..6)
        .map(|i| {
            format!(
                r#"{{"video_id":"v{}","class_id":{},"x":[1.0,2.0],"logits":[0.4,-0.2,0.1]}}"#,
                i % 2,
                i % 3
            )
        })
        .collect();
    std::fs::write(&batch, lines.join("\n")).unwrap();
    let out = run_ok(&["grad-check", "--input", path_str(&batch)]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
}

#[test]
fn grad_check_with_a_coarse_step_fails_but_still_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.json");
    let fixture = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/gradcheck_batch.jsonl");
    let (code, stderr) = code_of(&[
        "grad-check",
        "--input",
        fixture,
        "--output",
        path_str(&report_path),
        "--fd-step",
        "0.75",
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("gradient check failed"), "{stderr}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
    let failed = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["status"] == "failed")
        .count();
    assert!(failed >= 1);
}
