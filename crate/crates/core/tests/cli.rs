use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn asset(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets").join(rel)
}

fn scope(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_scope"));
    for var in ["SCOPE_PROVIDER", "SCOPE_BASE_URL", "SCOPE_API_KEY", "SCOPE_MODEL", "SCOPE_CONFIG"] {
        cmd.env_remove(var);
    }
    cmd.args(args).envs(env.iter().copied());
    cmd.output().expect("scope runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn oracle_renders_the_three_city_instance() {
    let o = scope(&["oracle", "--instance", s(&asset("trip/venice.inst.json"))], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    // Mykonos [1, 2], Vienna [2..5], Venice [5..10]: the only order whose
    // flights exist and which puts Venice on days 5 and 10.
    assert_eq!(
        stdout(&o),
        "Here is the trip plan for visiting the 3 European cities for 10 days:\n\n\
         **Day 1-2:** Arriving in Mykonos and visit Mykonos for 2 days.\n\
         **Day 2:** Fly from Mykonos to Vienna.\n\
         **Day 2-5:** Visit Vienna for 4 days.\n\
         **Day 5:** Fly from Vienna to Venice.\n\
         **Day 5-10:** Visit Venice for 6 days.\n"
    );
}

#[test]
fn eval_without_dataset_is_a_usage_error() {
    let o = scope(&["eval", "--bundle", "b", "--report", "r"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error: usage: "), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn missing_bundle_exits_one_with_category() {
    let o = scope(&["infer", "--bundle", "/nonexistent/bundle", "--query", "q"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: bundle: "), "{}", stderr(&o));
}

#[test]
fn replayed_build_matches_scripted_build() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let example = asset("trip/exemplar.ex.json");
    let o = scope(
        &[
            "build-solver", "--example", s(&example), "--provider", "scripted",
            "--script", s(&asset("trip/exemplar.script.json")), "--out", s(&a),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = scope(
        &[
            "build-solver", "--example", s(&example), "--transcript",
            s(&asset("trip/exemplar.transcript.jsonl")), "--out", s(&b),
        ],
        &[("SCOPE_PROVIDER", "replay")],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["combination.spec.json", "filter.spec.json", "deliver.spec.json", "schema.rep.json", "build.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }

    let o = scope(
        &["infer", "--bundle", s(&b), "--instance", s(&asset("trip/venice.inst.json"))],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let oracle = scope(&["oracle", "--instance", s(&asset("trip/venice.inst.json"))], &[]);
    assert_eq!(stdout(&o), stdout(&oracle));
}

#[test]
fn provider_precedence_is_flag_env_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scope.toml");
    std::fs::write(&config, "[provider]\nkind = \"live\"\n").unwrap();
    let out = dir.path().join("b");
    let example = asset("trip/exemplar.ex.json");
    let base = ["build-solver", "--config", s(&config), "--example", s(&example), "--out", s(&out)];
    let err = |o: Output| {
        assert_eq!(o.status.code(), Some(2));
        stderr(&o)
    };

    // Config alone selects the live provider.
    assert!(err(scope(&base, &[])).contains("live provider needs --base-url"));
    // The environment beats the config file.
    assert!(err(scope(&base, &[("SCOPE_PROVIDER", "replay")])).contains("replay needs --transcript"));
    // A flag beats the environment.
    let mut flagged = base.to_vec();
    flagged.extend(["--provider", "scripted"]);
    assert!(err(scope(&flagged, &[("SCOPE_PROVIDER", "replay")])).contains("needs --script"));
}

#[test]
fn unknown_config_keys_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scope.toml");
    std::fs::write(&config, "[provider]\nflavour = \"x\"\n").unwrap();
    let o = scope(&["oracle", "--config", s(&config), "--instance", "x"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_data_eval_and_infer_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |f: &str| dir.path().join(f);
    let o = scope(
        &[
            "build-solver", "--example", s(&asset("meeting/exemplar.ex.json")), "--provider", "replay",
            "--transcript", s(&asset("meeting/exemplar.transcript.jsonl")), "--out", s(&p("bundle")),
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let gen = |out: &str| {
        scope(
            &[
                "gen-data", "--domain", "meeting", "--seed", "11", "--count", "12", "--min-level", "1",
                "--max-level", "6", "--out", s(&p(out)), "--instances-dir", s(&p("inst")),
            ],
            &[],
        )
    };
    assert!(gen("d1.jsonl").status.success());
    assert!(gen("d2.jsonl").status.success());
    assert_eq!(std::fs::read(p("d1.jsonl")).unwrap(), std::fs::read(p("d2.jsonl")).unwrap());

    let o = scope(
        &[
            "eval", "--bundle", s(&p("bundle")), "--dataset", s(&p("d1.jsonl")), "--report",
            s(&p("report")), "--jobs", "3", "--sample-per-level", "1", "--model", "gpt-4o",
        ],
        &[("SCOPE_PROVIDER", "oracle")],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(p("report/report.csv")).unwrap();
    assert_eq!(csv, stdout(&o));
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "level,count,success_rate,mean_cost_usd,mean_latency_s");
    assert_eq!(rows.len(), 1 + 6 + 1);
    assert!(rows[7].starts_with("all,6,1.000,"), "{csv}");
    assert!(p("report/report.json").exists());
    assert_eq!(std::fs::read_to_string(p("report/outcomes.jsonl")).unwrap().lines().count(), 6);

    let query = std::fs::read_to_string(p("d1.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(query.lines().next().unwrap()).unwrap();
    let o = scope(
        &["infer", "--bundle", s(&p("bundle")), "--provider", "oracle", "--query", first["query"].as_str().unwrap()],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim_end(), first["gold_answer"].as_str().unwrap());
}

#[test]
fn record_refuses_to_replace_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.jsonl");
    std::fs::write(&t, "").unwrap();
    let o = scope(
        &[
            "record", "--example", s(&asset("trip/exemplar.ex.json")), "--provider", "scripted", "--script",
            s(&asset("trip/exemplar.script.json")), "--out", s(&t),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(std::fs::read_to_string(&t).unwrap(), "");
}
