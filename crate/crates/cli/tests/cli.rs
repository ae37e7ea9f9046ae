use std::path::PathBuf;
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn juris(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_juris")).args(args).current_dir(root()).env_remove("KB_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn solve_prints_one_line_per_model() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "c.lp", "1{p;q}2.\n");
    let o = juris(&["solve", &f]);
    assert_eq!(o.status.code(), Some(0));
    let mut lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    lines.sort();
    assert_eq!(lines, ["p", "p q", "q"]);
    assert_eq!(stdout(&juris(&["solve", "--models", "1", &f])).lines().count(), 1);
}

#[test]
fn solve_reports_unsatisfiable_and_projects() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "c.lp", "p.\n:- p.\n");
    let o = juris(&["solve", &f]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "UNSATISFIABLE\n");
    let o = juris(&["solve", "--kb", "kb", "--project", "verdicts", "kb/judgments/earrings_2019.case"]);
    assert_eq!(stdout(&o), "robbery(\"Giulio\",\"Veronica\") theft(\"Giulio\",\"Veronica\",\"earrings\")\n");
}

#[test]
fn explain_tree_is_byte_exact() {
    let o = juris(&["explain", "kb/fixtures/carlo_beatrice.lp", "--query", "injuries(\"Carlo\",\"Beatrice\")"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let expected = "\
|__It is evident that Carlo (perpetrator) caused injuries to Beatrice (victim)
|  |__Carlo caused Beatrice to suffer skin lesion
|  |  |__skin lesion is an illness
|  |  |  |__skin lesion is a physical illness
|  |  |__Carlo caused skin lesion to Beatrice
|  |__Carlo had general intent to harm Beatrice
";
    assert_eq!(stdout(&o), expected);
}

#[test]
fn explain_dag_formats() {
    let q = "injuries(\"Carlo\",\"Beatrice\")";
    let dot = juris(&["explain", "kb/fixtures/carlo_beatrice.lp", "--query", q, "--dag", "dot"]);
    assert!(stdout(&dot).starts_with("digraph"), "{}", stdout(&dot));
    let json = juris(&["explain", "kb/fixtures/carlo_beatrice.lp", "--query", q, "--dag", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v["schema"], "juris.explanation-dag/1");
    let missing = juris(&["explain", "kb/fixtures/carlo_beatrice.lp", "--query", "nothing(here)"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn learn_prints_the_optimal_rule() {
    let o = juris(&["learn", "kb/tasks/damage.task"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "damage(V1,V2) :- V1 != V2, agent(V1), agent(V2), slap(V1,V2).\n");
}

#[test]
fn learn_without_a_hypothesis_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "t.task", "#modeh(p).\n#pos({q}, {}).\n");
    let o = juris(&["learn", &f]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_gates_the_corpus() {
    let o = juris(&["verify", "--kb", "kb"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).ends_with("5/5 cases pass\n"));
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        &dir,
        "wrong.case",
        "own(\"Veronica\", \"earrings\").\nsubtract(\"Giulio\", \"earrings\").\nsnatch(\"Giulio\", \"earrings\").\n\
         take_possession(\"Giulio\", \"earrings\").\nadherence(\"Veronica\", \"earrings\", 4).\n\
         #expect theft_snatch(\"Giulio\", \"Veronica\").\n",
    );
    let o = juris(&["verify", "--kb", "kb", &f]);
    assert_eq!(o.status.code(), Some(4));
    let o = juris(&["verify", "--kb", "kb", "--json", "kb/judgments/earrings_2019.case"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["schema"], "juris.refinement-report/1");
}

#[test]
fn kb_list_and_lint() {
    let o = juris(&["kb", "list", "--kb", "kb"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("judgment earrings_2019"), "{text}");
    let o = juris(&["kb", "lint", "--kb", "kb"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "bad.lp", "p(a).\np(a,b).\n");
    let o = juris(&["kb", "lint", &f]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

#[test]
fn usage_and_input_errors() {
    assert_eq!(juris(&[]).status.code(), Some(1));
    assert_eq!(juris(&["solve", "--bogus"]).status.code(), Some(1));
    assert_eq!(juris(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "bad.lp", "p :- .\n");
    let o = juris(&["solve", &f]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    let o = juris(&["solve", "/no/such/file.lp"]);
    assert_eq!(o.status.code(), Some(2));
}
