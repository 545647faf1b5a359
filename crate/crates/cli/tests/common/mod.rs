#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::Value;

/// In-process run: (exit code, stdout, stderr).
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("hierseed").chain(args.iter().copied());
    let code = hierseed_cli::run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

pub fn ok(args: &[&str]) -> String {
    let (code, out, err) = cli(args);
    assert_eq!(code, 0, "{args:?} failed: {err}");
    out
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Write `cfg` as a synth config and generate into `dir/data`.
pub fn synth(dir: &Path, cfg: &Value) -> PathBuf {
    let c = dir.join("synth.json");
    std::fs::write(&c, cfg.to_string()).unwrap();
    let data = dir.join("data");
    ok(&["synth", "--config", s(&c), "--out", s(&data)]);
    data
}

/// Outputs of one fit → infer → eval run.
pub struct Run {
    pub model: PathBuf,
    pub assignments: PathBuf,
    pub report: PathBuf,
    pub table: String,
}

impl Run {
    pub fn report(&self) -> Value {
        serde_json::from_slice(&std::fs::read(&self.report).unwrap()).unwrap()
    }

    pub fn manifest(&self) -> Value {
        serde_json::from_slice(&std::fs::read(self.model.join("manifest.json")).unwrap()).unwrap()
    }

    pub fn averaged(&self, key: &str) -> f64 {
        self.report()["averaged"][key].as_f64().unwrap()
    }

    /// Assignment paths by document.
    pub fn paths(&self) -> BTreeMap<String, Vec<String>> {
        std::fs::read_to_string(&self.assignments)
            .unwrap()
            .lines()
            .map(|l| {
                let v: Value = serde_json::from_str(l).unwrap();
                let path = v["path"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|x| x.as_str().unwrap().to_string())
                    .collect();
                (v["doc"].as_str().unwrap().to_string(), path)
            })
            .collect()
    }
}

/// fit, infer and eval on `data` into `dir/<tag>`. `pre` goes before the
/// subcommand (global flags), `extra` after `fit`.
pub fn pipeline(data: &Path, dir: &Path, tag: &str, pre: &[&str], extra: &[&str]) -> Run {
    let out = dir.join(tag);
    std::fs::create_dir_all(&out).unwrap();
    let model = out.join("model");
    let assignments = out.join("assignments.jsonl");
    let report = out.join("report.json");
    let tax = data.join("taxonomy.json");
    let emb = data.join("embeddings.bin");
    let seeds = data.join("seeds.tsv");
    let gold = data.join("gold.tsv");
    let mut fit = pre.to_vec();
    fit.extend([
        "fit",
        "--taxonomy",
        s(&tax),
        "--embeddings",
        s(&emb),
        "--seeds",
        s(&seeds),
        "--out",
        s(&model),
    ]);
    fit.extend(extra);
    ok(&fit);
    let mut infer = pre.to_vec();
    infer.extend([
        "infer",
        "--model",
        s(&model),
        "--embeddings",
        s(&emb),
        "--out",
        s(&assignments),
    ]);
    ok(&infer);
    let mut eval = pre.to_vec();
    eval.extend([
        "eval",
        "--assignments",
        s(&assignments),
        "--gold",
        s(&gold),
        "--taxonomy",
        s(&tax),
        "--out",
        s(&report),
    ]);
    let table = ok(&eval);
    Run {
        model,
        assignments,
        report,
        table,
    }
}

/// Gold label per document from a pairs file.
pub fn gold(data: &Path) -> BTreeMap<String, String> {
    hierseed::corpus_io::parse_pairs(&std::fs::read(data.join("gold.tsv")).unwrap())
        .unwrap()
        .into_iter()
        .map(|(d, t)| (d.to_string(), t.to_string()))
        .collect()
}

/// Every file under `dir` with its bytes, keyed by relative path.
pub fn tree_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().to_string();
        if p.is_dir() {
            for (k, v) in tree_bytes(&p) {
                out.insert(format!("{name}/{k}"), v);
            }
        } else {
            out.insert(name, std::fs::read(&p).unwrap());
        }
    }
    out
}

/// Byte equality of the model directory, assignments and report.
pub fn same_outputs(a: &Run, b: &Run) -> bool {
    tree_bytes(&a.model) == tree_bytes(&b.model)
        && std::fs::read(&a.assignments).unwrap() == std::fs::read(&b.assignments).unwrap()
        && std::fs::read(&a.report).unwrap() == std::fs::read(&b.report).unwrap()
}
