//! Tabular benchmark backend: a CSV file of pre-evaluated architectures
//! keyed by canonical hash.
//!
//! Schema (exact): header `ops,adj,valid_acc_mean,test_acc_mean,repeats`;
//! `ops` is the comma-joined op list (quoted because of the commas),
//! `adj` the row-major 0/1 adjacency string, accuracies in [0, 1].
//! UTF-8, LF line endings. An optional sidecar `<path>.meta` carries
//! `optimum_test_accuracy=<value>`.

use crate::error::{Error, Result};
use crate::space::{canonical_hash, canonicalize, validate, CellGraph, SearchSpaceSpec};
use std::collections::BTreeMap;
use std::path::Path;

pub const CSV_HEADER: [&str; 5] = ["ops", "adj", "valid_acc_mean", "test_acc_mean", "repeats"];

#[derive(Clone, Debug)]
pub struct TabularEntry {
    pub graph: CellGraph,
    pub valid_acc: f64,
    pub test_acc: f64,
    pub repeats: u32,
}

#[derive(Clone, Debug, Default)]
pub struct TabularBenchmark {
    entries: BTreeMap<String, TabularEntry>,
    pub optimum_test: Option<f64>,
}

impl TabularBenchmark {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, hash: &str) -> Option<&TabularEntry> {
        self.entries.get(hash)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &TabularEntry)> {
        self.entries.iter()
    }

    /// Best test accuracy: the sidecar value when present, otherwise the
    /// maximum over entries.
    pub fn optimum_test_accuracy(&self) -> Option<f64> {
        self.optimum_test.or_else(|| {
            self.entries
                .values()
                .map(|e| e.test_acc)
                .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
        })
    }

    /// 1-based rank of `test_acc` among all entries (1 = best).
    pub fn rank_of_test_accuracy(&self, test_acc: f64) -> Option<usize> {
        if self.entries.is_empty() {
            return None;
        }
        Some(1 + self.entries.values().filter(|e| e.test_acc > test_acc).count())
    }

    /// Writes the canonical CSV form (sorted by hash) plus the sidecar
    /// when an optimum is known.
    pub fn dump(&self, path: &Path, spec: &SearchSpaceSpec) -> Result<()> {
        let mut w = csv::WriterBuilder::new().from_path(path)?;
        w.write_record(CSV_HEADER)?;
        for entry in self.entries.values() {
            let text = entry.graph.to_text(spec);
            let (ops, adj) = split_text(&text);
            w.write_record([
                ops,
                adj,
                &entry.valid_acc.to_string(),
                &entry.test_acc.to_string(),
                &entry.repeats.to_string(),
            ])?;
        }
        w.flush()?;
        if let Some(opt) = self.optimum_test {
            std::fs::write(meta_path(path), format!("optimum_test_accuracy={opt}\n"))?;
        }
        Ok(())
    }
}

fn split_text(text: &str) -> (&str, &str) {
    let ops = text
        .strip_prefix("ops=")
        .and_then(|r| r.split(';').next())
        .unwrap_or("");
    let adj = text.split(";adj=").nth(1).unwrap_or("");
    (ops, adj)
}

fn meta_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".meta");
    std::path::PathBuf::from(s)
}

/// Loads a benchmark CSV. Malformed rows are collected and reported all
/// at once with their line numbers; entries are keyed by canonical hash.
pub fn load_tabular(path: &Path, spec: &SearchSpaceSpec) -> Result<TabularBenchmark> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::TabularLoad {
            problems: vec![format!("cannot open {}: {e}", path.display())],
        })?;
    let mut problems: Vec<String> = Vec::new();

    let headers = reader
        .headers()
        .map_err(|e| Error::TabularLoad {
            problems: vec![format!("cannot read header: {e}")],
        })?
        .clone();
    let mut col = [usize::MAX; 5];
    for (want_idx, want) in CSV_HEADER.iter().enumerate() {
        match headers.iter().position(|h| h == *want) {
            Some(i) => col[want_idx] = i,
            None => problems.push(format!("missing column {want:?}")),
        }
    }
    if !problems.is_empty() {
        return Err(Error::TabularLoad { problems });
    }

    let mut entries: BTreeMap<String, TabularEntry> = BTreeMap::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("unreadable row: {e}"));
                continue;
            }
        };
        let line = record
            .position()
            .map(|p| p.line().to_string())
            .unwrap_or_else(|| "?".into());
        let field = |i: usize| record.get(col[i]).unwrap_or("");
        let text = format!("ops={};adj={}", field(0), field(1));
        let graph = match CellGraph::parse_text(&text, spec) {
            Ok(g) => g,
            Err(e) => {
                problems.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let violations = validate(&graph, spec);
        if !violations.is_empty() {
            problems.push(format!("line {line}: invalid architecture: {}", violations[0]));
            continue;
        }
        let parse_acc = |name: &str, idx: usize| -> std::result::Result<f64, String> {
            let raw = field(idx);
            let v: f64 = raw
                .parse()
                .map_err(|_| format!("line {line}: bad {name} {raw:?}"))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("line {line}: {name} {v} outside [0,1]"));
            }
            Ok(v)
        };
        let valid_acc = parse_acc("valid_acc_mean", 2);
        let test_acc = parse_acc("test_acc_mean", 3);
        let repeats: std::result::Result<u32, String> = field(4)
            .parse()
            .map_err(|_| format!("line {line}: bad repeats {:?}", field(4)));
        match (valid_acc, test_acc, repeats) {
            (Ok(v), Ok(t), Ok(r)) => {
                let canonical = canonicalize(&graph);
                let hash = canonical_hash(&canonical);
                if entries.contains_key(&hash) {
                    problems.push(format!("line {line}: duplicate canonical hash {hash}"));
                } else {
                    entries.insert(
                        hash,
                        TabularEntry {
                            graph: canonical,
                            valid_acc: v,
                            test_acc: t,
                            repeats: r,
                        },
                    );
                }
            }
            (v, t, r) => {
                problems.extend(v.err());
                problems.extend(t.err());
                problems.extend(r.err());
            }
        }
    }
    if !problems.is_empty() {
        return Err(Error::TabularLoad { problems });
    }
    let mut bench = TabularBenchmark {
        entries,
        optimum_test: None,
    };
    let meta = meta_path(path);
    if meta.exists() {
        for line in std::fs::read_to_string(&meta)?.lines() {
            if let Some(v) = line.trim().strip_prefix("optimum_test_accuracy=") {
                bench.optimum_test = Some(v.parse().map_err(|_| Error::TabularLoad {
                    problems: vec![format!("sidecar: bad optimum_test_accuracy {v:?}")],
                })?);
            }
        }
    }
    Ok(bench)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{random_architecture, SearchSpaceSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn write_csv(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        std::fs::write(&path, body).unwrap();
        path
    }

    const HEADER: &str = "ops,adj,valid_acc_mean,test_acc_mean,repeats\n";

    fn three_rows() -> String {
        let mut s = String::from(HEADER);
        s.push_str("\"input,output\",0100,0.91,0.90,3\n");
        s.push_str("\"input,conv1x1,output\",010001000,0.92,0.915,3\n");
        s.push_str("\"input,conv3x3,output\",010001000,0.93,0.925,3\n");
        s
    }

    #[test]
    fn well_formed_file_loads_three_entries() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(dir.path(), "bench.csv", &three_rows());
        let bench = load_tabular(&path, &SearchSpaceSpec::default()).unwrap();
        assert_eq!(bench.len(), 3);
        assert_eq!(bench.optimum_test_accuracy(), Some(0.925));
        assert_eq!(bench.rank_of_test_accuracy(0.915), Some(2));
    }

    #[test]
    fn out_of_range_accuracy_is_rejected_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from(HEADER);
        body.push_str("\"input,output\",0100,1.2,0.90,3\n");
        let path = write_csv(dir.path(), "bad.csv", &body);
        let err = load_tabular(&path, &SearchSpaceSpec::default()).unwrap_err();
        match err {
            Error::TabularLoad { problems } => {
                assert!(problems[0].contains("line 2"), "{problems:?}");
                assert!(problems[0].contains("outside [0,1]"), "{problems:?}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn duplicate_hash_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from(HEADER);
        body.push_str("\"input,output\",0100,0.9,0.9,3\n");
        body.push_str("\"input,output\",0100,0.8,0.8,3\n");
        let path = write_csv(dir.path(), "dup.csv", &body);
        let err = load_tabular(&path, &SearchSpaceSpec::default()).unwrap_err();
        match err {
            Error::TabularLoad { problems } => {
                assert!(problems[0].contains("duplicate canonical hash"), "{problems:?}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn missing_column_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            dir.path(),
            "cols.csv",
            "ops,adj,valid_acc_mean,repeats\n\"input,output\",0100,0.9,3\n",
        );
        let err = load_tabular(&path, &SearchSpaceSpec::default()).unwrap_err();
        assert!(err.to_string().contains("test_acc_mean"), "{err}");
    }

    #[test]
    fn dump_then_load_is_a_fixpoint() {
        let spec = SearchSpaceSpec::default();
        let dir = tempfile::tempdir().unwrap();
        // synthesize a benchmark from random graphs
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut bench = TabularBenchmark::default();
        for i in 0..20 {
            let g = random_architecture(&spec, &mut rng);
            let hash = canonical_hash(&g);
            bench.entries.entry(hash).or_insert(TabularEntry {
                graph: g,
                valid_acc: 0.8 + 0.001 * i as f64,
                test_acc: 0.79 + 0.001 * i as f64,
                repeats: 3,
            });
        }
        bench.optimum_test = Some(0.94);
        let p1 = dir.path().join("a.csv");
        bench.dump(&p1, &spec).unwrap();
        let loaded = load_tabular(&p1, &spec).unwrap();
        assert_eq!(loaded.len(), bench.len());
        assert_eq!(loaded.optimum_test, Some(0.94));
        let p2 = dir.path().join("b.csv");
        loaded.dump(&p2, &spec).unwrap();
        let first = std::fs::read(&p1).unwrap();
        let second = std::fs::read(&p2).unwrap();
        assert_eq!(first, second, "dump -> load -> dump must be byte-stable");
        for (hash, e) in bench.entries() {
            let l = loaded.get(hash).expect("entry survived round trip");
            assert_eq!((l.valid_acc, l.test_acc, l.repeats), (e.valid_acc, e.test_acc, e.repeats));
        }
    }
}
