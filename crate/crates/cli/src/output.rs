//! In-memory artifacts, written to disk only after a run succeeds.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

/// Identity stamped into every artifact.
#[derive(Debug, Clone)]
pub struct Stamp {
    pub experiment: &'static str,
    pub hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Shortest round-trip scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// CSV table whose first line is a `#` comment carrying the stamp.
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(stamp: &Stamp, columns: &[&str]) -> Self {
        let mut text = format!("# experiment={} config_sha256={} seed={}\n", stamp.experiment, stamp.hash, stamp.seed);
        text.push_str(&columns.join(","));
        text.push('\n');
        Csv { text, width: columns.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.width, "row width");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            write!(self.text, "{c}").unwrap();
        }
        self.text.push('\n');
    }

    pub fn finish(self, name: &str) -> Artifact {
        Artifact { name: name.to_string(), bytes: self.text.into_bytes() }
    }
}

/// Pretty JSON object with the stamp fields merged in front of `payload`'s keys.
pub fn json(stamp: &Stamp, name: &str, payload: &impl Serialize) -> Artifact {
    let mut map = Map::new();
    map.insert("experiment".into(), Value::from(stamp.experiment));
    map.insert("config_sha256".into(), Value::from(stamp.hash.clone()));
    map.insert("seed".into(), Value::from(stamp.seed));
    match serde_json::to_value(payload).expect("serializable payload") {
        Value::Object(o) => map.extend(o),
        other => {
            map.insert("result".into(), other);
        }
    }
    let mut bytes = serde_json::to_vec_pretty(&Value::Object(map)).expect("serializable map");
    bytes.push(b'\n');
    Artifact { name: name.to_string(), bytes }
}

pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for a in artifacts {
        std::fs::write(dir.join(&a.name), &a.bytes)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stamp() -> Stamp {
        Stamp { experiment: "lsm", hash: "ab".into(), seed: 4 }
    }

    #[test]
    fn csv_carries_the_stamp() {
        let mut c = Csv::new(&stamp(), &["a", "b"]);
        c.row(&[num(0.5), num(1e-300)]);
        let a = c.finish("x.csv");
        assert_eq!(String::from_utf8(a.bytes).unwrap(), "# experiment=lsm config_sha256=ab seed=4\na,b\n5e-1,1e-300\n");
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 123456.789] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn json_merges_stamp() {
        let a = json(&stamp(), "r.json", &serde_json::json!({ "value": 1.5 }));
        let v: Value = serde_json::from_slice(&a.bytes).unwrap();
        assert_eq!(v["seed"], 4);
        assert_eq!(v["config_sha256"], "ab");
        assert_eq!(v["value"], 1.5);
    }
}
