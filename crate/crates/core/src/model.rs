//! Trained factor models and their text persistence.

use std::fmt;
use std::io::{BufRead, Write};

use crate::data::FeedbackMode;
use crate::error::{Error, Result};
use crate::matrix::{dot, FactorTable};

/// One line of a training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub objective: f64,
    /// Values of the model's log columns for this epoch.
    pub metrics: Vec<f64>,
}

impl fmt::Display for EpochRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.epoch, self.objective)?;
        for m in &self.metrics {
            write!(f, "\t{m}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for EpochRecord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Data(format!("malformed log line '{s}'"));
        let mut it = s.split('\t');
        let epoch = it.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
        let objective = it.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
        let metrics = it.map(|x| x.parse().map_err(|_| bad())).collect::<Result<_>>()?;
        Ok(EpochRecord {
            epoch,
            objective,
            metrics,
        })
    }
}

/// Rank-`r` user and item factors; the score of `(i, j)` is `u_i·v_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub algorithm: String,
    pub mode: FeedbackMode,
    pub users: FactorTable,
    pub items: FactorTable,
    /// Side-matrix column factors learned by Co-Factor.
    pub side: Option<FactorTable>,
    /// Hyperparameters as `key value` pairs, in insertion order.
    pub params: Vec<(String, String)>,
    /// Names of the per-epoch metrics in `log`.
    pub log_columns: Vec<String>,
    pub log: Vec<EpochRecord>,
}

impl FactorModel {
    pub fn new(algorithm: &str, mode: FeedbackMode, users: FactorTable, items: FactorTable) -> Result<Self> {
        if users.rank() != items.rank() {
            return Err(Error::Dimension(format!(
                "user rank {} differs from item rank {}",
                users.rank(),
                items.rank()
            )));
        }
        Ok(FactorModel {
            algorithm: algorithm.to_owned(),
            mode,
            users,
            items,
            side: None,
            params: Vec::new(),
            log_columns: Vec::new(),
            log: Vec::new(),
        })
    }

    pub fn n_users(&self) -> usize {
        self.users.rows()
    }

    pub fn n_items(&self) -> usize {
        self.items.rows()
    }

    pub fn rank(&self) -> usize {
        self.users.rank()
    }

    pub fn predict(&self, user: usize, item: usize) -> f64 {
        dot(self.users.row(user), self.items.row(item))
    }

    /// Scores of every item for `user`.
    pub fn scores(&self, user: usize) -> Vec<f64> {
        let u = self.users.row(user);
        (0..self.n_items()).map(|j| dot(u, self.items.row(j))).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.users.is_finite() && self.items.is_finite() && self.side.as_ref().is_none_or(FactorTable::is_finite)
    }

    pub fn set_param(&mut self, key: &str, value: impl fmt::Display) {
        let value = value.to_string();
        match self.params.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.params.push((key.to_owned(), value)),
        }
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write_log<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "epoch\tobjective")?;
        for c in &self.log_columns {
            write!(w, "\t{c}")?;
        }
        writeln!(w)?;
        for rec in &self.log {
            writeln!(w, "{rec}")?;
        }
        Ok(())
    }

    /// Text form: "CF-MODEL v1", tagged header lines, then the U rows, the V
    /// rows and an optional V' section. Floats use the shortest representation
    /// that parses back to the same bits.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "CF-MODEL v1")?;
        writeln!(w, "mode {}", self.mode)?;
        writeln!(w, "algorithm {}", self.algorithm)?;
        writeln!(w, "n {}", self.n_users())?;
        writeln!(w, "m {}", self.n_items())?;
        writeln!(w, "r {}", self.rank())?;
        for (k, v) in &self.params {
            writeln!(w, "param {k} {v}")?;
        }
        write_table(&mut w, "U", &self.users)?;
        write_table(&mut w, "V", &self.items)?;
        if let Some(side) = &self.side {
            write_table(&mut w, "V'", side)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut cur = Cursor {
            lines: r.lines().collect::<std::io::Result<_>>()?,
            pos: 0,
        };
        let (_, magic) = cur.expect("header")?;
        if magic.trim() != "CF-MODEL v1" {
            return Err(Error::parse(1, "missing 'CF-MODEL v1' header"));
        }
        let mut mode = None;
        let mut algorithm = String::new();
        let (mut n, mut m, mut r) = (None, None, None);
        let mut params = Vec::new();
        let table_line = loop {
            let (ln, line) = cur.expect("factor tables")?;
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            let count = || rest.trim().parse::<usize>().map_err(|_| Error::parse(ln, format!("bad {key}")));
            match key {
                "mode" => mode = Some(rest.trim().parse::<FeedbackMode>()?),
                "algorithm" => algorithm = rest.trim().to_owned(),
                "n" => n = Some(count()?),
                "m" => m = Some(count()?),
                "r" => r = Some(count()?),
                "param" => {
                    let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                    params.push((k.to_owned(), v.to_owned()));
                }
                "U" => break ln,
                _ => return Err(Error::parse(ln, format!("unexpected header line '{line}'"))),
            }
        };
        let missing = |what: &str| Error::parse(table_line, format!("header lacks '{what}'"));
        let mode = mode.ok_or_else(|| missing("mode"))?;
        let n = n.ok_or_else(|| missing("n"))?;
        let m = m.ok_or_else(|| missing("m"))?;
        let r = r.ok_or_else(|| missing("r"))?;
        let users = cur.table(n, r)?;
        let (ln, tag) = cur.expect("V section")?;
        if tag.trim() != "V" {
            return Err(Error::parse(ln, "expected 'V' section"));
        }
        let items = cur.table(m, r)?;
        let side = match cur.next_nonblank() {
            None => None,
            Some((ln, tag)) => {
                let rows = tag
                    .strip_prefix("V' ")
                    .and_then(|s| s.trim().parse::<usize>().ok())
                    .ok_or_else(|| Error::parse(ln, "expected \"V' <rows>\" section"))?;
                Some(cur.table(rows, r)?)
            }
        };
        let mut model = FactorModel::new(&algorithm, mode, users, items)?;
        model.side = side;
        model.params = params;
        Ok(model)
    }
}

fn write_table<W: Write>(w: &mut W, tag: &str, t: &FactorTable) -> Result<()> {
    if tag == "V'" {
        writeln!(w, "{tag} {}", t.rows())?;
    } else {
        writeln!(w, "{tag}")?;
    }
    for i in 0..t.rows() {
        for (c, x) in t.row(i).iter().enumerate() {
            if c > 0 {
                write!(w, " ")?;
            }
            write!(w, "{x:?}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

struct Cursor {
    lines: Vec<String>,
    pos: usize,
}

impl Cursor {
    fn expect(&mut self, what: &str) -> Result<(usize, &str)> {
        let i = self.pos;
        let line = self
            .lines
            .get(i)
            .ok_or_else(|| Error::Data(format!("model file truncated before {what}")))?;
        self.pos += 1;
        Ok((i + 1, line.as_str()))
    }

    fn next_nonblank(&mut self) -> Option<(usize, &str)> {
        while self.pos < self.lines.len() && self.lines[self.pos].trim().is_empty() {
            self.pos += 1;
        }
        let i = self.pos;
        self.pos += 1;
        self.lines.get(i).map(|l| (i + 1, l.as_str()))
    }

    fn table(&mut self, rows: usize, rank: usize) -> Result<FactorTable> {
        let mut data = Vec::with_capacity(rows * rank);
        for _ in 0..rows {
            let (ln, line) = self.expect("factor row")?;
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(tok.parse::<f64>().map_err(|_| Error::parse(ln, format!("bad float '{tok}'")))?);
            }
            if data.len() - before != rank {
                return Err(Error::parse(ln, format!("expected {rank} values, found {}", data.len() - before)));
            }
        }
        Ok(FactorTable::from_vec(rows, rank, data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn sample() -> FactorModel {
        let mut g = rng::seeded(3);
        let mut m = FactorModel::new(
            "cofactor",
            FeedbackMode::Explicit,
            FactorTable::gaussian(4, 3, 1.0, &mut g),
            FactorTable::gaussian(5, 3, 1.0, &mut g),
        )
        .unwrap();
        m.side = Some(FactorTable::gaussian(2, 3, 1e-300, &mut g));
        m.set_param("lambda", 0.1);
        m.set_param("seed", 7);
        m
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for side in [true, false] {
            let mut m = sample();
            if !side {
                m.side = None;
            }
            let mut buf = Vec::new();
            m.write(&mut buf).unwrap();
            let back = FactorModel::read(buf.as_slice()).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.predict(2, 4).to_bits(), m.predict(2, 4).to_bits());
        }
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(FactorModel::read("CF-MODEL v2\n".as_bytes()).is_err());
        assert!(FactorModel::read("CF-MODEL v1\nmode explicit\nn 1\nm 1\nr 2\nU\n1 2\nV\n1\n".as_bytes()).is_err());
        assert!(FactorModel::read("CF-MODEL v1\nmode explicit\nn 1\nm 1\nr 1\nU\n1\n".as_bytes()).is_err());
    }

    #[test]
    fn log_lines_parse_back() {
        let rec = EpochRecord {
            epoch: 3,
            objective: 1.25,
            metrics: vec![0.5, f64::NAN],
        };
        let back: EpochRecord = rec.to_string().parse().unwrap();
        assert_eq!(back.epoch, 3);
        assert_eq!(back.objective, 1.25);
        assert_eq!(back.metrics[0], 0.5);
        assert!(back.metrics[1].is_nan());
        let bare: EpochRecord = "0\t2".parse().unwrap();
        assert!(bare.metrics.is_empty());
        assert!("x\t1".parse::<EpochRecord>().is_err());
    }
}
