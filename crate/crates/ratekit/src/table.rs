//! Sweep tables and their CSV and gnuplot-style `.dat` forms.
//!
//! CSV columns are `param,algo,analytic_tau_bps,sim_tau_bps,sim_stderr_bps`
//! followed by `f_1..f_N`. Missing values are empty fields. Notes (the swept
//! parameter, simulation settings, per-row errors) are `#` comment lines
//! ahead of the header.

use std::io::{self, Write};

use ratekit_core::AlgorithmKind;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub algo: AlgorithmKind,
    pub analytic_tau_bps: Option<f64>,
    pub sim_tau_bps: Option<f64>,
    pub sim_stderr_bps: Option<f64>,
    /// Per-rate time fractions, analytic when available.
    pub fractions: Vec<Option<f64>>,
    /// Not serialized into the row itself; emitted as a note.
    pub error: Option<String>,
}

impl SweepRow {
    pub fn empty(param: f64, algo: AlgorithmKind, n_rates: usize) -> Self {
        Self {
            param,
            algo,
            analytic_tau_bps: None,
            sim_tau_bps: None,
            sim_stderr_bps: None,
            fractions: vec![None; n_rates],
            error: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub param: String,
    pub n_rates: usize,
    pub notes: Vec<String>,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header: {0}")]
    Header(String),
    #[error("line {line}: {msg}")]
    Field { line: u64, msg: String },
}

fn header(n_rates: usize) -> Vec<String> {
    let mut h: Vec<String> = ["param", "algo", "analytic_tau_bps", "sim_tau_bps", "sim_stderr_bps"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=n_rates).map(|i| format!("f_{i}")));
    h
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_algo(s: &str) -> Option<AlgorithmKind> {
    match s {
        "arf" => Some(AlgorithmKind::Arf),
        "aarf" => Some(AlgorithmKind::Aarf),
        "paarf" => Some(AlgorithmKind::Paarf),
        _ => None,
    }
}

impl SweepTable {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.error.is_none())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), TableError> {
        for note in &self.notes {
            writeln!(out, "# {note}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(header(self.n_rates))?;
        for r in &self.rows {
            let mut rec = vec![
                r.param.to_string(),
                r.algo.name().to_owned(),
                cell(r.analytic_tau_bps),
                cell(r.sim_tau_bps),
                cell(r.sim_stderr_bps),
            ];
            rec.extend(r.fractions.iter().map(|f| cell(*f)));
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Inverse of [`Self::write_csv`]. Row errors live only in the notes, so
    /// parsed rows carry `error: None`.
    pub fn parse_csv(text: &str) -> Result<Self, TableError> {
        let notes: Vec<String> = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| l.trim_start_matches('#').trim_start().to_owned())
            .collect();
        let param = notes
            .iter()
            .find_map(|n| n.strip_prefix("param: "))
            .unwrap_or_default()
            .to_owned();
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let head: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let n_rates = head.len().saturating_sub(5);
        if head != header(n_rates) {
            return Err(TableError::Header(head.join(",")));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |msg: String| TableError::Field { line, msg };
            let num = |k: usize| -> Result<Option<f64>, TableError> {
                let s = &rec[k];
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| bad(format!("`{s}` is not a number")))
                }
            };
            let param = num(0)?.ok_or_else(|| bad("missing param".into()))?;
            let algo = parse_algo(&rec[1]).ok_or_else(|| bad(format!("unknown algorithm `{}`", &rec[1])))?;
            rows.push(SweepRow {
                param,
                algo,
                analytic_tau_bps: num(2)?,
                sim_tau_bps: num(3)?,
                sim_stderr_bps: num(4)?,
                fractions: (5..5 + n_rates).map(num).collect::<Result<_, _>>()?,
                error: None,
            });
        }
        Ok(Self {
            param,
            n_rates,
            notes,
            rows,
        })
    }

    /// One whitespace-separated block per algorithm, blocks separated by two
    /// blank lines (gnuplot `index`). Missing values are `NaN`.
    pub fn write_dat<W: Write>(&self, mut out: W) -> io::Result<()> {
        for note in &self.notes {
            writeln!(out, "# {note}")?;
        }
        writeln!(out, "# columns: {}", header(self.n_rates)[..].iter().filter(|h| *h != "algo").cloned().collect::<Vec<_>>().join(" "))?;
        let mut algos: Vec<AlgorithmKind> = Vec::new();
        for r in &self.rows {
            if !algos.contains(&r.algo) {
                algos.push(r.algo);
            }
        }
        let num = |x: Option<f64>| x.map_or_else(|| "NaN".to_owned(), |v| v.to_string());
        for (b, algo) in algos.iter().enumerate() {
            if b > 0 {
                writeln!(out)?;
                writeln!(out)?;
            }
            writeln!(out, "# algo {}", algo.name())?;
            for r in self.rows.iter().filter(|r| r.algo == *algo) {
                let mut fields = vec![
                    r.param.to_string(),
                    num(r.analytic_tau_bps),
                    num(r.sim_tau_bps),
                    num(r.sim_stderr_bps),
                ];
                fields.extend(r.fractions.iter().map(|f| num(*f)));
                writeln!(out, "{}", fields.join(" "))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> SweepTable {
        let mut a = SweepRow::empty(0.7, AlgorithmKind::Arf, 2);
        a.analytic_tau_bps = Some(812345.678901234);
        a.fractions = vec![Some(0.6), Some(0.4)];
        let mut b = SweepRow::empty(0.7, AlgorithmKind::Paarf, 2);
        b.sim_tau_bps = Some(700000.5);
        b.sim_stderr_bps = Some(321.25);
        b.fractions = vec![Some(0.5), Some(0.3)];
        SweepTable {
            param: "alphas[0]".into(),
            n_rates: 2,
            notes: vec!["param: alphas[0]".into()],
            rows: vec![a, b],
        }
    }

    #[test]
    fn missing_values_are_empty_fields() {
        let csv = table().to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# param: alphas[0]");
        assert_eq!(lines[1], "param,algo,analytic_tau_bps,sim_tau_bps,sim_stderr_bps,f_1,f_2");
        assert_eq!(lines[2], "0.7,arf,812345.678901234,,,0.6,0.4");
        assert_eq!(lines[3], "0.7,paarf,,700000.5,321.25,0.5,0.3");
    }

    #[test]
    fn csv_round_trips() {
        let t = table();
        assert_eq!(SweepTable::parse_csv(&t.to_csv_string()).unwrap(), t);
    }

    #[test]
    fn rejects_foreign_headers() {
        assert!(matches!(
            SweepTable::parse_csv("x,algo\n1,arf\n"),
            Err(TableError::Header(_))
        ));
        let bad = "param,algo,analytic_tau_bps,sim_tau_bps,sim_stderr_bps,f_1\n0.5,foo,,,,\n";
        assert!(matches!(SweepTable::parse_csv(bad), Err(TableError::Field { .. })));
    }

    #[test]
    fn dat_has_one_block_per_algorithm() {
        let mut buf = Vec::new();
        table().write_dat(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("# algo arf\n0.7 812345.678901234 NaN NaN 0.6 0.4\n\n\n# algo paarf\n"));
        assert!(text.contains("# columns: param analytic_tau_bps sim_tau_bps sim_stderr_bps f_1 f_2\n"));
    }
}
