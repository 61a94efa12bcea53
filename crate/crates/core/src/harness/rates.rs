use std::io::{Read, Write};

use crate::error::{invalid, Result, VmmError};

/// Error norms reported in a rate table, in column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrNorm {
    L2,
    H1,
    H2,
    Linf,
}

impl ErrNorm {
    pub const ALL: [ErrNorm; 4] = [ErrNorm::L2, ErrNorm::H1, ErrNorm::H2, ErrNorm::Linf];

    pub fn label(self) -> &'static str {
        match self {
            ErrNorm::L2 => "L2",
            ErrNorm::H1 => "H1",
            ErrNorm::H2 => "H2",
            ErrNorm::Linf => "Linf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match ErrNorm::ALL
            .into_iter()
            .find(|n| n.label().eq_ignore_ascii_case(s))
        {
            Some(n) => Ok(n),
            None => invalid(format!("unknown norm {s:?}; expected L2, H1, H2 or Linf")),
        }
    }
}

/// `rate_i = log(e_{i-1}/e_i) / log(p_{i-1}/p_i)` for `i >= 1`; `None` when
/// either error is not positive and finite.
pub fn estimate_rate(errors: &[f64], params: &[f64]) -> Result<Vec<Option<f64>>> {
    if errors.len() != params.len() || errors.len() < 2 {
        return invalid(format!(
            "need equal lengths >= 2, got {} errors and {} parameters",
            errors.len(),
            params.len()
        ));
    }
    check_params(params)?;
    Ok((1..errors.len())
        .map(|i| pair_rate(errors[i - 1], errors[i], params[i - 1], params[i]))
        .collect())
}

fn pair_rate(e0: f64, e1: f64, p0: f64, p1: f64) -> Option<f64> {
    let ok = |e: f64| e > 0.0 && e.is_finite();
    if ok(e0) && ok(e1) {
        Some((e0 / e1).ln() / (p0 / p1).ln())
    } else {
        None
    }
}

pub(crate) fn check_params(params: &[f64]) -> Result<()> {
    if params.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return invalid(format!("parameters must be positive, got {params:?}"));
    }
    let inc = params.windows(2).all(|w| w[1] > w[0]);
    let dec = params.windows(2).all(|w| w[1] < w[0]);
    if !(inc || dec) {
        return invalid(format!(
            "parameters must be strictly monotone, got {params:?}"
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub param: f64,
    /// Indexed like [`ErrNorm::ALL`].
    pub errors: [Option<f64>; 4],
    pub rates: [Option<f64>; 4],
    pub failed: bool,
}

impl RateRow {
    pub fn error(&self, n: ErrNorm) -> Option<f64> {
        self.errors[n as usize]
    }

    pub fn rate(&self, n: ErrNorm) -> Option<f64> {
        self.rates[n as usize]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateTable {
    /// Written as `# key: value` lines above the data.
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<RateRow>,
}

pub const CSV_HEADER: &str =
    "param,err_L2,err_H1,err_H2,err_Linf,rate_L2,rate_H1,rate_H2,rate_Linf";
const FAILED: &str = "FAILED";

/// C-style `%.6e`: six digits after the point, signed two-digit exponent.
pub fn format_sci(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.6e}");
    let (mant, exp) = s.split_once('e').expect("exponent");
    let e: i32 = exp.parse().expect("exponent digits");
    let sign = if e < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", e.abs())
}

impl RateTable {
    /// Builds rows from per-point errors (`None` marks a failed point) and
    /// fills in the rates.
    pub fn from_errors(params: &[f64], errors: &[Option<[Option<f64>; 4]>]) -> Result<Self> {
        if params.len() != errors.len() {
            return invalid("one error set per parameter is required");
        }
        check_params(params)?;
        let mut rows: Vec<RateRow> = params
            .iter()
            .zip(errors)
            .map(|(&param, e)| RateRow {
                param,
                errors: e.unwrap_or([None; 4]),
                rates: [None; 4],
                failed: e.is_none(),
            })
            .collect();
        for i in 1..rows.len() {
            for n in 0..4 {
                if let (Some(e0), Some(e1)) = (rows[i - 1].errors[n], rows[i].errors[n]) {
                    rows[i].rates[n] = pair_rate(e0, e1, rows[i - 1].param, rows[i].param);
                }
            }
        }
        Ok(RateTable {
            metadata: Vec::new(),
            rows,
        })
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.push((key.into(), value.into()));
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn last_rate(&self, n: ErrNorm) -> Option<f64> {
        self.rows.last().and_then(|r| r.rate(n))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        let csv_err = |e: csv::Error| VmmError::Io(std::io::Error::other(e));
        w.write_record(CSV_HEADER.split(',')).map_err(csv_err)?;
        let cell = |v: Option<f64>| v.map(format_sci).unwrap_or_default();
        for r in &self.rows {
            let mut rec = vec![format_sci(r.param)];
            if r.failed {
                rec.push(FAILED.to_string());
                rec.extend(std::iter::repeat_n(String::new(), 7));
            } else {
                rec.extend(r.errors.iter().map(|&e| cell(e)));
                rec.extend(r.rates.iter().map(|&e| cell(e)));
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    pub fn read_csv<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut metadata = Vec::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let body = line[1..].trim_start();
            match body.split_once(": ") {
                Some((k, v)) => metadata.push((k.to_string(), v.to_string())),
                None => metadata.push((body.trim_end_matches(':').to_string(), String::new())),
            }
        }
        let mut rd = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .has_headers(true)
            .from_reader(text.as_bytes());
        let parse_err = |e: csv::Error| VmmError::Parse(e.to_string());
        let header = rd
            .headers()
            .map_err(parse_err)?
            .iter()
            .collect::<Vec<_>>()
            .join(",");
        if header != CSV_HEADER {
            return Err(VmmError::Parse(format!("unexpected header {header:?}")));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|_| VmmError::Parse(format!("bad number {s:?}")))
        };
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(parse_err)?;
            if rec.len() != 9 {
                return Err(VmmError::Parse(format!(
                    "row has {} fields, expected 9",
                    rec.len()
                )));
            }
            let param = num(&rec[0])?.ok_or_else(|| VmmError::Parse("missing param".into()))?;
            if &rec[1] == FAILED {
                rows.push(RateRow {
                    param,
                    errors: [None; 4],
                    rates: [None; 4],
                    failed: true,
                });
                continue;
            }
            let mut errors = [None; 4];
            let mut rates = [None; 4];
            for n in 0..4 {
                errors[n] = num(&rec[1 + n])?;
                rates[n] = num(&rec[5 + n])?;
            }
            rows.push(RateRow {
                param,
                errors,
                rates,
                failed: false,
            });
        }
        Ok(RateTable { metadata, rows })
    }
}
