//! Tabular and JSON output for disclosure-probability experiments.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Column order of sweep CSV files.
pub const CSV_HEADER: [&str; 13] = [
    "dist",
    "sigma",
    "epsilon",
    "x0",
    "domain",
    "k",
    "regime",
    "delta_closed",
    "delta_general",
    "delta_mc",
    "stderr",
    "n",
    "seed",
];

/// One disclosure-probability measurement.
///
/// `delta_closed` is the whole-line value, `delta_general` the per-`x0`
/// bounded-domain value; `n = 0` means no Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub dist: String,
    pub sigma: f64,
    pub epsilon: f64,
    pub x0: Option<f64>,
    pub domain: String,
    pub k: usize,
    pub regime: String,
    pub delta_closed: Option<f64>,
    pub delta_general: Option<f64>,
    pub delta_mc: Option<f64>,
    pub stderr: Option<f64>,
    pub n: u64,
    pub seed: Option<u64>,
}

impl PrivacyReport {
    /// The analytic value, if any.
    pub fn analytic(&self) -> Option<f64> {
        self.delta_general.or(self.delta_closed)
    }

    /// Whether the Monte Carlo estimate sits within `z` standard errors of
    /// the analytic value; `None` when either side is missing.
    pub fn mc_agrees(&self, z: f64) -> Option<bool> {
        let (mc, se, exact) = (self.delta_mc?, self.stderr?, self.analytic()?);
        Some((mc - exact).abs() <= z * se.max(f64::EPSILON))
    }
}

pub fn write_csv<W: Write>(rows: &[PrivacyReport], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    if rows.is_empty() {
        wr.write_record(CSV_HEADER)?;
    }
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(r: R) -> Result<Vec<PrivacyReport>> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return crate::error::arg(format!("unexpected CSV header {header:?}"));
    }
    Ok(rd.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PrivacyReport {
        PrivacyReport {
            dist: "gaussian".into(),
            sigma: 1.0,
            epsilon: 0.5,
            x0: None,
            domain: "R".into(),
            k: 0,
            regime: "independent".into(),
            delta_closed: Some(0.3829249225480262),
            delta_general: None,
            delta_mc: Some(0.383),
            stderr: Some(0.0005),
            n: 1_000_000,
            seed: Some(7),
        }
    }

    #[test]
    fn header_is_exact() {
        let mut buf = Vec::new();
        write_csv(&[sample()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "dist,sigma,epsilon,x0,domain,k,regime,delta_closed,delta_general,delta_mc,stderr,n,seed"
        );
        let mut empty = Vec::new();
        write_csv(&[], &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().trim_end(), CSV_HEADER.join(","));
    }

    #[test]
    fn csv_round_trip() {
        let mut buf = Vec::new();
        write_csv(&[sample(), sample()], &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, vec![sample(), sample()]);
    }

    #[test]
    fn agreement_check() {
        assert_eq!(sample().mc_agrees(3.0), Some(true));
        let mut r = sample();
        r.delta_mc = Some(0.4);
        assert_eq!(r.mc_agrees(3.0), Some(false));
        r.delta_mc = None;
        assert_eq!(r.mc_agrees(3.0), None);
    }
}
