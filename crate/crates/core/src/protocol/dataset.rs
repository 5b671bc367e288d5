//! Per-length summary statistics and their CSV form.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Header of the dataset CSV, fixed.
pub const CSV_HEADER: [&str; 5] = ["m", "mean", "sem", "n_sequences", "shots"];

/// Repetitions per sequence: exact expectation values or a finite count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Shots {
    Exact,
    Count(u64),
}

impl fmt::Display for Shots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shots::Exact => f.write_str("exact"),
            Shots::Count(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Shots {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" | "EXACT" => Ok(Shots::Exact),
            other => match other.parse::<u64>() {
                Ok(0) | Err(_) => Err(Error::MalformedDataset(format!(
                    "shots must be `exact` or a positive integer, found `{other}`"
                ))),
                Ok(n) => Ok(Shots::Count(n)),
            },
        }
    }
}

/// One sequence's measured signal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceOutcome {
    pub m: usize,
    pub sequence: Vec<usize>,
    /// Exact `Tr[Q ρ_final]` or the click fraction.
    pub value: f64,
    pub shots: Shots,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayPoint {
    pub m: usize,
    pub mean: f64,
    /// Standard error of the mean; absent for fewer than two sequences.
    pub sem: Option<f64>,
    pub n_sequences: usize,
    pub shots: Shots,
}

impl DecayPoint {
    /// Summarizes sequence values with the unbiased (n−1) variance.
    pub fn from_values(m: usize, values: &[f64], shots: Shots) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sem = (n >= 2).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        Self {
            m,
            mean,
            sem,
            n_sequences: n,
            shots,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunMetadata {
    pub master_seed: u64,
    /// SHA-256 over the numeric content of the run configuration.
    pub fingerprint: String,
    pub variant: String,
    pub gateset: String,
    pub gate_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecayDataset {
    pub points: Vec<DecayPoint>,
    pub raw: Option<Vec<SequenceOutcome>>,
    pub metadata: Option<RunMetadata>,
}

impl DecayDataset {
    pub fn from_points(points: Vec<DecayPoint>) -> Self {
        Self {
            points,
            raw: None,
            metadata: None,
        }
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.m).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean).collect()
    }

    pub fn point(&self, m: usize) -> Option<&DecayPoint> {
        self.points.iter().find(|p| p.m == m)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for p in &self.points {
            w.write_record([
                p.m.to_string(),
                p.mean.to_string(),
                p.sem.map(|s| s.to_string()).unwrap_or_default(),
                p.n_sequences.to_string(),
                p.shots.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(Error::MalformedDataset(format!(
                "expected header `{}`, found `{}`",
                CSV_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut points = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let field = |i: usize| record.get(i).unwrap_or("").trim();
            let bad = |name: &str, v: &str| {
                Error::MalformedDataset(format!("row {}: bad {name} `{v}`", line + 1))
            };
            let m = field(0).parse::<usize>().map_err(|_| bad("m", field(0)))?;
            let mean = field(1).parse::<f64>().map_err(|_| bad("mean", field(1)))?;
            let sem = match field(2) {
                "" => None,
                s => Some(s.parse::<f64>().map_err(|_| bad("sem", s))?),
            };
            if sem.is_some_and(|s| s < 0.0 || !s.is_finite()) {
                return Err(bad("sem", field(2)));
            }
            let n_sequences = field(3)
                .parse::<usize>()
                .map_err(|_| bad("n_sequences", field(3)))?;
            let shots = field(4).parse::<Shots>()?;
            points.push(DecayPoint {
                m,
                mean,
                sem,
                n_sequences,
                shots,
            });
        }
        Ok(Self::from_points(points))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sem_uses_unbiased_variance() {
        let p = DecayPoint::from_values(3, &[1.0, 2.0, 3.0, 4.0], Shots::Exact);
        assert_eq!(p.mean, 2.5);
        // var = 5/3
        assert!((p.sem.unwrap() - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(DecayPoint::from_values(1, &[0.5], Shots::Exact).sem, None);
    }

    #[test]
    fn header_is_fixed() {
        let ds = DecayDataset::from_points(vec![DecayPoint::from_values(
            5,
            &[0.9, 0.8],
            Shots::Count(100),
        )]);
        let text = ds.to_csv_string();
        assert!(text.starts_with("m,mean,sem,n_sequences,shots\n"));
        assert!(text.lines().nth(1).unwrap().ends_with(",2,100"));
    }

    #[test]
    fn rejects_wrong_header_and_rows() {
        assert!(DecayDataset::read_csv("m,mean,sem\n1,0.5,0.1\n".as_bytes()).is_err());
        let bad = "m,mean,sem,n_sequences,shots\nx,0.5,0.1,3,exact\n";
        assert!(DecayDataset::read_csv(bad.as_bytes()).is_err());
        let bad_shots = "m,mean,sem,n_sequences,shots\n1,0.5,0.1,3,0\n";
        assert!(DecayDataset::read_csv(bad_shots.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            rows in proptest::collection::vec(
                (1usize..1000, 0.0f64..1.0, proptest::option::of(0.0f64..0.1), 1usize..100, proptest::option::of(1u64..10_000)),
                0..12,
            )
        ) {
            let points: Vec<DecayPoint> = rows
                .into_iter()
                .map(|(m, mean, sem, n, shots)| DecayPoint {
                    m,
                    mean,
                    sem,
                    n_sequences: n,
                    shots: shots.map_or(Shots::Exact, Shots::Count),
                })
                .collect();
            let ds = DecayDataset::from_points(points);
            let back = DecayDataset::read_csv(ds.to_csv_string().as_bytes()).unwrap();
            prop_assert_eq!(back, ds);
        }
    }
}
