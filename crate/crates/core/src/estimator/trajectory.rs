//! Per-step log of a cooperative run and its CSV form.
//!
//! One CSV row per `(k, sensor)`:
//!
//! ```text
//! k,i,phi_1..phi_m,y,eps,r,xQ,theta_hat_1..theta_hat_m
//! ```
//!
//! Row `k` holds the `k`-th regressor of sensor `i` (1-based), the
//! observation and noise paired with it, the energy `r^i_k`, the diffused
//! energy `x^i_k(Q)` and the estimate after the `k`-th update.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DVector;

use super::stacked::stack;
use crate::error::{Error, Result};
use crate::numfmt::full_precision;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub k: usize,
    pub phi: Vec<DVector<f64>>,
    pub y: Vec<f64>,
    pub eps: Vec<f64>,
    pub r: Vec<f64>,
    pub xq: Vec<f64>,
    pub theta_hat: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub n: usize,
    pub m: usize,
    /// Master seed of the run, when known.
    pub seed: Option<u64>,
    /// Resolved configuration text the run was produced from.
    pub config_echo: Option<String>,
    /// Estimates before the first update, when known (not part of the CSV).
    pub initial: Option<Vec<DVector<f64>>>,
    pub steps: Vec<TrajectoryStep>,
}

impl TrajectoryRecord {
    pub fn new(n: usize, m: usize) -> Self {
        Self { n, m, seed: None, config_echo: None, initial: None, steps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Appends a step; indices must continue contiguously from 1.
    pub fn push(&mut self, step: TrajectoryStep) -> Result<()> {
        let expected = self.steps.len() + 1;
        if step.k != expected {
            return Err(Error::Invalid(format!("trajectory step {} follows step {}", step.k, expected - 1)));
        }
        let (n, m) = (self.n, self.m);
        let ok = step.phi.len() == n
            && step.theta_hat.len() == n
            && [step.y.len(), step.eps.len(), step.r.len(), step.xq.len()].iter().all(|&l| l == n)
            && step.phi.iter().chain(&step.theta_hat).all(|v| v.len() == m);
        if !ok {
            return Err(Error::Dimension(format!("trajectory step {} does not match n = {n}, m = {m}", step.k)));
        }
        self.steps.push(step);
        Ok(())
    }

    /// Stacked errors `Theta - Theta_hat_k` for every recorded step.
    pub fn errors(&self, theta: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        if theta.len() != self.m {
            return Err(Error::Dimension(format!("true parameter has length {}, expected {}", theta.len(), self.m)));
        }
        let truth = stack(&vec![theta.clone(); self.n]);
        Ok(self.steps.iter().map(|s| &truth - stack(&s.theta_hat)).collect())
    }

    /// Regressor rows suitable for [`RegressorStream::replay`](crate::signals::RegressorStream::replay).
    pub fn regressor_rows(&self) -> Vec<Vec<DVector<f64>>> {
        self.steps.iter().map(|s| s.phi.clone()).collect()
    }

    pub fn header(m: usize) -> Vec<String> {
        let mut cols = vec!["k".to_string(), "i".to_string()];
        cols.extend((1..=m).map(|j| format!("phi_{j}")));
        cols.extend(["y", "eps", "r", "xQ"].map(String::from));
        cols.extend((1..=m).map(|j| format!("theta_hat_{j}")));
        cols
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(Self::header(self.m))?;
        let mut row = Vec::with_capacity(2 * self.m + 6);
        for s in &self.steps {
            for i in 0..self.n {
                row.clear();
                row.push(s.k.to_string());
                row.push((i + 1).to_string());
                row.extend(s.phi[i].iter().map(|&v| full_precision(v)));
                row.extend([s.y[i], s.eps[i], s.r[i], s.xq[i]].map(full_precision));
                row.extend(s.theta_hat[i].iter().map(|&v| full_precision(v)));
                wtr.write_record(&row)?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|source| Error::Csv { path: path.to_path_buf(), source })
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Parse(format!("trajectory header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        let m = header.iter().filter(|h| h.starts_with("phi_")).count();
        if m == 0 || header != Self::header(m) {
            return Err(Error::Parse(format!("unexpected trajectory header `{}`", header.join(","))));
        }

        let mut record = Self::new(0, m);
        let mut current: Option<TrajectoryStep> = None;
        let mut n_seen: Option<usize> = None;
        for (line, row) in rdr.records().enumerate() {
            let row = row.map_err(|e| Error::Parse(format!("trajectory row {}: {e}", line + 2)))?;
            let field = |idx: usize| -> Result<f64> {
                row.get(idx)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Parse(format!("trajectory row {}, column {}", line + 2, idx + 1)))
            };
            let index = |idx: usize| -> Result<usize> {
                row.get(idx)
                    .and_then(|s| s.trim().parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse(format!("trajectory row {}, column {}", line + 2, idx + 1)))
            };
            let (k, i) = (index(0)?, index(1)?);
            if current.as_ref().is_some_and(|s| s.k != k) {
                let done = current.take().unwrap();
                match n_seen {
                    None => n_seen = Some(done.phi.len()),
                    Some(n) if n != done.phi.len() => {
                        return Err(Error::Parse(format!("step {} has {} sensors, expected {n}", done.k, done.phi.len())))
                    }
                    _ => {}
                }
                record.n = done.phi.len();
                record.push(done)?;
            }
            let step = current.get_or_insert_with(|| TrajectoryStep {
                k,
                phi: Vec::new(),
                y: Vec::new(),
                eps: Vec::new(),
                r: Vec::new(),
                xq: Vec::new(),
                theta_hat: Vec::new(),
            });
            if i != step.phi.len() + 1 {
                return Err(Error::Parse(format!("step {k}: sensor {i} out of order")));
            }
            step.phi.push(DVector::from_iterator(m, (2..2 + m).map(&field).collect::<Result<Vec<_>>>()?));
            step.y.push(field(2 + m)?);
            step.eps.push(field(3 + m)?);
            step.r.push(field(4 + m)?);
            step.xq.push(field(5 + m)?);
            step.theta_hat
                .push(DVector::from_iterator(m, (6 + m..6 + 2 * m).map(&field).collect::<Result<Vec<_>>>()?));
        }
        if let Some(done) = current {
            if n_seen.is_some_and(|n| n != done.phi.len()) {
                return Err(Error::Parse(format!("step {} has {} sensors", done.k, done.phi.len())));
            }
            record.n = done.phi.len();
            record.push(done)?;
        }
        if record.is_empty() {
            return Err(Error::Parse("trajectory has no rows".into()));
        }
        Ok(record)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TrajectoryRecord {
        let mut t = TrajectoryRecord::new(2, 2);
        for k in 1..=3 {
            let f = k as f64;
            t.push(TrajectoryStep {
                k,
                phi: vec![DVector::from_vec(vec![f, 0.1 / f]), DVector::from_vec(vec![-f, 1e95 * f])],
                y: vec![0.5 * f, -1.0 / 3.0],
                eps: vec![1e-9, 0.0],
                r: vec![1.0 + f, 2.0 + f],
                xq: vec![0.3, 0.25],
                theta_hat: vec![DVector::from_vec(vec![0.1, 0.2]), DVector::from_vec(vec![f.sqrt(), -2.0])],
            })
            .unwrap();
        }
        t
    }

    #[test]
    fn header_layout() {
        assert_eq!(
            TrajectoryRecord::header(2).join(","),
            "k,i,phi_1,phi_2,y,eps,r,xQ,theta_hat_1,theta_hat_2"
        );
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = sample();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = TrajectoryRecord::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.steps, t.steps);
        assert_eq!((back.n, back.m), (2, 2));
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 3 * 2);
    }

    #[test]
    fn contiguity_enforced() {
        let mut t = sample();
        let mut step = t.steps[0].clone();
        step.k = 7;
        assert!(t.push(step).is_err());
    }

    #[test]
    fn bad_header_rejected() {
        assert!(TrajectoryRecord::read_csv("k,i,y\n1,1,0\n".as_bytes()).is_err());
        assert!(TrajectoryRecord::read_csv("".as_bytes()).is_err());
    }

    #[test]
    fn errors_against_truth() {
        let t = sample();
        let e = t.errors(&DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(e[0].as_slice(), &[0.9, 0.8, 0.0, 3.0]);
    }
}
