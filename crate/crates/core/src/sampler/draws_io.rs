//! Columnar CSV for posterior draws:
//! `chain,iter,beta0,beta.<name>...,gamma,tau,tau_e,u.1..u.T`.

use std::io::{Read, Write};

use super::{Draw, ModelState, PosteriorDraws};
use crate::error::{Error, Result};

pub fn write_draws_csv<W: Write>(draws: &PosteriorDraws, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["chain".to_string(), "iter".to_string()];
    header.extend(draws.parameter_names());
    w.write_record(&header)?;
    let mut rec: Vec<String> = Vec::with_capacity(header.len());
    for d in &draws.draws {
        rec.clear();
        rec.push(d.chain.to_string());
        rec.push(d.iteration.to_string());
        rec.extend(d.state.coefficients.iter().map(f64::to_string));
        rec.push(d.state.tau.to_string());
        rec.push(d.state.tau_e.to_string());
        rec.extend(d.state.u.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::IncompatibleDraws(msg.into())
}

pub fn read_draws_csv<R: Read>(reader: R) -> Result<PosteriorDraws> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.len() < 5 || header[0] != "chain" || header[1] != "iter" {
        return Err(bad("draws header must start with chain,iter"));
    }
    let tau_col = header
        .iter()
        .position(|h| h == "tau")
        .ok_or_else(|| bad("missing tau column"))?;
    if header.get(tau_col + 1).map(String::as_str) != Some("tau_e") {
        return Err(bad("tau_e must follow tau"));
    }
    let coefficient_names = header[2..tau_col].to_vec();
    if coefficient_names.first().map(String::as_str) != Some("beta0") {
        return Err(bad("first coefficient must be beta0"));
    }
    let u_names = &header[tau_col + 2..];
    for (i, name) in u_names.iter().enumerate() {
        if *name != format!("u.{}", i + 1) {
            return Err(bad(format!("unexpected column {name:?}")));
        }
    }
    let field_len = u_names.len();
    let k = coefficient_names.len();

    let mut draws = Vec::new();
    let mut chains = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| bad(format!("line {line}: bad number in column {}", header[i])))
        };
        let idx = |i: usize| -> Result<usize> {
            rec[i]
                .parse::<usize>()
                .map_err(|_| bad(format!("line {line}: bad integer in column {}", header[i])))
        };
        let chain = idx(0)?;
        chains = chains.max(chain + 1);
        let state = ModelState {
            coefficients: (2..2 + k).map(num).collect::<Result<_>>()?,
            tau: num(tau_col)?,
            tau_e: num(tau_col + 1)?,
            u: (tau_col + 2..tau_col + 2 + field_len)
                .map(num)
                .collect::<Result<_>>()?,
        };
        draws.push(Draw {
            chain,
            iteration: idx(1)?,
            state,
        });
    }
    if draws.is_empty() {
        return Err(bad("no draws"));
    }
    Ok(PosteriorDraws {
        coefficient_names,
        field_len,
        chains,
        draws,
        acceptance_rate: 1.0,
    })
}
