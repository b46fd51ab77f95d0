//! Per-episode training metrics as CSV.

use std::io::{Read, Write};

use acr_core::EpisodeMetrics;

use crate::HarnessError;

pub fn header(agents: usize) -> Vec<String> {
    let mut h: Vec<String> = ["episode", "scheme", "total_reward_mean"].map(String::from).into();
    h.extend((0..agents).map(|m| format!("total_reward_agent{m}")));
    h.extend(["critic_loss", "epsilon", "support_rate_mean", "omega_mean"].map(String::from));
    h
}

/// Row of [`header`]. Floats use the shortest exact decimal form; a missing
/// critic loss is an empty field.
pub fn row(m: &EpisodeMetrics) -> Vec<String> {
    let mut r = vec![m.episode.to_string(), m.scheme.to_string(), m.total_reward_mean.to_string()];
    r.extend(m.total_reward.iter().map(f64::to_string));
    r.push(m.critic_loss.map_or_else(String::new, |l| l.to_string()));
    r.push(m.epsilon.to_string());
    r.push(m.support_rate_mean.to_string());
    r.push(m.omega_mean.to_string());
    r
}

pub struct MetricsWriter<W: Write> {
    inner: csv::Writer<W>,
    agents: usize,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(w: W, agents: usize) -> Result<Self, HarnessError> {
        let mut inner = csv::Writer::from_writer(w);
        inner.write_record(header(agents))?;
        Ok(Self { inner, agents })
    }

    pub fn write(&mut self, m: &EpisodeMetrics) -> Result<(), HarnessError> {
        if m.total_reward.len() != self.agents {
            return Err(HarnessError::Config(format!(
                "metrics row has {} agents, header has {}",
                m.total_reward.len(),
                self.agents
            )));
        }
        self.inner.write_record(row(m))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, HarnessError> {
        self.inner.flush().map_err(|e| HarnessError::io("<metrics>", e))?;
        self.inner
            .into_inner()
            .map_err(|e| HarnessError::io("<metrics>", e.into_error()))
    }
}

/// Parse a metrics CSV back into `(header, rows)`.
pub fn read_metrics<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<String>>), HarnessError> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()?;
    Ok((header, rows))
}
