//! Stochastic SI epidemic with removals, simulated exactly.
//!
//! Infection happens at rate `beta * S * I` and removal at rate `gamma * I`.
//! The recorded series is `S + I` at integer days, i.e. the number of
//! individuals not yet removed.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::Simulator;
use crate::error::{Error, Result};
use crate::rng::NoiseSeed;
use crate::types::{SummaryKind, SummaryStatistic};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiConfig {
    pub beta: f64,
    pub gamma: f64,
    pub s0: u32,
    pub i0: u32,
    pub t_end: f64,
}

impl Default for SiConfig {
    fn default() -> Self {
        Self {
            beta: 0.001,
            gamma: 0.1,
            s0: 118,
            i0: 1,
            t_end: 76.0,
        }
    }
}

impl SiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) || !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "rates must be finite and non-negative (beta={}, gamma={})",
                self.beta, self.gamma
            )));
        }
        if self.s0 + self.i0 == 0 {
            return Err(Error::InvalidConfig("empty population".into()));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::InvalidConfig("t_end must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Infection,
    Removal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicPath {
    /// `S + I` at days `0..=floor(t_end)`.
    pub daily_obs: Vec<u32>,
    pub event_times: Vec<f64>,
    pub event_types: Vec<EventKind>,
    pub s0: u32,
    pub i0: u32,
}

impl EpidemicPath {
    /// Builds the daily series from an event list sorted by time.
    pub fn from_events(
        s0: u32,
        i0: u32,
        t_end: f64,
        event_times: Vec<f64>,
        event_types: Vec<EventKind>,
    ) -> Self {
        let days = t_end.floor() as usize;
        let mut daily_obs = Vec::with_capacity(days + 1);
        let mut remaining = s0 + i0;
        let mut k = 0;
        for day in 0..=days {
            while k < event_times.len() && event_times[k] <= day as f64 {
                if event_types[k] == EventKind::Removal {
                    remaining -= 1;
                }
                k += 1;
            }
            daily_obs.push(remaining);
        }
        Self {
            daily_obs,
            event_times,
            event_types,
            s0,
            i0,
        }
    }

    pub fn population(&self) -> u32 {
        self.s0 + self.i0
    }

    pub fn removals(&self) -> u32 {
        self.population() - self.daily_obs.last().copied().unwrap_or(self.population())
    }

    /// Writes `day,obs` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["day", "obs"])?;
        for (day, obs) in self.daily_obs.iter().enumerate() {
            w.write_record([day.to_string(), obs.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Exact event-driven simulation up to `cfg.t_end`.
pub fn simulate_si(cfg: &SiConfig, xi: NoiseSeed) -> EpidemicPath {
    let mut rng = xi.rng();
    let (mut s, mut i) = (cfg.s0, cfg.i0);
    let mut t = 0.0;
    let mut times = Vec::new();
    let mut kinds = Vec::new();
    loop {
        let infection = cfg.beta * s as f64 * i as f64;
        let removal = cfg.gamma * i as f64;
        let total = infection + removal;
        if !(total > 0.0) {
            break;
        }
        let wait: f64 = Exp1.sample(&mut rng);
        t += wait / total;
        if t > cfg.t_end {
            break;
        }
        if rng.random::<f64>() * total < infection {
            s -= 1;
            i += 1;
            kinds.push(EventKind::Infection);
        } else {
            i -= 1;
            kinds.push(EventKind::Removal);
        }
        times.push(t);
    }
    EpidemicPath::from_events(cfg.s0, cfg.i0, cfg.t_end, times, kinds)
}

/// The final recorded value as a one-dimensional simple summary.
pub fn final_observation_summary(path: &EpidemicPath) -> Result<SummaryStatistic> {
    let last = *path.daily_obs.last().ok_or(Error::Empty("epidemic path"))?;
    SummaryStatistic::new(vec![last as f64], SummaryKind::Simple)
}

/// SI simulator parameterised by `θ = (ln beta, ln gamma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiModel {
    pub s0: u32,
    pub i0: u32,
    pub t_end: f64,
}

impl Default for SiModel {
    fn default() -> Self {
        let c = SiConfig::default();
        Self {
            s0: c.s0,
            i0: c.i0,
            t_end: c.t_end,
        }
    }
}

impl SiModel {
    pub fn config(&self, theta: &[f64]) -> SiConfig {
        SiConfig {
            beta: theta[0].exp(),
            gamma: theta[1].exp(),
            s0: self.s0,
            i0: self.i0,
            t_end: self.t_end,
        }
    }
}

impl Simulator for SiModel {
    type Output = EpidemicPath;

    fn dim(&self) -> usize {
        2
    }

    fn simulate(&self, theta: &[f64], xi: NoiseSeed) -> EpidemicPath {
        simulate_si(&self.config(theta), xi)
    }
}
