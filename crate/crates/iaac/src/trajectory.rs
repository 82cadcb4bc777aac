//! Rollout records.
//!
//! A [`Trajectory`] stores one episode as parallel per-step feature vectors.
//! Step `t` holds the observation seen before acting, the privileged
//! information and ground state at that moment, the action taken, and the
//! reward received. The observation/information/state reached *after* the
//! last action is kept separately in `last`, so value bootstrapping at a
//! truncation point has its input available.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub state: Vec<f64>,
    pub info: Vec<f64>,
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    /// Ground-state index when the environment is tabular.
    pub state_index: Option<usize>,
}

/// The point reached after the final action of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalPoint {
    pub state: Vec<f64>,
    pub info: Vec<f64>,
    pub obs: Vec<f64>,
    pub state_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    /// Present unless the source had no post-episode point (e.g. CSV import).
    pub last: Option<FinalPoint>,
    /// The episode ended in a terminal state (bootstrap value is zero there).
    pub terminated: bool,
    /// The episode was cut by the step cap rather than by a terminal state.
    pub truncated: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Undiscounted episode return.
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    /// Discounted return from the start of the episode.
    pub fn discounted_return(&self, gamma: f64) -> f64 {
        self.returns_to_go(gamma).first().copied().unwrap_or(0.0)
    }

    /// G_t = sum_{j>=t} gamma^(j-t) r_j for every step, by a reverse sweep.
    pub fn returns_to_go(&self, gamma: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.steps.len()];
        let mut acc = 0.0;
        for t in (0..self.steps.len()).rev() {
            acc = self.steps[t].reward + gamma * acc;
            out[t] = acc;
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cannot export an empty trajectory set")]
    Empty,
    #[error("trajectory {index} has feature widths differing from the first")]
    MixedWidths { index: usize },
}

/// Writes episodes as CSV with one row per step.
///
/// The header declares feature widths by repeating column groups:
/// `episode,t,state_0..state_{k-1},info_0..,obs_0..,action,reward`.
/// The post-episode point and termination flags are not representable in
/// this layout; readers get `last: None` and both flags false.
pub fn write_csv<W: Write>(mut out: W, episodes: &[Trajectory]) -> Result<(), CsvError> {
    let first = episodes
        .iter()
        .find(|e| !e.is_empty())
        .ok_or(CsvError::Empty)?;
    let (sd, id, od) = widths(first);
    for (i, ep) in episodes.iter().enumerate() {
        if !ep.is_empty() && widths(ep) != (sd, id, od) {
            return Err(CsvError::MixedWidths { index: i });
        }
    }
    let mut header = String::from("episode,t");
    for j in 0..sd {
        header.push_str(&format!(",state_{j}"));
    }
    for j in 0..id {
        header.push_str(&format!(",info_{j}"));
    }
    for j in 0..od {
        header.push_str(&format!(",obs_{j}"));
    }
    header.push_str(",action,reward");
    writeln!(out, "{header}")?;
    for (e, ep) in episodes.iter().enumerate() {
        for (t, s) in ep.steps.iter().enumerate() {
            let mut row = format!("{e},{t}");
            for v in s.state.iter().chain(&s.info).chain(&s.obs) {
                row.push_str(&format!(",{v}"));
            }
            row.push_str(&format!(",{},{}", s.action, s.reward));
            writeln!(out, "{row}")?;
        }
    }
    Ok(())
}

/// Reads episodes written by [`write_csv`]. Rows must be grouped by episode
/// and ordered by `t` within each group.
pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<Trajectory>, CsvError> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or(CsvError::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let header = header?;
    let cols: Vec<&str> = header.trim_end().split(',').collect();
    let sd = cols.iter().filter(|c| c.starts_with("state_")).count();
    let id = cols.iter().filter(|c| c.starts_with("info_")).count();
    let od = cols.iter().filter(|c| c.starts_with("obs_")).count();
    let expected = 2 + sd + id + od + 2;
    if cols.len() != expected
        || cols.first() != Some(&"episode")
        || cols.last() != Some(&"reward")
    {
        return Err(CsvError::Parse {
            line: 1,
            msg: format!("unrecognised header: {header}"),
        });
    }

    let mut episodes: Vec<Trajectory> = Vec::new();
    let mut current: Option<usize> = None;
    for (lineno, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != expected {
            return Err(CsvError::Parse {
                line: lineno + 1,
                msg: format!("expected {expected} fields, got {}", fields.len()),
            });
        }
        let mut it = fields.iter();
        let ep: usize = parse(it.next().unwrap(), lineno)?;
        let t: usize = parse(it.next().unwrap(), lineno)?;
        let mut take = |n: usize| -> Result<Vec<f64>, CsvError> {
            (0..n).map(|_| parse(it.next().unwrap(), lineno)).collect()
        };
        let state = take(sd)?;
        let info = take(id)?;
        let obs = take(od)?;
        let action: usize = parse(it.next().unwrap(), lineno)?;
        let reward: f64 = parse(it.next().unwrap(), lineno)?;

        if current != Some(ep) {
            if ep != episodes.len() {
                return Err(CsvError::Parse {
                    line: lineno + 1,
                    msg: format!("episode index {ep} out of order"),
                });
            }
            episodes.push(Trajectory {
                steps: Vec::new(),
                last: None,
                terminated: false,
                truncated: false,
            });
            current = Some(ep);
        }
        let traj = episodes.last_mut().unwrap();
        if t != traj.steps.len() {
            return Err(CsvError::Parse {
                line: lineno + 1,
                msg: format!("step index {t} out of order"),
            });
        }
        traj.steps.push(Step {
            state,
            info,
            obs,
            action,
            reward,
            state_index: None,
        });
    }
    Ok(episodes)
}

fn widths(t: &Trajectory) -> (usize, usize, usize) {
    let s = &t.steps[0];
    (s.state.len(), s.info.len(), s.obs.len())
}

fn parse<T: std::str::FromStr>(s: &str, lineno: usize) -> Result<T, CsvError> {
    s.parse().map_err(|_| CsvError::Parse {
        line: lineno + 1,
        msg: format!("bad field: {s}"),
    })
}
