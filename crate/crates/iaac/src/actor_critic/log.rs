use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::trajectory::CsvError;

/// One row per gradient update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub update_index: u64,
    pub env_steps: u64,
    pub rolling_return_100: f64,
    pub actor_loss: f64,
    pub critic_loss: f64,
    pub entropy_weight: f64,
}

pub const LOG_HEADER: &str =
    "update_index,env_steps,rolling_return_100,actor_loss,critic_loss,entropy_weight";

/// One CSV line, no newline. Shortest-roundtrip float formatting, so a
/// parsed row is bit-identical to the written one.
pub fn format_log_row(r: &LogRow) -> String {
    format!(
        "{},{},{},{},{},{}",
        r.update_index,
        r.env_steps,
        r.rolling_return_100,
        r.actor_loss,
        r.critic_loss,
        r.entropy_weight
    )
}

pub fn write_log_csv(rows: &[LogRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{LOG_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", format_log_row(r))?;
    }
    Ok(())
}

pub fn read_log_csv(r: impl BufRead) -> Result<Vec<LogRow>, CsvError> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines.next().ok_or(CsvError::Empty)?;
    let header = header?;
    if header.trim() != LOG_HEADER {
        return Err(CsvError::Parse {
            line: 1,
            msg: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 6 {
            return Err(CsvError::Parse {
                line: idx + 1,
                msg: format!("expected 6 fields, got {}", parts.len()),
            });
        }
        let parse_u = |s: &str| {
            s.trim().parse::<u64>().map_err(|e| CsvError::Parse {
                line: idx + 1,
                msg: e.to_string(),
            })
        };
        let parse_f = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| CsvError::Parse {
                line: idx + 1,
                msg: e.to_string(),
            })
        };
        rows.push(LogRow {
            update_index: parse_u(parts[0])?,
            env_steps: parse_u(parts[1])?,
            rolling_return_100: parse_f(parts[2])?,
            actor_loss: parse_f(parts[3])?,
            critic_loss: parse_f(parts[4])?,
            entropy_weight: parse_f(parts[5])?,
        });
    }
    Ok(rows)
}
