//! Scenario scripts: line-oriented external stimuli for a simulation.
//!
//! Format: `tick instance port message arg1,arg2,...` — one injection per
//! line, whitespace-separated, the final args field comma-separated and
//! optional. `#` starts a comment; blank lines are skipped. Injections must
//! be sorted by tick.

#[derive(Debug, Clone, PartialEq)]
pub struct Injection {
    pub tick: u64,
    pub instance: String,
    pub port: String,
    pub message: String,
    /// Raw argument texts; coerced against the message signature at setup.
    pub args: Vec<String>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: expected 'tick instance port message [args]', got {got:?}")]
    Malformed { line: usize, got: String },
    #[error("line {line}: tick {tick} is smaller than the previous line's tick")]
    OutOfOrder { line: usize, tick: u64 },
}

pub fn parse_scenario(text: &str) -> Result<Vec<Injection>, ScenarioError> {
    let mut out: Vec<Injection> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() < 4 || fields.len() > 5 {
            return Err(ScenarioError::Malformed { line, got: content.to_string() });
        }
        let tick: u64 = fields[0]
            .parse()
            .map_err(|_| ScenarioError::Malformed { line, got: content.to_string() })?;
        if let Some(prev) = out.last() {
            if tick < prev.tick {
                return Err(ScenarioError::OutOfOrder { line, tick });
            }
        }
        let args = match fields.get(4) {
            Some(a) => a.split(',').map(|s| s.to_string()).collect(),
            None => Vec::new(),
        };
        out.push(Injection {
            tick,
            instance: fields[1].to_string(),
            port: fields[2].to_string(),
            message: fields[3].to_string(),
            args,
        });
    }
    Ok(out)
}
