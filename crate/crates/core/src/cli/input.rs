use thiserror::Error;

use crate::numeric::ExactReal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: cannot parse {text:?}: {reason}")]
pub struct InputError {
    /// 1-based line number in the file.
    pub line: usize,
    pub text: String,
    pub reason: String,
}

/// Parsed input: one value per non-comment line, in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InputFile {
    /// Value text exactly as written, without surrounding whitespace.
    pub lines: Vec<String>,
    pub values: Vec<ExactReal>,
}

impl InputFile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Parses `p/q` and decimal lines. Blank lines and lines starting with `#`
/// are skipped.
pub fn parse_input(text: &str) -> Result<InputFile, InputError> {
    let mut file = InputFile::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let value = line.parse::<ExactReal>().map_err(|e| InputError {
            line: i + 1,
            text: line.to_string(),
            reason: e.to_string(),
        })?;
        file.lines.push(line.to_string());
        file.values.push(value);
    }
    Ok(file)
}
