use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

pub fn build_id() -> String {
    let profile = if cfg!(debug_assertions) {
        "debug"
    } else {
        "release"
    };
    format!(
        "{} {} {profile}",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION")
    )
}

/// Comment header: command, build id, then one `key=value` per line.
pub struct Header {
    text: String,
}

impl Header {
    pub fn new(command: &str) -> Self {
        Self {
            text: format!("# trapwalk {command}\n# build: {}\n", build_id()),
        }
    }

    pub fn field(mut self, key: &str, value: impl Display) -> Self {
        self.text.push_str(&format!("# {key}={value}\n"));
        self
    }

    pub fn opt<T: Display>(self, key: &str, value: Option<T>) -> Self {
        match value {
            Some(v) => self.field(key, v),
            None => self.field(key, "-"),
        }
    }

    pub fn list<T: Display>(self, key: &str, values: &[T]) -> Self {
        let joined = values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        self.field(key, joined)
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Writes to `path`, or stdout when `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .context("writing to stdout")?;
            out.flush().context("writing to stdout")
        }
    }
}
