//! Report envelope: every command wraps its payload with tool identity,
//! an optional timestamp, and the effective configuration, so a report
//! alone is enough to reproduce the run.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::ToolConfig;

#[derive(Serialize)]
struct ToolInfo<'a> {
    name: &'static str,
    version: &'static str,
    command: &'a str,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: ToolInfo<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at: Option<String>,
    config: &'a ToolConfig,
    report: T,
}

/// Renders the envelope as pretty JSON with a trailing newline.
pub fn render<T: Serialize>(command: &str, config: &ToolConfig, report: T) -> Result<String> {
    let envelope = Envelope {
        tool: ToolInfo {
            name: "conekit",
            version: env!("CARGO_PKG_VERSION"),
            command,
        },
        generated_at: config
            .output
            .timestamp
            .then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
        config,
        report,
    };
    let mut text = serde_json::to_string_pretty(&envelope).context("serializing report")?;
    text.push('\n');
    Ok(text)
}

/// Provenance header for CSV output, as `#` comment lines.
pub fn csv_header(command: &str, config: &ToolConfig) -> String {
    let mut header = format!("# conekit {} {command}\n", env!("CARGO_PKG_VERSION"));
    if config.output.timestamp {
        header.push_str(&format!(
            "# generated_at: {}\n",
            chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
        ));
    }
    header.push_str(&format!(
        "# config: {}\n",
        serde_json::to_string(config).expect("config serializes")
    ));
    header
}

/// Writes report text to a file, or to stdout when no path is given.
pub fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing report to {}", path.display())),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .context("writing report to stdout")?;
            Ok(())
        }
    }
}
