//! `conekit convert` — translate one annotation file between formats.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use conekit::formats::{convert, FormatId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// JSON with rectangle/polygon geometries, size, tags, and metadata.
    Supervisely,
    /// One normalized `class cx cy w h` line per box.
    Yolo,
    /// XML with 1-based inclusive integer pixel corners.
    Voc,
    /// Labelbox-style export JSON (read only).
    Labelbox,
}

impl Format {
    fn id(self) -> FormatId {
        match self {
            Format::Supervisely => FormatId::SuperviselyLike,
            Format::Yolo => FormatId::DarknetYolo,
            Format::Voc => FormatId::PascalVoc,
            Format::Labelbox => FormatId::Labelbox,
        }
    }
}

#[derive(Args)]
#[command(after_help = "Config keys: none. Supported directions: \
yolo->supervisely, labelbox->supervisely, supervisely->yolo, \
supervisely->voc; anything else is rejected before parsing.")]
pub struct ConvertArgs {
    /// Annotation file to convert.
    pub input: PathBuf,
    /// Format of the input file.
    #[arg(long, value_enum)]
    pub from: Format,
    /// Format to produce.
    #[arg(long, value_enum)]
    pub to: Format,
    /// Output file; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Image width in pixels, for input formats that do not carry it.
    #[arg(long, requires = "height", value_name = "PX")]
    pub width: Option<u32>,
    /// Image height in pixels, for input formats that do not carry it.
    #[arg(long, requires = "width", value_name = "PX")]
    pub height: Option<u32>,
}

pub fn run(args: &ConvertArgs) -> Result<u8> {
    let bytes = fs::read(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let dims = args.width.zip(args.height);
    let converted = convert(args.from.id(), args.to.id(), &bytes, dims)
        .with_context(|| format!("converting {}", args.input.display()))?;

    match &args.output {
        Some(path) => fs::write(path, &converted)
            .with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout()
            .write_all(&converted)
            .context("writing to stdout")?,
    }
    eprintln!(
        "converted {} ({} bytes in, {} bytes out)",
        args.input.display(),
        bytes.len(),
        converted.len()
    );
    Ok(0)
}
