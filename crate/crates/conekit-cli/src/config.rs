//! Effective tool configuration: built-in defaults, overlaid by an
//! optional TOML file, overlaid by `CONEKIT_<SECTION>_<KEY>` environment
//! variables. Individual command-line flags override single values on
//! top of that. Unknown sections or keys are hard errors, so typos
//! cannot silently fall back to defaults.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use conekit::imaging::render::RenderStyle;
use conekit::quality::contribution::ContributionConfig;
use conekit::quality::exam::ExamConfig;
use conekit::quality::sanity::SanityConfig;
use conekit::similarity::extract::ExtractConfig;
use conekit::similarity::MatrixConfig;
use conekit::stats::StatsConfig;

pub const ENV_PREFIX: &str = "CONEKIT_";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub similarity: SimilaritySection,
    pub extract: ExtractSection,
    pub exam: ExamSection,
    pub sanity: SanitySection,
    pub contribution: ContributionSection,
    pub layout: LayoutSection,
    pub stats: StatsSection,
    pub eval: EvalSection,
    pub crop: CropSection,
    pub viz: VizSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilaritySection {
    /// Thresholds reported by `similarity score`.
    pub thresholds: Vec<f64>,
    /// Threshold used by `similarity sample`.
    pub sample_threshold: f64,
    /// Full-matrix memory cap; scoring switches to the streaming path
    /// above it with identical results.
    pub max_matrix_bytes: u64,
}

impl Default for SimilaritySection {
    fn default() -> Self {
        let matrix = MatrixConfig::default();
        SimilaritySection {
            thresholds: vec![0.95, 0.98, 0.99],
            sample_threshold: 0.99,
            max_matrix_bytes: matrix.max_matrix_bytes,
        }
    }
}

impl SimilaritySection {
    pub fn matrix(&self) -> MatrixConfig {
        MatrixConfig {
            max_matrix_bytes: self.max_matrix_bytes,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSection {
    pub resized_side: u32,
    pub grid: u32,
    pub orientation_bins: usize,
}

impl Default for ExtractSection {
    fn default() -> Self {
        let config = ExtractConfig::default();
        ExtractSection {
            resized_side: config.resized_side,
            grid: config.grid,
            orientation_bins: config.orientation_bins,
        }
    }
}

impl ExtractSection {
    pub fn to_config(&self) -> ExtractConfig {
        ExtractConfig {
            resized_side: self.resized_side,
            grid: self.grid,
            orientation_bins: self.orientation_bins,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExamSection {
    pub match_iou: f64,
    pub min_recall: f64,
    pub min_precision: f64,
    pub min_mean_iou: f64,
}

impl Default for ExamSection {
    fn default() -> Self {
        let config = ExamConfig::default();
        ExamSection {
            match_iou: config.match_iou,
            min_recall: config.min_recall,
            min_precision: config.min_precision,
            min_mean_iou: config.min_mean_iou,
        }
    }
}

impl ExamSection {
    pub fn to_config(&self) -> ExamConfig {
        ExamConfig {
            match_iou: self.match_iou,
            min_recall: self.min_recall,
            min_precision: self.min_precision,
            min_mean_iou: self.min_mean_iou,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SanitySection {
    pub min_box_area: f64,
    pub min_box_side: f64,
    pub duplicate_iou: f64,
}

impl Default for SanitySection {
    fn default() -> Self {
        let config = SanityConfig::default();
        SanitySection {
            min_box_area: config.min_box_area,
            min_box_side: config.min_box_side,
            duplicate_iou: config.duplicate_iou,
        }
    }
}

impl SanitySection {
    pub fn to_config(&self) -> SanityConfig {
        SanityConfig {
            min_box_area: self.min_box_area,
            min_box_side: self.min_box_side,
            duplicate_iou: self.duplicate_iou,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContributionSection {
    pub min_onboard_ratio: f64,
    pub duplicate_threshold: f64,
    pub max_duplicate_score: f64,
}

impl Default for ContributionSection {
    fn default() -> Self {
        let config = ContributionConfig::default();
        ContributionSection {
            min_onboard_ratio: config.min_onboard_ratio,
            duplicate_threshold: config.duplicate_threshold,
            max_duplicate_score: config.max_duplicate_score,
        }
    }
}

impl ContributionSection {
    pub fn to_config(&self, matrix: MatrixConfig) -> ContributionConfig {
        ContributionConfig {
            min_onboard_ratio: self.min_onboard_ratio,
            duplicate_threshold: self.duplicate_threshold,
            max_duplicate_score: self.max_duplicate_score,
            matrix,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutSection {
    pub image_dir: String,
    pub annotation_dir: String,
}

impl Default for LayoutSection {
    fn default() -> Self {
        let config = conekit::formats::layout::LayoutConfig::default();
        LayoutSection {
            image_dir: config.image_dir,
            annotation_dir: config.annotation_dir,
        }
    }
}

impl LayoutSection {
    pub fn to_config(&self) -> conekit::formats::layout::LayoutConfig {
        conekit::formats::layout::LayoutConfig {
            image_dir: self.image_dir.clone(),
            annotation_dir: self.annotation_dir.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSection {
    pub include_other: bool,
    pub combination_min_fraction: f64,
}

impl Default for StatsSection {
    fn default() -> Self {
        let config = StatsConfig::default();
        StatsSection {
            include_other: config.include_other,
            combination_min_fraction: config.combination_min_fraction,
        }
    }
}

impl StatsSection {
    pub fn to_config(&self) -> StatsConfig {
        StatsConfig {
            include_other: self.include_other,
            combination_min_fraction: self.combination_min_fraction,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// IoU thresholds for `eval ap`; empty means the standard
    /// 0.50..0.90 sweep in steps of 0.05.
    pub iou_thresholds: Vec<f64>,
    /// `class_agnostic` or `per_class`.
    pub mode: String,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            iou_thresholds: Vec::new(),
            mode: "class_agnostic".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CropSection {
    /// Watermark border width removed from every side.
    pub border: u32,
}

impl Default for CropSection {
    fn default() -> Self {
        CropSection { border: 140 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VizSection {
    pub thickness: u32,
    pub mask_alpha: f64,
}

impl Default for VizSection {
    fn default() -> Self {
        let style = RenderStyle::default();
        VizSection {
            thickness: style.thickness,
            mask_alpha: style.mask_alpha,
        }
    }
}

impl VizSection {
    pub fn to_style(&self) -> RenderStyle {
        RenderStyle {
            thickness: self.thickness,
            mask_alpha: self.mask_alpha,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Include the `generated_at` header field in reports.
    pub timestamp: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { timestamp: true }
    }
}

/// Loads the effective configuration: defaults, then the file, then
/// environment overrides.
pub fn load_config(
    path: Option<&Path>,
    env_vars: impl Iterator<Item = (String, String)>,
) -> Result<ToolConfig> {
    let mut table = toml::Table::try_from(ToolConfig::default())
        .context("serializing built-in defaults")?;

    if let Some(path) = path {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let file: toml::Table = text
            .parse()
            .with_context(|| format!("parsing config file {}", path.display()))?;
        merge_tables(&mut table, file, "")?;
    }

    apply_env_overrides(&mut table, env_vars)?;

    let config: ToolConfig = table.try_into().context("validating configuration")?;
    Ok(config)
}

/// Recursively merges `incoming` into `target`, rejecting keys that the
/// defaults do not define.
fn merge_tables(target: &mut toml::Table, incoming: toml::Table, prefix: &str) -> Result<()> {
    for (key, value) in incoming {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match target.get_mut(&key) {
            None => bail!("unknown config key `{path}`"),
            Some(slot) => match (slot, value) {
                (toml::Value::Table(t), toml::Value::Table(v)) => merge_tables(t, v, &path)?,
                (slot, value) => *slot = value,
            },
        }
    }
    Ok(())
}

/// Applies `CONEKIT_<SECTION>_<KEY>=<value>` variables. Values are parsed
/// as TOML (so numbers, booleans, and arrays work) and fall back to plain
/// strings.
fn apply_env_overrides(
    table: &mut toml::Table,
    env_vars: impl Iterator<Item = (String, String)>,
) -> Result<()> {
    let mut overrides: Vec<(String, String)> = env_vars
        .filter_map(|(name, value)| {
            name.strip_prefix(ENV_PREFIX)
                .map(|rest| (rest.to_string(), value))
        })
        .collect();
    overrides.sort();

    for (rest, raw) in overrides {
        let Some((section, key)) = rest.split_once('_') else {
            bail!("environment variable {ENV_PREFIX}{rest} is missing a section (expected {ENV_PREFIX}<SECTION>_<KEY>)");
        };
        let section = section.to_ascii_lowercase();
        let key = key.to_ascii_lowercase();

        let Some(toml::Value::Table(section_table)) = table.get_mut(&section) else {
            bail!("environment variable {ENV_PREFIX}{rest} names unknown config section `{section}`");
        };
        if !section_table.contains_key(&key) {
            bail!("environment variable {ENV_PREFIX}{rest} names unknown config key `{section}.{key}`");
        }
        section_table.insert(key, parse_env_value(&raw));
    }
    Ok(())
}

fn parse_env_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    if let Ok(table) = wrapped.parse::<toml::Table>() {
        if let Some(value) = table.get("v") {
            return value.clone();
        }
    }
    toml::Value::String(raw.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env() -> impl Iterator<Item = (String, String)> {
        std::iter::empty()
    }

    #[test]
    fn defaults_match_the_library() {
        let config = load_config(None, no_env()).unwrap();
        assert_eq!(config.similarity.thresholds, vec![0.95, 0.98, 0.99]);
        assert_eq!(config.exam.match_iou, ExamConfig::default().match_iou);
        assert_eq!(config.sanity.min_box_area, SanityConfig::default().min_box_area);
        assert_eq!(config.crop.border, 140);
        assert!(config.output.timestamp);
    }

    #[test]
    fn file_overrides_defaults_and_env_overrides_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("conekit.toml");
        fs::write(&path, "[exam]\nmin_recall = 0.5\nmatch_iou = 0.6\n").unwrap();

        let env = vec![(
            "CONEKIT_EXAM_MIN_RECALL".to_string(),
            "0.9".to_string(),
        )];
        let config = load_config(Some(&path), env.into_iter()).unwrap();
        assert_eq!(config.exam.min_recall, 0.9, "env wins over the file");
        assert_eq!(config.exam.match_iou, 0.6, "file wins over defaults");
        assert_eq!(
            config.exam.min_precision,
            ExamConfig::default().min_precision,
            "untouched keys stay at defaults"
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("conekit.toml");
        fs::write(&path, "[exam]\nmin_recal = 0.5\n").unwrap();
        let err = load_config(Some(&path), no_env()).unwrap_err();
        assert!(err.to_string().contains("min_recal"), "{err}");

        let env = vec![("CONEKIT_EXAM_TYPO".to_string(), "1".to_string())];
        let err = load_config(None, env.into_iter()).unwrap_err();
        assert!(err.to_string().contains("exam.typo"), "{err}");
    }

    #[test]
    fn env_values_parse_as_toml_types() {
        let env = vec![
            ("CONEKIT_SIMILARITY_THRESHOLDS".to_string(), "[0.5, 0.9]".to_string()),
            ("CONEKIT_STATS_INCLUDE_OTHER".to_string(), "true".to_string()),
            ("CONEKIT_LAYOUT_IMAGE_DIR".to_string(), "frames".to_string()),
        ];
        let config = load_config(None, env.into_iter()).unwrap();
        assert_eq!(config.similarity.thresholds, vec![0.5, 0.9]);
        assert!(config.stats.include_other);
        assert_eq!(config.layout.image_dir, "frames");
    }
}
