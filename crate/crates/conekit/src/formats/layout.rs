//! On-disk dataset layout validation.
//!
//! Expected tree:
//!
//! ```text
//! <root>/<team-dir>/img/<team>_<NNNNN>.<ext>
//! <root>/<team-dir>/ann/<team>_<NNNNN>.<ext>.json
//! ```
//!
//! Every image must have exactly one annotation and vice versa. Pairing is
//! canonical: extensions match case-insensitively, so `a_00001.PNG` pairs
//! with `a_00001.png.json`. The team id inside a file name may differ from
//! the directory name (datasets get re-bundled); duplicates are judged on
//! the `(team, number)` pair from file names across the whole tree.
//!
//! Validation never fails on content problems; it returns findings and
//! keeps scanning. Only IO faults abort.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::core::{parse_image_name, ImageName};
use crate::formats::FormatError;

#[derive(Debug, Clone, Serialize)]
pub struct LayoutConfig {
    pub image_dir: String,
    pub annotation_dir: String,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            image_dir: "img".into(),
            annotation_dir: "ann".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutFindingKind {
    OrphanImage,
    OrphanAnnotation,
    BadFilename,
    DuplicateName,
    MissingDirectory,
    UnexpectedEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutFinding {
    pub kind: LayoutFindingKind,
    /// Path relative to the scanned root, `/`-separated.
    pub path: String,
    pub message: String,
}

/// A complete image/annotation pair.
#[derive(Debug, Clone, Serialize)]
pub struct LayoutPair {
    pub team_dir: String,
    pub name: ImageName,
    pub image_path: PathBuf,
    pub annotation_path: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetLayout {
    pub root: PathBuf,
    pub pairs: Vec<LayoutPair>,
}

struct Entry {
    file_name: String,
    path: PathBuf,
    rel: String,
    is_dir: bool,
}

fn sorted_entries(dir: &Path, root: &Path) -> Result<Vec<Entry>, FormatError> {
    let read = std::fs::read_dir(dir).map_err(|source| FormatError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut entries = Vec::new();
    for item in read {
        let item = item.map_err(|source| FormatError::Io {
            path: dir.to_owned(),
            source,
        })?;
        let path = item.path();
        let is_dir = item
            .file_type()
            .map_err(|source| FormatError::Io {
                path: path.clone(),
                source,
            })?
            .is_dir();
        let file_name = item.file_name().to_string_lossy().into_owned();
        let rel = relative(&path, root);
        entries.push(Entry {
            file_name,
            path,
            rel,
            is_dir,
        });
    }
    entries.sort_by(|a, b| a.file_name.cmp(&b.file_name));
    Ok(entries)
}

fn relative(path: &Path, root: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn valid_team_dir_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
}

/// Scans a dataset tree, returning the paired layout plus all findings.
/// Results are fully deterministic: entries are visited in sorted order and
/// findings are sorted by `(path, kind, message)`.
pub fn validate_layout(
    root: &Path,
    config: &LayoutConfig,
) -> Result<(DatasetLayout, Vec<LayoutFinding>), FormatError> {
    let mut findings = Vec::new();
    let mut pairs = Vec::new();
    // Representative image per canonical name, for tree-wide duplicate
    // detection on (team, number).
    let mut by_team_number: BTreeMap<(String, u32), Vec<String>> = BTreeMap::new();

    for team in sorted_entries(root, root)? {
        if !team.is_dir {
            findings.push(LayoutFinding {
                kind: LayoutFindingKind::UnexpectedEntry,
                path: team.rel,
                message: "only team directories are allowed at the dataset root".into(),
            });
            continue;
        }
        if !valid_team_dir_name(&team.file_name) {
            findings.push(LayoutFinding {
                kind: LayoutFindingKind::BadFilename,
                path: team.rel.clone(),
                message: "team directory name must match [a-z0-9-]+".into(),
            });
        }

        let mut images: BTreeMap<String, Vec<(ImageName, PathBuf, String)>> = BTreeMap::new();
        let mut annotations: BTreeMap<String, Vec<(ImageName, PathBuf, String)>> = BTreeMap::new();

        for sub in sorted_entries(&team.path, root)? {
            if sub.is_dir && sub.file_name == config.image_dir {
                scan_files(&sub.path, root, &mut findings, |entry, findings| {
                    match parse_image_name(&entry.file_name) {
                        Ok(name) => images
                            .entry(name.render())
                            .or_default()
                            .push((name, entry.path.clone(), entry.rel.clone())),
                        Err(e) => findings.push(LayoutFinding {
                            kind: LayoutFindingKind::BadFilename,
                            path: entry.rel.clone(),
                            message: e.to_string(),
                        }),
                    }
                })?;
            } else if sub.is_dir && sub.file_name == config.annotation_dir {
                scan_files(&sub.path, root, &mut findings, |entry, findings| {
                    let Some(stem) = entry.file_name.strip_suffix(".json") else {
                        findings.push(LayoutFinding {
                            kind: LayoutFindingKind::BadFilename,
                            path: entry.rel.clone(),
                            message: "annotation files must be named `<image-file-name>.json`"
                                .into(),
                        });
                        return;
                    };
                    match parse_image_name(stem) {
                        Ok(name) => annotations
                            .entry(name.render())
                            .or_default()
                            .push((name, entry.path.clone(), entry.rel.clone())),
                        Err(e) => findings.push(LayoutFinding {
                            kind: LayoutFindingKind::BadFilename,
                            path: entry.rel.clone(),
                            message: e.to_string(),
                        }),
                    }
                })?;
            } else {
                findings.push(LayoutFinding {
                    kind: LayoutFindingKind::UnexpectedEntry,
                    path: sub.rel,
                    message: format!(
                        "team directories must contain exactly `{}/` and `{}/`",
                        config.image_dir, config.annotation_dir
                    ),
                });
            }
        }

        for (dir_name, present) in [
            (&config.image_dir, team.path.join(&config.image_dir).is_dir()),
            (
                &config.annotation_dir,
                team.path.join(&config.annotation_dir).is_dir(),
            ),
        ] {
            if !present {
                findings.push(LayoutFinding {
                    kind: LayoutFindingKind::MissingDirectory,
                    path: format!("{}/{}", team.rel, dir_name),
                    message: "required directory is missing".into(),
                });
            }
        }

        for (canonical, entries) in &images {
            for (_, _, rel) in &entries[1..] {
                findings.push(LayoutFinding {
                    kind: LayoutFindingKind::DuplicateName,
                    path: rel.clone(),
                    message: format!("same canonical name `{canonical}` as {}", entries[0].2),
                });
            }
            let (name, _, rel) = &entries[0];
            by_team_number
                .entry((name.team_id.clone(), name.number))
                .or_default()
                .push(rel.clone());
        }
        for (canonical, entries) in &annotations {
            for (_, _, rel) in &entries[1..] {
                findings.push(LayoutFinding {
                    kind: LayoutFindingKind::DuplicateName,
                    path: rel.clone(),
                    message: format!("same canonical name `{canonical}` as {}", entries[0].2),
                });
            }
            if !images.contains_key(canonical) {
                findings.push(LayoutFinding {
                    kind: LayoutFindingKind::OrphanAnnotation,
                    path: entries[0].2.clone(),
                    message: format!(
                        "no image `{canonical}` in {}/{}",
                        team.rel, config.image_dir
                    ),
                });
            }
        }
        for (canonical, entries) in &images {
            let (name, path, rel) = &entries[0];
            match annotations.get(canonical) {
                Some(anns) => pairs.push(LayoutPair {
                    team_dir: team.file_name.clone(),
                    name: name.clone(),
                    image_path: path.clone(),
                    annotation_path: anns[0].1.clone(),
                }),
                None => findings.push(LayoutFinding {
                    kind: LayoutFindingKind::OrphanImage,
                    path: rel.clone(),
                    message: format!(
                        "no annotation `{}` in {}/{}",
                        name.label_file_name(),
                        team.rel,
                        config.annotation_dir
                    ),
                }),
            }
        }
    }

    for ((team, number), rels) in &by_team_number {
        if rels.len() > 1 {
            let mut sorted = rels.clone();
            sorted.sort();
            for rel in &sorted[1..] {
                findings.push(LayoutFinding {
                    kind: LayoutFindingKind::DuplicateName,
                    path: rel.clone(),
                    message: format!(
                        "duplicate (team, number) = ({team}, {number:05}), first seen at {}",
                        sorted[0]
                    ),
                });
            }
        }
    }

    findings.sort_by(|a, b| {
        (&a.path, a.kind, &a.message).cmp(&(&b.path, b.kind, &b.message))
    });
    pairs.sort_by(|a, b| {
        (&a.team_dir, a.name.render()).cmp(&(&b.team_dir, b.name.render()))
    });

    Ok((
        DatasetLayout {
            root: root.to_owned(),
            pairs,
        },
        findings,
    ))
}

fn scan_files(
    dir: &Path,
    root: &Path,
    findings: &mut Vec<LayoutFinding>,
    mut on_file: impl FnMut(&Entry, &mut Vec<LayoutFinding>),
) -> Result<(), FormatError> {
    for entry in sorted_entries(dir, root)? {
        if entry.is_dir {
            findings.push(LayoutFinding {
                kind: LayoutFindingKind::UnexpectedEntry,
                path: entry.rel,
                message: "no subdirectories are allowed here".into(),
            });
        } else {
            on_file(&entry, findings);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn touch(path: &Path) {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, b"x").unwrap();
    }

    fn scan(root: &Path) -> (DatasetLayout, Vec<LayoutFinding>) {
        validate_layout(root, &LayoutConfig::default()).unwrap()
    }

    #[test]
    fn clean_tree_has_no_findings() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path();
        touch(&root.join("team-a/img/team-a_00001.png"));
        touch(&root.join("team-a/ann/team-a_00001.png.json"));
        touch(&root.join("team-b/img/team-b_00007.jpg"));
        touch(&root.join("team-b/ann/team-b_00007.jpg.json"));

        let (layout, findings) = scan(root);
        assert_eq!(findings, Vec::new() as Vec<LayoutFinding>, "{findings:?}");
        assert_eq!(layout.pairs.len(), 2);
        assert_eq!(layout.pairs[0].name.render(), "team-a_00001.png");
        assert_eq!(layout.pairs[1].team_dir, "team-b");
    }

    #[test]
    fn pairing_is_extension_case_insensitive() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path();
        touch(&root.join("team-a/img/team-a_00002.PNG"));
        touch(&root.join("team-a/ann/team-a_00002.png.json"));
        let (layout, findings) = scan(root);
        assert!(findings.is_empty(), "{findings:?}");
        assert_eq!(layout.pairs.len(), 1);
        assert!(layout.pairs[0].image_path.ends_with("team-a_00002.PNG"));
    }

    #[test]
    fn orphans_are_reported_on_both_sides() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path();
        touch(&root.join("team-a/img/team-a_00001.png"));
        touch(&root.join("team-a/ann/team-a_00001.png.json"));
        touch(&root.join("team-a/img/team-a_00002.png"));
        touch(&root.join("team-a/ann/team-a_00003.png.json"));

        let (layout, findings) = scan(root);
        assert_eq!(layout.pairs.len(), 1);
        assert_eq!(findings.len(), 2);
        let kinds: Vec<_> = findings.iter().map(|f| f.kind).collect();
        assert!(kinds.contains(&LayoutFindingKind::OrphanImage));
        assert!(kinds.contains(&LayoutFindingKind::OrphanAnnotation));
    }

    #[test]
    fn bad_names_and_stray_entries_are_findings() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path();
        touch(&root.join("team-a/img/team-a_00001.png"));
        touch(&root.join("team-a/ann/team-a_00001.png.json"));
        touch(&root.join("team-a/img/team-a_001.png")); // 3-digit number
        touch(&root.join("team-a/notes.txt"));
        touch(&root.join("README.md"));
        touch(&root.join("Team-B/img/team-b_00001.png")); // bad dir name
        touch(&root.join("Team-B/ann/team-b_00001.png.json"));

        let (_, findings) = scan(root);
        let kinds: Vec<_> = findings.iter().map(|f| (f.kind, f.path.as_str())).collect();
        assert!(kinds.contains(&(LayoutFindingKind::BadFilename, "team-a/img/team-a_001.png")));
        assert!(kinds.contains(&(LayoutFindingKind::UnexpectedEntry, "team-a/notes.txt")));
        assert!(kinds.contains(&(LayoutFindingKind::UnexpectedEntry, "README.md")));
        assert!(kinds.contains(&(LayoutFindingKind::BadFilename, "Team-B")));
    }

    #[test]
    fn duplicate_team_number_pairs_are_findings() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path();
        // Same (team-a, 1) twice with different extensions, both paired.
        touch(&root.join("team-a/img/team-a_00001.png"));
        touch(&root.join("team-a/ann/team-a_00001.png.json"));
        touch(&root.join("team-a/img/team-a_00001.jpg"));
        touch(&root.join("team-a/ann/team-a_00001.jpg.json"));

        let (layout, findings) = scan(root);
        assert_eq!(layout.pairs.len(), 2);
        let dups: Vec<_> = findings
            .iter()
            .filter(|f| f.kind == LayoutFindingKind::DuplicateName)
            .collect();
        assert_eq!(dups.len(), 1, "{findings:?}");
        assert_eq!(dups[0].path, "team-a/img/team-a_00001.png");
    }

    #[test]
    fn missing_required_directories_are_findings() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path();
        touch(&root.join("team-a/img/team-a_00001.png"));

        let (_, findings) = scan(root);
        assert!(findings
            .iter()
            .any(|f| f.kind == LayoutFindingKind::MissingDirectory && f.path == "team-a/ann"));
        assert!(findings
            .iter()
            .any(|f| f.kind == LayoutFindingKind::OrphanImage));
    }

    #[test]
    fn repeated_scans_are_identical() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path();
        touch(&root.join("team-b/img/team-b_00002.png"));
        touch(&root.join("team-a/img/team-a_00001.png"));
        touch(&root.join("team-a/ann/team-a_00001.png.json"));

        let (layout1, findings1) = scan(root);
        let (layout2, findings2) = scan(root);
        assert_eq!(findings1, findings2);
        assert_eq!(
            serde_json::to_string(&layout1).unwrap(),
            serde_json::to_string(&layout2).unwrap()
        );
    }
}
