//! Shared domain model: cone taxonomy, box/polygon geometry, IoU, and the
//! dataset filename protocol.
//!
//! Invariant-carrying types (boxes, polygons, labeled objects, annotated
//! images, image names) can only be built through validating constructors,
//! so every other module may assume the invariants hold.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Cone classes. `Other` is the catch-all for colours outside the main
/// taxonomy; statistics and contribution rules exclude it by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConeClass {
    #[serde(rename = "blue_cone")]
    Blue,
    #[serde(rename = "yellow_cone")]
    Yellow,
    #[serde(rename = "small_orange_cone")]
    SmallOrange,
    #[serde(rename = "large_orange_cone")]
    LargeOrange,
    #[serde(rename = "other_cone")]
    Other,
}

impl ConeClass {
    pub const ALL: [ConeClass; 5] = [
        ConeClass::Blue,
        ConeClass::Yellow,
        ConeClass::SmallOrange,
        ConeClass::LargeOrange,
        ConeClass::Other,
    ];

    /// The four colour classes that count towards dataset statistics.
    pub const MAIN: [ConeClass; 4] = [
        ConeClass::Blue,
        ConeClass::Yellow,
        ConeClass::SmallOrange,
        ConeClass::LargeOrange,
    ];

    /// On-disk class name, as written in annotation files.
    pub fn name(self) -> &'static str {
        match self {
            ConeClass::Blue => "blue_cone",
            ConeClass::Yellow => "yellow_cone",
            ConeClass::SmallOrange => "small_orange_cone",
            ConeClass::LargeOrange => "large_orange_cone",
            ConeClass::Other => "other_cone",
        }
    }

    /// Short token used in report keys such as class combinations.
    pub fn short_name(self) -> &'static str {
        match self {
            ConeClass::Blue => "blue",
            ConeClass::Yellow => "yellow",
            ConeClass::SmallOrange => "small_orange",
            ConeClass::LargeOrange => "large_orange",
            ConeClass::Other => "other",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ConeClass::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Class index in box-list formats (0 = blue .. 4 = other).
    pub fn index(self) -> u32 {
        match self {
            ConeClass::Blue => 0,
            ConeClass::Yellow => 1,
            ConeClass::SmallOrange => 2,
            ConeClass::LargeOrange => 3,
            ConeClass::Other => 4,
        }
    }

    pub fn from_index(index: u32) -> Option<Self> {
        ConeClass::ALL.get(index as usize).copied()
    }

    pub fn is_main(self) -> bool {
        self != ConeClass::Other
    }
}

impl fmt::Display for ConeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-object tags. Tag sets never hold duplicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObjectTag {
    #[serde(rename = "knocked_over")]
    KnockedOver,
    #[serde(rename = "truncated")]
    Truncated,
    #[serde(rename = "tape_removed_or_sticker")]
    TapeRemovedOrSticker,
}

impl ObjectTag {
    pub const ALL: [ObjectTag; 3] = [
        ObjectTag::KnockedOver,
        ObjectTag::Truncated,
        ObjectTag::TapeRemovedOrSticker,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObjectTag::KnockedOver => "knocked_over",
            ObjectTag::Truncated => "truncated",
            ObjectTag::TapeRemovedOrSticker => "tape_removed_or_sticker",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ObjectTag::ALL.into_iter().find(|t| t.name() == name)
    }
}

impl fmt::Display for ObjectTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("box corners must be finite numbers, got ({x_min}, {y_min}, {x_max}, {y_max})")]
    NonFiniteBox {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },
    #[error("box must satisfy x_min < x_max and y_min < y_max, got ({x_min}, {y_min}, {x_max}, {y_max})")]
    EmptyBox {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },
    #[error("polygon exterior needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon hole needs at least 3 vertices, got {0}")]
    TooFewHoleVertices(usize),
    #[error("polygon vertices must be finite numbers")]
    NonFiniteVertex,
    #[error("polygon is degenerate (zero-area bounding hull)")]
    DegeneratePolygon,
    #[error("mask bounding hull extends more than 1 px outside the object box")]
    MaskOutsideBox,
    #[error("image dimensions must be positive, got {width}x{height}")]
    EmptyImage { width: u32, height: u32 },
    #[error("object {index}: box ({x_min}, {y_min}, {x_max}, {y_max}) has no overlap with a {width}x{height} image")]
    BoxOutsideImage {
        index: usize,
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
        width: u32,
        height: u32,
    },
}

/// Axis-aligned box with continuous pixel coordinates. Always non-empty:
/// `x_min < x_max` and `y_min < y_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundingBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeometryError> {
        if !(x_min.is_finite() && y_min.is_finite() && x_max.is_finite() && y_max.is_finite()) {
            return Err(GeometryError::NonFiniteBox {
                x_min,
                y_min,
                x_max,
                y_max,
            });
        }
        if !(x_min < x_max && y_min < y_max) {
            return Err(GeometryError::EmptyBox {
                x_min,
                y_min,
                x_max,
                y_max,
            });
        }
        Ok(BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    /// Area of overlap with `other`; 0 when the boxes are disjoint or touch
    /// only along an edge.
    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }

    /// Shifts both corners by `(dx, dy)`. Translation keeps the box valid.
    pub fn translated(&self, dx: f64, dy: f64) -> BoundingBox {
        BoundingBox {
            x_min: self.x_min + dx,
            y_min: self.y_min + dy,
            x_max: self.x_max + dx,
            y_max: self.y_max + dy,
        }
    }

    /// Intersects the box with `[0, width] x [0, height]`. Returns `None`
    /// when nothing with positive area remains.
    pub fn clipped_to(&self, width: f64, height: f64) -> Option<BoundingBox> {
        let x_min = self.x_min.max(0.0);
        let y_min = self.y_min.max(0.0);
        let x_max = self.x_max.min(width);
        let y_max = self.y_max.min(height);
        BoundingBox::new(x_min, y_min, x_max, y_max).ok()
    }

    /// True when the box overlaps `[0, width] x [0, height]` with positive
    /// area.
    pub fn overlaps_image(&self, width: u32, height: u32) -> bool {
        self.x_min < width as f64 && self.x_max > 0.0 && self.y_min < height as f64 && self.y_max > 0.0
    }

    /// True when the box lies fully inside `[0, width] x [0, height]`.
    pub fn inside_image(&self, width: u32, height: u32) -> bool {
        self.x_min >= 0.0 && self.y_min >= 0.0 && self.x_max <= width as f64 && self.y_max <= height as f64
    }
}

/// Intersection over union of two boxes, in `[0, 1]`. Returns exactly 1 for
/// identical boxes and 0 for disjoint ones.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter / union
}

/// Polygon mask: one exterior ring plus zero or more hole rings. Rings are
/// stored as `[x, y]` vertices and are implicitly closed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolygonMask {
    exterior: Vec<[f64; 2]>,
    holes: Vec<Vec<[f64; 2]>>,
}

impl PolygonMask {
    pub fn new(exterior: Vec<[f64; 2]>, holes: Vec<Vec<[f64; 2]>>) -> Result<Self, GeometryError> {
        if exterior.len() < 3 {
            return Err(GeometryError::TooFewVertices(exterior.len()));
        }
        for ring in std::iter::once(&exterior).chain(holes.iter()) {
            if ring.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
                return Err(GeometryError::NonFiniteVertex);
            }
        }
        for hole in &holes {
            if hole.len() < 3 {
                return Err(GeometryError::TooFewHoleVertices(hole.len()));
            }
        }
        let mask = PolygonMask { exterior, holes };
        mask.hull()?;
        Ok(mask)
    }

    pub fn exterior(&self) -> &[[f64; 2]] {
        &self.exterior
    }

    pub fn holes(&self) -> &[Vec<[f64; 2]>] {
        &self.holes
    }

    /// Bounding hull of the exterior ring. Fails only for degenerate
    /// (zero-width or zero-height) polygons, which `new` rejects.
    pub fn hull(&self) -> Result<BoundingBox, GeometryError> {
        let mut x_min = f64::INFINITY;
        let mut y_min = f64::INFINITY;
        let mut x_max = f64::NEG_INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for p in &self.exterior {
            x_min = x_min.min(p[0]);
            y_min = y_min.min(p[1]);
            x_max = x_max.max(p[0]);
            y_max = y_max.max(p[1]);
        }
        BoundingBox::new(x_min, y_min, x_max, y_max)
            .map_err(|_| GeometryError::DegeneratePolygon)
    }
}

/// One labeled cone: class, box, optional mask, tag set. When a mask is
/// present its hull never extends more than 1 px outside the box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledObject {
    pub cls: ConeClass,
    bbox: BoundingBox,
    mask: Option<PolygonMask>,
    pub tags: BTreeSet<ObjectTag>,
}

impl LabeledObject {
    pub fn new(
        cls: ConeClass,
        bbox: BoundingBox,
        mask: Option<PolygonMask>,
        tags: BTreeSet<ObjectTag>,
    ) -> Result<Self, GeometryError> {
        if let Some(mask) = &mask {
            let hull = mask.hull()?;
            let slack = 1.0;
            if hull.x_min() < bbox.x_min() - slack
                || hull.y_min() < bbox.y_min() - slack
                || hull.x_max() > bbox.x_max() + slack
                || hull.y_max() > bbox.y_max() + slack
            {
                return Err(GeometryError::MaskOutsideBox);
            }
        }
        Ok(LabeledObject {
            cls,
            bbox,
            mask,
            tags,
        })
    }

    /// Object with the mask's own hull as its box.
    pub fn from_mask(
        cls: ConeClass,
        mask: PolygonMask,
        tags: BTreeSet<ObjectTag>,
    ) -> Result<Self, GeometryError> {
        let bbox = mask.hull()?;
        Ok(LabeledObject {
            cls,
            bbox,
            mask: Some(mask),
            tags,
        })
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn mask(&self) -> Option<&PolygonMask> {
        self.mask.as_ref()
    }
}

/// Annotation for one image: positive dimensions, labeled objects (each box
/// overlapping the image), and free-form scene metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotatedImage {
    pub name: String,
    width: u32,
    height: u32,
    objects: Vec<LabeledObject>,
    pub scene_meta: BTreeMap<String, serde_json::Value>,
}

impl AnnotatedImage {
    pub fn new(
        name: impl Into<String>,
        width: u32,
        height: u32,
        objects: Vec<LabeledObject>,
        scene_meta: BTreeMap<String, serde_json::Value>,
    ) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::EmptyImage { width, height });
        }
        for (index, obj) in objects.iter().enumerate() {
            let b = obj.bbox();
            if !b.overlaps_image(width, height) {
                return Err(GeometryError::BoxOutsideImage {
                    index,
                    x_min: b.x_min(),
                    y_min: b.y_min(),
                    x_max: b.x_max(),
                    y_max: b.y_max(),
                    width,
                    height,
                });
            }
        }
        Ok(AnnotatedImage {
            name: name.into(),
            width,
            height,
            objects,
            scene_meta,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn objects(&self) -> &[LabeledObject] {
        &self.objects
    }

    /// Recording context, when the `onboard` scene-meta key is a boolean.
    pub fn onboard(&self) -> Option<bool> {
        self.scene_meta.get("onboard").and_then(|v| v.as_bool())
    }
}

/// Image file extensions accepted by the filename protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageExt {
    Png,
    Jpg,
    Jpeg,
}

impl ImageExt {
    pub fn as_str(self) -> &'static str {
        match self {
            ImageExt::Png => "png",
            ImageExt::Jpg => "jpg",
            ImageExt::Jpeg => "jpeg",
        }
    }

    /// Case-insensitive match against the accepted extensions.
    pub fn parse(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "png" => Some(ImageExt::Png),
            "jpg" => Some(ImageExt::Jpg),
            "jpeg" => Some(ImageExt::Jpeg),
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NameError {
    #[error("`{0}` has no image extension (expected .png, .jpg or .jpeg)")]
    MissingExtension(String),
    #[error("`{0}` has unsupported extension `{1}` (expected png, jpg or jpeg)")]
    UnsupportedExtension(String, String),
    #[error("`{0}` does not end in `_<5-digit-number>` before the extension")]
    MissingNumberGroup(String),
    #[error("`{0}` has an empty team id")]
    EmptyTeamId(String),
    #[error("`{0}` has invalid team id `{1}` (allowed characters: a-z, 0-9, -)")]
    InvalidTeamId(String, String),
}

/// Parsed dataset image name `<team-id>_<5-digit-number>.<ext>`. The
/// canonical rendering lowercases the extension and zero-pads the number;
/// on-disk lookups must use the original file name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ImageName {
    pub team_id: String,
    pub number: u32,
    pub extension: ImageExt,
}

impl ImageName {
    pub fn new(team_id: impl Into<String>, number: u32, extension: ImageExt) -> Result<Self, NameError> {
        let team_id = team_id.into();
        let rendered = format!("{team_id}_{number:05}.{}", extension.as_str());
        if team_id.is_empty() {
            return Err(NameError::EmptyTeamId(rendered));
        }
        if !team_id.bytes().all(valid_team_byte) {
            return Err(NameError::InvalidTeamId(rendered, team_id));
        }
        if number > 99_999 {
            return Err(NameError::MissingNumberGroup(rendered));
        }
        Ok(ImageName {
            team_id,
            number,
            extension,
        })
    }

    /// Canonical file name, e.g. `ampera_00042.jpg`.
    pub fn render(&self) -> String {
        format!("{}_{:05}.{}", self.team_id, self.number, self.extension.as_str())
    }

    /// File name of the matching annotation: the image name plus `.json`.
    pub fn label_file_name(&self) -> String {
        format!("{}.json", self.render())
    }
}

impl fmt::Display for ImageName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn valid_team_byte(b: u8) -> bool {
    b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-'
}

/// Parses a dataset image file name. The extension is matched
/// case-insensitively; team id and number group are strict.
pub fn parse_image_name(file_name: &str) -> Result<ImageName, NameError> {
    let Some(dot) = file_name.rfind('.') else {
        return Err(NameError::MissingExtension(file_name.to_owned()));
    };
    let (stem, ext_with_dot) = file_name.split_at(dot);
    let ext_str = &ext_with_dot[1..];
    let Some(extension) = ImageExt::parse(ext_str) else {
        return Err(NameError::UnsupportedExtension(
            file_name.to_owned(),
            ext_str.to_owned(),
        ));
    };
    let bytes = stem.as_bytes();
    // The stem must end in `_` + exactly five digits.
    if bytes.len() < 6
        || bytes[bytes.len() - 6] != b'_'
        || !bytes[bytes.len() - 5..].iter().all(u8::is_ascii_digit)
    {
        return Err(NameError::MissingNumberGroup(file_name.to_owned()));
    }
    let team_id = &stem[..stem.len() - 6];
    if team_id.is_empty() {
        return Err(NameError::EmptyTeamId(file_name.to_owned()));
    }
    if !team_id.bytes().all(valid_team_byte) {
        return Err(NameError::InvalidTeamId(
            file_name.to_owned(),
            team_id.to_owned(),
        ));
    }
    let number: u32 = stem[stem.len() - 5..].parse().expect("five ASCII digits");
    Ok(ImageName {
        team_id: team_id.to_owned(),
        number,
        extension,
    })
}
