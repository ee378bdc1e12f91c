//! Pascal VOC XML annotations.
//!
//! VOC boxes are integer pixel corners, 1-based and inclusive on both ends:
//! a box spanning continuous `[10, 30)` horizontally covers pixels 11..=30.
//! Writing quantizes continuous corners with
//! `xmin = round(x_min) + 1`, `xmax = round(x_max)` (same for y), which
//! keeps every corner within half a pixel on a round trip; parsing applies
//! the exact inverse. Boxes narrower than about a pixel can collapse under
//! this quantization and are reported as errors instead of being written.
//!
//! The parser is a small element scanner with line/column tracking; it
//! ignores attributes and any elements beyond `filename`, `size` and
//! `object/name|bndbox`. Tags cannot be represented and are dropped, masks
//! are rejected.

use std::fmt::Write as _;

use crate::core::AnnotatedImage;
use crate::formats::{FormatError, FormatId, RawAnnotation, RawObject};

pub(crate) fn parse_raw(bytes: &[u8]) -> Result<RawAnnotation, FormatError> {
    let text = std::str::from_utf8(bytes).map_err(|e| syntax(1, 1, format!("not valid UTF-8: {e}")))?;
    let mut scanner = Scanner::new(text);
    scanner.skip_misc()?;
    let root = scanner.parse_element()?;
    scanner.skip_misc()?;
    if !scanner.at_end() {
        return Err(syntax(scanner.line, scanner.col, "trailing content after </annotation>".into()));
    }
    if root.name != "annotation" {
        return Err(FormatError::InvalidDocument(format!(
            "root element must be <annotation>, got <{}>",
            root.name
        )));
    }

    let name = root
        .child("filename")
        .map(|e| e.text.trim().to_owned())
        .unwrap_or_default();

    let size = match root.child("size") {
        Some(size) => {
            let width = parse_u32_field(size, "width")?;
            let height = parse_u32_field(size, "height")?;
            Some((width, height))
        }
        None => None,
    };

    let mut objects = Vec::new();
    for (index, obj) in root.children.iter().filter(|e| e.name == "object").enumerate() {
        let class_name = obj
            .child("name")
            .map(|e| e.text.trim().to_owned())
            .ok_or_else(|| FormatError::InvalidObject {
                index,
                message: "missing <name>".into(),
            })?;
        let bndbox = obj.child("bndbox").ok_or_else(|| FormatError::InvalidObject {
            index,
            message: "missing <bndbox>".into(),
        })?;
        let mut corner = [0.0f64; 4];
        for (slot, field) in ["xmin", "ymin", "xmax", "ymax"].into_iter().enumerate() {
            let text = bndbox
                .child(field)
                .map(|e| e.text.trim())
                .ok_or_else(|| FormatError::InvalidObject {
                    index,
                    message: format!("missing <{field}>"),
                })?;
            corner[slot] = text.parse().map_err(|_| FormatError::InvalidObject {
                index,
                message: format!("<{field}> value `{text}` is not a number"),
            })?;
        }
        let [xmin, ymin, xmax, ymax] = corner;
        objects.push(RawObject {
            class_name,
            // Inverse of the write-side quantization.
            corners: Some([xmin - 1.0, ymin - 1.0, xmax, ymax]),
            mask: None,
            tags: Vec::new(),
            norm: None,
        });
    }

    Ok(RawAnnotation {
        name,
        size,
        objects,
        scene_meta: Default::default(),
    })
}

fn parse_u32_field(parent: &Elem, field: &str) -> Result<u32, FormatError> {
    let text = parent
        .child(field)
        .map(|e| e.text.trim())
        .ok_or_else(|| FormatError::InvalidDocument(format!("missing <size>/<{field}>")))?;
    text.parse().map_err(|_| {
        FormatError::InvalidDocument(format!("<size>/<{field}> value `{text}` is not an integer"))
    })
}

pub(crate) fn write(image: &AnnotatedImage) -> Result<Vec<u8>, FormatError> {
    let mut out = String::new();
    out.push_str("<annotation>\n");
    if !image.name.is_empty() {
        writeln!(out, "  <filename>{}</filename>", escape(&image.name)).unwrap();
    }
    out.push_str("  <size>\n");
    writeln!(out, "    <width>{}</width>", image.width()).unwrap();
    writeln!(out, "    <height>{}</height>", image.height()).unwrap();
    out.push_str("    <depth>3</depth>\n  </size>\n");

    for (index, obj) in image.objects().iter().enumerate() {
        if obj.mask().is_some() {
            return Err(FormatError::UnsupportedFeature {
                format: FormatId::PascalVoc,
                what: "polygon masks".into(),
            });
        }
        let b = obj.bbox();
        let xmin = b.x_min().round() as i64 + 1;
        let ymin = b.y_min().round() as i64 + 1;
        let xmax = b.x_max().round() as i64;
        let ymax = b.y_max().round() as i64;
        if xmin > xmax || ymin > ymax {
            return Err(FormatError::InvalidObject {
                index,
                message: format!(
                    "box ({}, {}, {}, {}) collapses under integer quantization",
                    b.x_min(),
                    b.y_min(),
                    b.x_max(),
                    b.y_max()
                ),
            });
        }
        out.push_str("  <object>\n");
        writeln!(out, "    <name>{}</name>", obj.cls.name()).unwrap();
        out.push_str("    <bndbox>\n");
        writeln!(out, "      <xmin>{xmin}</xmin>").unwrap();
        writeln!(out, "      <ymin>{ymin}</ymin>").unwrap();
        writeln!(out, "      <xmax>{xmax}</xmax>").unwrap();
        writeln!(out, "      <ymax>{ymax}</ymax>").unwrap();
        out.push_str("    </bndbox>\n  </object>\n");
    }
    out.push_str("</annotation>\n");
    Ok(out.into_bytes())
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(text: &str, line: usize, col: usize) -> Result<String, FormatError> {
    if !text.contains('&') {
        return Ok(text.to_owned());
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        let end = rest
            .find(';')
            .ok_or_else(|| syntax(line, col, "unterminated entity".into()))?;
        match &rest[..=end] {
            "&amp;" => out.push('&'),
            "&lt;" => out.push('<'),
            "&gt;" => out.push('>'),
            "&quot;" => out.push('"'),
            "&apos;" => out.push('\''),
            other => return Err(syntax(line, col, format!("unsupported entity `{other}`"))),
        }
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn syntax(line: usize, column: usize, message: String) -> FormatError {
    FormatError::Syntax {
        format: FormatId::PascalVoc,
        line,
        column,
        message,
    }
}

struct Elem {
    name: String,
    text: String,
    children: Vec<Elem>,
}

impl Elem {
    fn child(&self, name: &str) -> Option<&Elem> {
        self.children.iter().find(|c| c.name == name)
    }
}

struct Scanner<'a> {
    rest: &'a str,
    line: usize,
    col: usize,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str) -> Self {
        Scanner {
            rest: text,
            line: 1,
            col: 1,
        }
    }

    fn at_end(&self) -> bool {
        self.rest.is_empty()
    }

    fn advance(&mut self, n: usize) {
        for c in self.rest[..n].chars() {
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        self.rest = &self.rest[n..];
    }

    fn skip_ws(&mut self) {
        let n = self.rest.len() - self.rest.trim_start().len();
        self.advance(n);
    }

    /// Skips whitespace, the XML prolog and comments.
    fn skip_misc(&mut self) -> Result<(), FormatError> {
        loop {
            self.skip_ws();
            if self.rest.starts_with("<?") {
                let end = self
                    .rest
                    .find("?>")
                    .ok_or_else(|| syntax(self.line, self.col, "unterminated <?...?>".into()))?;
                self.advance(end + 2);
            } else if self.rest.starts_with("<!--") {
                let end = self
                    .rest
                    .find("-->")
                    .ok_or_else(|| syntax(self.line, self.col, "unterminated comment".into()))?;
                self.advance(end + 3);
            } else {
                return Ok(());
            }
        }
    }

    fn parse_element(&mut self) -> Result<Elem, FormatError> {
        let (start_line, start_col) = (self.line, self.col);
        if !self.rest.starts_with('<') {
            return Err(syntax(start_line, start_col, "expected `<`".into()));
        }
        let close = self
            .rest
            .find('>')
            .ok_or_else(|| syntax(start_line, start_col, "unterminated tag".into()))?;
        let tag_body = &self.rest[1..close];
        let self_closing = tag_body.ends_with('/');
        let tag_body = tag_body.trim_end_matches('/');
        let name = tag_body
            .split_whitespace()
            .next()
            .ok_or_else(|| syntax(start_line, start_col, "empty tag".into()))?
            .to_owned();
        if let Some(stripped) = name.strip_prefix('/') {
            return Err(syntax(start_line, start_col, format!("unexpected closing tag </{stripped}>")));
        }
        self.advance(close + 1);

        let mut elem = Elem {
            name,
            text: String::new(),
            children: Vec::new(),
        };
        if self_closing {
            return Ok(elem);
        }

        loop {
            // Text up to the next markup.
            let next = self
                .rest
                .find('<')
                .ok_or_else(|| syntax(self.line, self.col, format!("missing </{}>", elem.name)))?;
            if next > 0 {
                let (line, col) = (self.line, self.col);
                let chunk = &self.rest[..next];
                elem.text.push_str(&unescape(chunk, line, col)?);
                self.advance(next);
            }
            if self.rest.starts_with("<!--") {
                let end = self
                    .rest
                    .find("-->")
                    .ok_or_else(|| syntax(self.line, self.col, "unterminated comment".into()))?;
                self.advance(end + 3);
            } else if self.rest.starts_with("</") {
                let close = self
                    .rest
                    .find('>')
                    .ok_or_else(|| syntax(self.line, self.col, "unterminated closing tag".into()))?;
                let closing = self.rest[2..close].trim();
                if closing != elem.name {
                    return Err(syntax(
                        self.line,
                        self.col,
                        format!("expected </{}>, got </{closing}>", elem.name),
                    ));
                }
                self.advance(close + 1);
                return Ok(elem);
            } else {
                elem.children.push(self.parse_element()?);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{BoundingBox, ConeClass, LabeledObject};
    use crate::formats::parse_annotation;

    #[test]
    fn quantizes_on_write_and_inverts_on_parse() {
        let bbox = BoundingBox::new(10.0, 20.0, 30.0, 60.0).unwrap();
        let obj = LabeledObject::new(ConeClass::Blue, bbox, None, Default::default()).unwrap();
        let image = AnnotatedImage::new("a_00001.png", 100, 100, vec![obj], Default::default()).unwrap();
        let bytes = write(&image).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.contains("<xmin>11</xmin>"), "{text}");
        assert!(text.contains("<ymin>21</ymin>"), "{text}");
        assert!(text.contains("<xmax>30</xmax>"), "{text}");
        assert!(text.contains("<ymax>60</ymax>"), "{text}");

        let reparsed = parse_annotation(FormatId::PascalVoc, &bytes, None).unwrap();
        assert_eq!(reparsed.image.name, "a_00001.png");
        let b = reparsed.image.objects()[0].bbox();
        assert_eq!(
            (b.x_min(), b.y_min(), b.x_max(), b.y_max()),
            (10.0, 20.0, 30.0, 60.0)
        );
    }

    #[test]
    fn subpixel_box_collapses_loudly() {
        let bbox = BoundingBox::new(10.3, 5.0, 10.45, 9.0).unwrap();
        let obj = LabeledObject::new(ConeClass::Blue, bbox, None, Default::default()).unwrap();
        let image = AnnotatedImage::new("x", 100, 100, vec![obj], Default::default()).unwrap();
        let err = write(&image).unwrap_err();
        assert!(matches!(err, FormatError::InvalidObject { index: 0, .. }), "{err}");
    }

    #[test]
    fn parses_hand_written_document() {
        let doc = br#"<?xml version="1.0"?>
<!-- exported by hand -->
<annotation>
  <folder>whatever</folder>
  <filename>ampera_00042.jpg</filename>
  <size><width>640</width><height>480</height><depth>3</depth></size>
  <object>
    <name>yellow_cone</name>
    <pose>Unspecified</pose>
    <truncated>0</truncated>
    <bndbox><xmin>11</xmin><ymin>21</ymin><xmax>30</xmax><ymax>60</ymax></bndbox>
  </object>
</annotation>
"#;
        let parsed = parse_annotation(FormatId::PascalVoc, doc, None).unwrap();
        assert_eq!((parsed.image.width(), parsed.image.height()), (640, 480));
        assert_eq!(parsed.image.objects().len(), 1);
        assert_eq!(parsed.image.objects()[0].cls, ConeClass::Yellow);
    }

    #[test]
    fn mismatched_tags_are_syntax_errors_with_position() {
        let doc = b"<annotation>\n  <size><width>10</width><height>10</height></wrong></size>\n</annotation>";
        let err = parse_annotation(FormatId::PascalVoc, doc, None).unwrap_err();
        match err {
            FormatError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn missing_bndbox_field_names_the_object() {
        let doc = br#"<annotation>
  <size><width>10</width><height>10</height></size>
  <object><name>blue_cone</name><bndbox><xmin>1</xmin><ymin>1</ymin><xmax>5</xmax></bndbox></object>
</annotation>"#;
        let err = parse_annotation(FormatId::PascalVoc, doc, None).unwrap_err();
        match err {
            FormatError::InvalidObject { index, message } => {
                assert_eq!(index, 0);
                assert!(message.contains("ymax"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn filename_entities_round_trip() {
        let image = AnnotatedImage::new("a&b", 10, 10, vec![], Default::default()).unwrap();
        let bytes = write(&image).unwrap();
        let parsed = parse_annotation(FormatId::PascalVoc, &bytes, None).unwrap();
        assert_eq!(parsed.image.name, "a&b");
    }
}
