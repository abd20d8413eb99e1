//! Plain-text point-cloud readers and writers (ASCII XYZ and ASCII PLY).

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ndcore::Tensor;

/// A cloud as read from disk, before its class name is mapped to an index.
#[derive(Clone, Debug)]
pub struct RawCloud {
    pub points: Tensor<f64>,
    /// Name of the parent directory.
    pub class_name: String,
    pub source_id: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudFormat {
    Xyz,
    Ply,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("xyz") => Ok(CloudFormat::Xyz),
            Some("ply") => Ok(CloudFormat::Ply),
            _ => Err(Error::Format(format!("{}: unsupported extension (expected .xyz or .ply)", path.display()))),
        }
    }
}

/// Reads an `.xyz` or `.ply` file; the class is the parent directory name.
pub fn read_cloud(path: impl AsRef<Path>) -> Result<RawCloud> {
    let path = path.as_ref();
    let format = CloudFormat::from_path(path)?;
    let text = fs::read_to_string(path)?;
    let points = match format {
        CloudFormat::Xyz => parse_xyz(&text),
        CloudFormat::Ply => parse_ply(&text),
    }
    .map_err(|e| match e {
        Error::Parse { line, msg } => Error::Parse { line, msg: format!("{}: {msg}", path.display()) },
        other => other,
    })?;
    let class_name = path.parent().and_then(|p| p.file_name()).and_then(|n| n.to_str()).unwrap_or_default().to_string();
    let source_id = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
    Ok(RawCloud { points, class_name, source_id })
}

fn parse_coord(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token.parse().map_err(|_| Error::Parse { line, msg: format!("`{token}` is not a number") })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, msg: format!("non-finite coordinate `{token}`") });
    }
    Ok(v)
}

fn finish(coords: Vec<f64>) -> Result<Tensor<f64>> {
    if coords.is_empty() {
        return Err(Error::Data("cloud has no points".into()));
    }
    Tensor::new(&[coords.len() / 3, 3], coords)
}

/// One point per line, `x y z` first (extra columns ignored). Blank lines
/// and `#` comments are skipped; commas count as separators.
pub fn parse_xyz(text: &str) -> Result<Tensor<f64>> {
    let mut coords = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> =
            content.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
        if tokens.len() < 3 {
            return Err(Error::Parse { line, msg: format!("expected x y z, found {} value(s)", tokens.len()) });
        }
        for t in &tokens[..3] {
            coords.push(parse_coord(t, line)?);
        }
    }
    finish(coords)
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
    has_list: bool,
}

/// ASCII PLY with a `vertex` element carrying at least `x`, `y`, `z`.
pub fn parse_ply(text: &str) -> Result<Tensor<f64>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(Error::Parse { line: 1, msg: "missing `ply` magic line".into() }),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut ascii = false;
    let mut header_done = false;
    for (line, l) in lines.by_ref() {
        let words: Vec<&str> = l.split_whitespace().collect();
        match words.as_slice() {
            ["format", "ascii", _] => ascii = true,
            ["format", other, ..] => {
                return Err(Error::Format(format!("PLY format `{other}` is not supported (ascii only)")))
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count =
                    count.parse().map_err(|_| Error::Parse { line, msg: format!("bad element count `{count}`") })?;
                elements.push(PlyElement { name: name.to_string(), count, properties: Vec::new(), has_list: false });
            }
            ["property", "list", ..] => match elements.last_mut() {
                Some(e) => e.has_list = true,
                None => return Err(Error::Parse { line, msg: "property before element".into() }),
            },
            ["property", _ty, name] => match elements.last_mut() {
                Some(e) => e.properties.push(name.to_string()),
                None => return Err(Error::Parse { line, msg: "property before element".into() }),
            },
            ["end_header"] => {
                header_done = true;
                break;
            }
            _ => return Err(Error::Parse { line, msg: format!("unrecognised header line `{l}`") }),
        }
    }
    if !header_done {
        return Err(Error::Parse { line: text.lines().count().max(1), msg: "missing end_header".into() });
    }
    if !ascii {
        return Err(Error::Format("PLY header has no format line".into()));
    }
    let vi = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| Error::Format("PLY has no vertex element".into()))?;
    let vertex = &elements[vi];
    if vertex.has_list {
        return Err(Error::Format("list properties on vertices are not supported".into()));
    }
    let column = |axis: &str| {
        vertex
            .properties
            .iter()
            .position(|p| p == axis)
            .ok_or_else(|| Error::Format(format!("PLY vertex element lacks property `{axis}`")))
    };
    let cols = [column("x")?, column("y")?, column("z")?];

    let mut body = lines.filter(|(_, l)| !l.is_empty());
    for e in &elements[..vi] {
        for _ in 0..e.count {
            body.next();
        }
    }
    let mut coords = Vec::with_capacity(vertex.count * 3);
    for _ in 0..vertex.count {
        let (line, l) = body.next().ok_or_else(|| Error::Parse {
            line: text.lines().count() + 1,
            msg: format!("expected {} vertices, file ended early", vertex.count),
        })?;
        let tokens: Vec<&str> = l.split_whitespace().collect();
        if tokens.len() != vertex.properties.len() {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} values, found {}", vertex.properties.len(), tokens.len()),
            });
        }
        for &c in &cols {
            coords.push(parse_coord(tokens[c], line)?);
        }
    }
    finish(coords)
}

/// Writes `x y z` lines with full round-trip precision.
pub fn write_xyz(path: impl AsRef<Path>, points: &Tensor<f64>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for p in points.data().chunks(3) {
        writeln!(out, "{} {} {}", p[0], p[1], p[2])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes an ASCII PLY with double-precision `x y z` vertex properties.
pub fn write_ply(path: impl AsRef<Path>, points: &Tensor<f64>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "ply\nformat ascii 1.0\nelement vertex {}", points.rows())?;
    writeln!(out, "property double x\nproperty double y\nproperty double z\nend_header")?;
    for p in points.data().chunks(3) {
        writeln!(out, "{} {} {}", p[0], p[1], p[2])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xyz_basic() {
        let t = parse_xyz("0 0 0\n1 2 3\n").unwrap();
        assert_eq!(t.shape(), &[2, 3]);
        assert_eq!(t.data(), &[0., 0., 0., 1., 2., 3.]);
    }

    #[test]
    fn xyz_comments_extra_columns_and_commas() {
        let t = parse_xyz("# header\n\n1,2,3\n4 5 6 255 0 0 # rgb\n").unwrap();
        assert_eq!(t.data(), &[1., 2., 3., 4., 5., 6.]);
    }

    #[test]
    fn xyz_errors_carry_line_numbers() {
        assert!(matches!(parse_xyz("0 0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_xyz("0 0 0\n# c\n1 x 2\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_xyz("1 2 nan\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_xyz("# nothing\n"), Err(Error::Data(_))));
    }

    #[test]
    fn ply_with_extra_properties_and_faces() {
        let text = "ply\nformat ascii 1.0\ncomment test\nelement vertex 2\nproperty float y\n\
                    property float x\nproperty uchar red\nproperty float z\nelement face 1\n\
                    property list uchar int vertex_indices\nend_header\n1 2 7 3\n4 5 8 6\n3 0 1 1\n";
        let t = parse_ply(text).unwrap();
        assert_eq!(t.data(), &[2., 1., 3., 5., 4., 6.]);
    }

    #[test]
    fn ply_errors() {
        let bin = "ply\nformat binary_little_endian 1.0\nelement vertex 1\nend_header\n";
        assert!(matches!(parse_ply(bin), Err(Error::Format(_))));
        let short = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n\
                     property float z\nend_header\n0 0 0\n";
        assert!(matches!(parse_ply(short), Err(Error::Parse { .. })));
        let bad = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n\
                   property float z\nend_header\n0 0\n";
        assert!(matches!(parse_ply(bad), Err(Error::Parse { line: 8, .. })));
        assert!(matches!(parse_ply("xyz\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn unknown_extension() {
        assert!(matches!(read_cloud("/tmp/cloud.las"), Err(Error::Format(_))));
    }

    #[test]
    fn write_then_read_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let class = dir.path().join("oak");
        fs::create_dir(&class).unwrap();
        let pts = Tensor::from_f64(&[2, 3], &[0.1, -2.5, 3.0, 1e-7, 4.25, -0.333333333333]).unwrap();
        for name in ["a.xyz", "b.ply"] {
            let path = class.join(name);
            if name.ends_with("xyz") {
                write_xyz(&path, &pts).unwrap();
            } else {
                write_ply(&path, &pts).unwrap();
            }
            let c = read_cloud(&path).unwrap();
            assert_eq!(c.points, pts);
            assert_eq!(c.class_name, "oak");
            assert_eq!(c.source_id, name);
        }
    }
}
