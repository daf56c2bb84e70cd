//! Volume headers with raw `f32le` blobs, the `.st4` tet mesh format, and
//! OBJ/PLY export of slice meshes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::field::{FieldError, ToxelField};
use crate::slicing::TriMesh3;
use crate::tessellation::{Tet4, TetMesh4, Vertex4, VertexKey};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing header key `{0}`")]
    MissingKey(&'static str),
    #[error("unknown dtype `{0}`")]
    UnknownDtype(String),
    #[error("unsupported sample order `{0}`")]
    UnknownOrder(String),
    #[error("{path}: expected {expected} bytes, found {found}")]
    SizeMismatch {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("{path}: non-finite sample at index {index}")]
    NonFinite { path: PathBuf, index: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl IoError {
    /// Stable identifier for machine-readable error lines.
    pub fn code(&self) -> &'static str {
        match self {
            IoError::Io { .. } => "io",
            IoError::Syntax { .. } => "syntax",
            IoError::MissingKey(_) => "missing-key",
            IoError::UnknownDtype(_) => "unknown-dtype",
            IoError::UnknownOrder(_) => "unknown-order",
            IoError::SizeMismatch { .. } => "size-mismatch",
            IoError::NonFinite { .. } => "non-finite",
            IoError::Field(_) => "field",
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, IoError::Io { .. })
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|source| IoError::Io {
        path: path.to_owned(),
        source,
    })
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), IoError> {
    fs::write(path, contents).map_err(|source| IoError::Io {
        path: path.to_owned(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeHeader {
    pub dims: [usize; 4],
    pub spacing: [f64; 4],
    pub origin: [f64; 4],
    pub data: PathBuf,
    pub aux: Vec<(String, PathBuf)>,
}

impl VolumeHeader {
    pub fn new(dims: [usize; 4], data: impl Into<PathBuf>) -> Self {
        VolumeHeader {
            dims,
            spacing: [1.0; 4],
            origin: [0.0; 4],
            data: data.into(),
            aux: Vec::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        let mut dims = None;
        let mut spacing = [1.0; 4];
        let mut origin = [0.0; 4];
        let mut dtype = None;
        let mut data = None;
        let mut aux = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: String| IoError::Syntax {
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| syntax(format!("expected `key = value`, got `{line}`")))?;
            let words: Vec<&str> = value.split_whitespace().collect();
            match key {
                "dims" => dims = Some(parse4::<usize>(&words).map_err(syntax)?),
                "spacing" => spacing = parse4::<f64>(&words).map_err(syntax)?,
                "origin" => origin = parse4::<f64>(&words).map_err(syntax)?,
                "dtype" => dtype = Some(value.to_owned()),
                "order" if value != "x-fastest" => {
                    return Err(IoError::UnknownOrder(value.to_owned()))
                }
                "order" => {}
                "data" => data = Some(PathBuf::from(value)),
                "aux" => match words.as_slice() {
                    [name, path] => aux.push((name.to_string(), PathBuf::from(path))),
                    _ => {
                        return Err(syntax(format!(
                            "expected `aux = <name> <path>`, got `{value}`"
                        )))
                    }
                },
                _ => return Err(syntax(format!("unknown key `{key}`"))),
            }
        }
        match dtype.as_deref() {
            Some("f32le") => {}
            Some(other) => return Err(IoError::UnknownDtype(other.to_owned())),
            None => return Err(IoError::MissingKey("dtype")),
        }
        Ok(VolumeHeader {
            dims: dims.ok_or(IoError::MissingKey("dims"))?,
            spacing,
            origin,
            data: data.ok_or(IoError::MissingKey("data"))?,
            aux,
        })
    }

    pub fn render(&self) -> String {
        let join = |v: &[String]| v.join(" ");
        let mut s = String::new();
        let _ = writeln!(s, "dims = {}", join(&self.dims.map(|d| d.to_string())));
        let _ = writeln!(
            s,
            "spacing = {}",
            join(&self.spacing.map(|d| d.to_string()))
        );
        let _ = writeln!(s, "origin = {}", join(&self.origin.map(|d| d.to_string())));
        let _ = writeln!(s, "dtype = f32le");
        let _ = writeln!(s, "order = x-fastest");
        let _ = writeln!(s, "data = {}", self.data.display());
        for (name, path) in &self.aux {
            let _ = writeln!(s, "aux = {name} {}", path.display());
        }
        s
    }

    pub fn samples(&self) -> usize {
        self.dims.iter().product()
    }
}

fn parse4<T: std::str::FromStr>(words: &[&str]) -> Result<[T; 4], String> {
    if words.len() != 4 {
        return Err(format!("expected 4 values, got {}", words.len()));
    }
    let parsed: Vec<T> = words
        .iter()
        .map(|w| w.parse().map_err(|_| format!("cannot parse `{w}`")))
        .collect::<Result<_, _>>()?;
    parsed
        .try_into()
        .map_err(|_| String::from("expected 4 values"))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_owned()
    } else {
        base.join(p)
    }
}

pub fn read_blob(path: &Path, samples: usize) -> Result<Vec<f64>, IoError> {
    let bytes = read_bytes(path)?;
    if bytes.len() != 4 * samples {
        return Err(IoError::SizeMismatch {
            path: path.to_owned(),
            expected: 4 * samples,
            found: bytes.len(),
        });
    }
    bytes
        .chunks_exact(4)
        .enumerate()
        .map(|(index, c)| {
            let v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            if v.is_finite() {
                Ok(f64::from(v))
            } else {
                Err(IoError::NonFinite {
                    path: path.to_owned(),
                    index,
                })
            }
        })
        .collect()
}

pub fn encode_blob(values: &[f64]) -> Vec<u8> {
    values
        .iter()
        .flat_map(|&v| (v as f32).to_le_bytes())
        .collect()
}

/// Loads a field from a header; relative blob paths resolve against the
/// header's directory.
pub fn load_volume(header: &Path) -> Result<ToxelField, IoError> {
    let h = VolumeHeader::parse(&read_text(header)?)?;
    let dir = header.parent().unwrap_or(Path::new("."));
    let scalar = read_blob(&resolve(dir, &h.data), h.samples())?;
    let mut field = ToxelField::new(h.dims, scalar)?
        .with_spacing(h.spacing)?
        .with_origin(h.origin);
    for (name, path) in &h.aux {
        field.add_aux(name, read_blob(&resolve(dir, path), h.samples())?)?;
    }
    Ok(field)
}

/// Writes `<stem>.hdr` plus one blob per channel next to it and returns the
/// header path.
pub fn save_volume(field: &ToxelField, header: &Path) -> Result<PathBuf, IoError> {
    let dir = header.parent().unwrap_or(Path::new("."));
    let stem = header
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("volume");
    let data = PathBuf::from(format!("{stem}.f32"));
    write_file(&dir.join(&data), encode_blob(field.scalar()))?;
    let mut h = VolumeHeader::new(field.dims(), data);
    h.spacing = field.spacing();
    h.origin = field.origin();
    for ch in field.aux_channels() {
        let p = PathBuf::from(format!("{stem}.{}.f32", ch.name));
        write_file(&dir.join(&p), encode_blob(&ch.values))?;
        h.aux.push((ch.name.clone(), p));
    }
    write_file(header, h.render())?;
    Ok(header.to_owned())
}

fn push_row(s: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:?}");
    }
    s.push('\n');
}

pub fn render_st4(mesh: &TetMesh4) -> String {
    let mut s = String::from("st4 1\n");
    let _ = writeln!(s, "points {}", mesh.vertices.len());
    for v in &mesh.vertices {
        push_row(&mut s, &v.pos);
    }
    let _ = writeln!(s, "tets {}", mesh.tets.len());
    for t in &mesh.tets {
        let _ = writeln!(s, "{} {} {} {}", t.v[0], t.v[1], t.v[2], t.v[3]);
    }
    let _ = writeln!(s, "normals {}", mesh.tets.len());
    for t in &mesh.tets {
        push_row(&mut s, &t.normal);
    }
    for (k, name) in mesh.attr_names.iter().enumerate() {
        let _ = writeln!(s, "attr {name} {}", mesh.vertices.len());
        for v in &mesh.vertices {
            push_row(&mut s, &[v.attrs[k]]);
        }
    }
    s
}

struct Reader<'a> {
    lines: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
}

fn syntax(line: usize, message: String) -> IoError {
    IoError::Syntax {
        line: line + 1,
        message,
    }
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)>> = Box::new(
            text.lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty()),
        );
        Reader {
            lines: it.peekable(),
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str), IoError> {
        self.lines.next().ok_or_else(|| IoError::Syntax {
            line: 0,
            message: format!("unexpected end of file, expected {what}"),
        })
    }

    /// `<word> <count>` or `attr <name> <count>`.
    fn block(&mut self, word: &str) -> Result<(usize, String, usize), IoError> {
        let (i, l) = self.next(word)?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        let parsed = match (word, parts.as_slice()) {
            ("attr", ["attr", name, n]) => n.parse().ok().map(|n| (name.to_string(), n)),
            (_, [w, n]) if *w == word => n.parse().ok().map(|n| (String::new(), n)),
            _ => None,
        };
        let (name, n) =
            parsed.ok_or_else(|| syntax(i, format!("expected `{word} <count>`, got `{l}`")))?;
        Ok((i, name, n))
    }

    fn row<T: std::str::FromStr, const N: usize>(&mut self, what: &str) -> Result<[T; N], IoError> {
        let (i, l) = self.next(what)?;
        let v: Option<Vec<T>> = l.split_whitespace().map(|w| w.parse().ok()).collect();
        v.and_then(|v| v.try_into().ok())
            .ok_or_else(|| syntax(i, format!("bad {what} `{l}`")))
    }
}

pub fn parse_st4(text: &str) -> Result<TetMesh4, IoError> {
    let mut r = Reader::new(text);
    let (i, first) = r.next("header")?;
    if first.trim() != "st4 1" {
        return Err(syntax(i, format!("expected `st4 1`, got `{first}`")));
    }
    let (_, _, np) = r.block("points")?;
    let mut mesh = TetMesh4::default();
    for k in 0..np {
        mesh.vertices.push(Vertex4 {
            key: VertexKey::Stored(k as u32),
            pos: r.row("point")?,
            attrs: Vec::new(),
        });
    }
    let (i, _, nt) = r.block("tets")?;
    for _ in 0..nt {
        let v: [u32; 4] = r.row("tet")?;
        if v.iter().any(|&x| x as usize >= np) {
            return Err(syntax(i, format!("tet {v:?} indexes past {np} points")));
        }
        mesh.tets.push(Tet4 {
            v,
            normal: [0.0; 4],
            cell: [0; 4],
            section: 0,
        });
    }
    let (i, _, nn) = r.block("normals")?;
    if nn != nt {
        return Err(syntax(i, format!("{nn} normals for {nt} tets")));
    }
    for t in &mut mesh.tets {
        t.normal = r.row("normal")?;
    }
    while r.lines.peek().is_some() {
        let (i, name, n) = r.block("attr")?;
        if n != np {
            return Err(syntax(
                i,
                format!("attr `{name}` has {n} values for {np} points"),
            ));
        }
        for v in &mut mesh.vertices {
            let [x]: [f64; 1] = r.row("attr value")?;
            v.attrs.push(x);
        }
        mesh.attr_names.push(name);
    }
    Ok(mesh)
}

pub fn load_st4(path: &Path) -> Result<TetMesh4, IoError> {
    parse_st4(&read_text(path)?)
}

pub fn save_st4(mesh: &TetMesh4, path: &Path) -> Result<(), IoError> {
    write_file(path, render_st4(mesh))
}

pub fn render_obj(mesh: &TriMesh3) -> String {
    let mut s = String::new();
    for p in &mesh.positions {
        s.push_str("v ");
        push_row(&mut s, p);
    }
    for n in mesh.vertex_normals() {
        s.push_str("vn ");
        push_row(&mut s, &n);
    }
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| i + 1);
        let _ = writeln!(s, "f {a}//{a} {b}//{b} {c}//{c}");
    }
    s
}

pub fn render_ply(mesh: &TriMesh3) -> String {
    let mut s = String::from("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "element vertex {}", mesh.positions.len());
    for axis in ["x", "y", "z", "nx", "ny", "nz"] {
        let _ = writeln!(s, "property double {axis}");
    }
    for name in &mesh.attr_names {
        let _ = writeln!(s, "property double {name}");
    }
    let _ = writeln!(s, "element face {}", mesh.triangles.len());
    s.push_str("property list uchar int vertex_indices\nend_header\n");
    let normals = mesh.vertex_normals();
    for (i, p) in mesh.positions.iter().enumerate() {
        let mut row: Vec<f64> = p.iter().chain(&normals[i]).copied().collect();
        row.extend(&mesh.attrs[i]);
        push_row(&mut s, &row);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}
