//! On-disk artifact formats. Every number is written as the shortest decimal
//! that parses back to the same `f64`, so files compare bit-exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qrm::optimizer::ConvergenceHistory;
use qrm::{BoundarySegment, CauchyData, SegmentData, SpaceTimeGrid, SpatialField};
use sha2::{Digest, Sha256};

use crate::config::fmt_f64;
use crate::error::{CliError, Location, Result};

pub const MANIFEST: &str = "manifest.txt";

/// Write through a temporary sibling and rename, so a reader never sees a
/// partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::data_at(Location::file(path), "file not found"),
        _ => CliError::io(path, e),
    })
}

/// `# key=value` header lines at the top of a file, followed by the body.
struct Header<'a> {
    path: &'a Path,
    pairs: Vec<(String, String)>,
    /// 1-based line number of the first body line.
    body_line: usize,
}

impl<'a> Header<'a> {
    fn split(text: &'a str, path: &'a Path, magic: &str) -> Result<(Header<'a>, Vec<&'a str>)> {
        let mut lines = text.lines();
        if lines.next() != Some(magic) {
            return Err(CliError::data_at(
                Location::line(path, 1),
                format!("expected '{magic}' on the first line"),
            ));
        }
        let mut pairs = Vec::new();
        let mut body = Vec::new();
        let mut body_line = 2;
        for (i, line) in lines.enumerate() {
            if body.is_empty() {
                if let Some(rest) = line.strip_prefix("# ") {
                    let (k, v) = rest.split_once('=').ok_or_else(|| {
                        CliError::data_at(Location::line(path, i + 2), "malformed header line")
                    })?;
                    pairs.push((k.to_string(), v.to_string()));
                    body_line = i + 3;
                    continue;
                }
            }
            body.push(line);
        }
        Ok((Header { path, pairs, body_line }, body))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let (i, (_, v)) = self
            .pairs
            .iter()
            .enumerate()
            .find(|(_, (k, _))| k == key)
            .ok_or_else(|| CliError::data_at(Location::file(self.path), format!("header lacks '{key}'")))?;
        v.parse()
            .map_err(|_| CliError::data_at(Location::line(self.path, i + 2), format!("bad value for '{key}'")))
    }
}

fn parse_f64(s: &str, path: &Path, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| CliError::data_at(Location::line(path, line), format!("not a number: '{s}'")))
}

/// Spatial metadata identifying the node lattice of a file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneHeader {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
    pub h_x1: f64,
    pub h_x2: f64,
    pub rows: usize,
    pub cols: usize,
}

impl PlaneHeader {
    pub fn of(grid: &SpaceTimeGrid) -> Self {
        PlaneHeader {
            x1_min: grid.x1_min,
            x1_max: grid.x1_max,
            x2_min: grid.x2_min,
            x2_max: grid.x2_max,
            h_x1: grid.h_x1,
            h_x2: grid.h_x2,
            rows: grid.rows(),
            cols: grid.cols(),
        }
    }

    fn write(&self, out: &mut String) {
        for (k, v) in [
            ("x1_min", self.x1_min),
            ("x1_max", self.x1_max),
            ("x2_min", self.x2_min),
            ("x2_max", self.x2_max),
            ("h_x1", self.h_x1),
            ("h_x2", self.h_x2),
        ] {
            let _ = writeln!(out, "# {k}={}", fmt_f64(v));
        }
        let _ = writeln!(out, "# rows={}", self.rows);
        let _ = writeln!(out, "# cols={}", self.cols);
    }

    fn read(h: &Header) -> Result<Self> {
        Ok(PlaneHeader {
            x1_min: h.get("x1_min")?,
            x1_max: h.get("x1_max")?,
            x2_min: h.get("x2_min")?,
            x2_max: h.get("x2_max")?,
            h_x1: h.get("h_x1")?,
            h_x2: h.get("h_x2")?,
            rows: h.get("rows")?,
            cols: h.get("cols")?,
        })
    }
}

/// Nodal values of one spatial field, one CSV row per `x2` row.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub header: PlaneHeader,
    pub values: Vec<f64>,
}

impl FieldFile {
    const MAGIC: &'static str = "# qrm field";

    pub fn from_field(field: &SpatialField, grid: &SpaceTimeGrid) -> Self {
        FieldFile {
            header: PlaneHeader::of(grid),
            values: field.values().to_vec(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", Self::MAGIC);
        self.header.write(&mut out);
        for row in self.values.chunks(self.header.cols) {
            let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let (h, body) = Header::split(text, path, Self::MAGIC)?;
        let header = PlaneHeader::read(&h)?;
        if body.len() != header.rows {
            return Err(CliError::data_at(
                Location::file(path),
                format!("expected {} rows, found {}", header.rows, body.len()),
            ));
        }
        let mut values = Vec::with_capacity(header.rows * header.cols);
        for (i, row) in body.iter().enumerate() {
            let line = h.body_line + i;
            let cells: Vec<&str> = row.split(',').collect();
            if cells.len() != header.cols {
                return Err(CliError::data_at(
                    Location::line(path, line),
                    format!("expected {} values, found {}", header.cols, cells.len()),
                ));
            }
            for c in cells {
                values.push(parse_f64(c, path, line)?);
            }
        }
        Ok(FieldFile { header, values })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_text())
    }

    /// The field, provided the file was written on `grid`'s lattice.
    pub fn into_field(self, grid: &SpaceTimeGrid, path: &Path) -> Result<SpatialField> {
        if self.header != PlaneHeader::of(grid) {
            return Err(CliError::data_at(Location::file(path), "field grid does not match the configured grid"));
        }
        Ok(SpatialField::from_values(grid, self.values)?)
    }
}

const CAUCHY_MAGIC: &str = "# qrm cauchy";

pub fn segment_file(dir: &Path, seg: BoundarySegment) -> PathBuf {
    dir.join(format!("{}.csv", seg.name()))
}

fn segment_text(data: &SegmentData, seg: BoundarySegment, grid: &SpaceTimeGrid) -> String {
    let mut out = format!("{CAUCHY_MAGIC}\n");
    let _ = writeln!(out, "# segment={}", seg.name());
    PlaneHeader::of(grid).write(&mut out);
    let _ = writeln!(out, "# h_t={}", fmt_f64(grid.h_t));
    let _ = writeln!(out, "# levels={}", grid.levels());
    let _ = writeln!(out, "# nodes={}", data.nodes);
    out.push_str("k,node,f,g\n");
    for k in 0..grid.levels() {
        for i in 0..data.nodes {
            let j = k * data.nodes + i;
            let _ = writeln!(out, "{k},{i},{},{}", fmt_f64(data.f[j]), fmt_f64(data.g[j]));
        }
    }
    out
}

fn parse_segment(text: &str, path: &Path, seg: BoundarySegment, grid: &SpaceTimeGrid) -> Result<SegmentData> {
    let (h, body) = Header::split(text, path, CAUCHY_MAGIC)?;
    let mismatch = |what: &str| CliError::data_at(Location::file(path), format!("{what} does not match the configured grid"));
    let name: String = h.get("segment")?;
    if name != seg.name() {
        return Err(CliError::data_at(
            Location::file(path),
            format!("file holds {name}, expected {}", seg.name()),
        ));
    }
    if PlaneHeader::read(&h)? != PlaneHeader::of(grid) {
        return Err(mismatch("spatial lattice"));
    }
    let h_t: f64 = h.get("h_t")?;
    let levels: usize = h.get("levels")?;
    if h_t != grid.h_t || levels != grid.levels() {
        return Err(mismatch("time axis"));
    }
    let nodes: usize = h.get("nodes")?;
    if nodes != seg.node_count(grid) {
        return Err(mismatch("node count"));
    }
    let Some((&columns, rows)) = body.split_first() else {
        return Err(CliError::data_at(Location::file(path), "missing column header"));
    };
    if columns != "k,node,f,g" {
        return Err(CliError::data_at(Location::line(path, h.body_line), "expected column header 'k,node,f,g'"));
    }
    if rows.len() != levels * nodes {
        return Err(CliError::data_at(
            Location::file(path),
            format!("expected {} rows, found {}", levels * nodes, rows.len()),
        ));
    }
    let mut f = Vec::with_capacity(rows.len());
    let mut g = Vec::with_capacity(rows.len());
    for (j, row) in rows.iter().enumerate() {
        let line = h.body_line + 1 + j;
        let cells: Vec<&str> = row.split(',').collect();
        let at = || Location::line(path, line);
        if cells.len() != 4 {
            return Err(CliError::data_at(at(), format!("expected 4 columns, found {}", cells.len())));
        }
        let (k, i) = (j / nodes, j % nodes);
        if cells[0] != k.to_string() || cells[1] != i.to_string() {
            return Err(CliError::data_at(at(), format!("expected level {k} node {i}")));
        }
        f.push(parse_f64(cells[2], path, line)?);
        g.push(parse_f64(cells[3], path, line)?);
    }
    Ok(SegmentData { nodes, f, g })
}

/// One file per segment in `dir`.
pub fn write_cauchy(dir: &Path, data: &CauchyData, grid: &SpaceTimeGrid) -> Result<()> {
    for seg in BoundarySegment::ALL {
        write_atomic(&segment_file(dir, seg), &segment_text(data.segment(seg), seg, grid))?;
    }
    Ok(())
}

pub fn read_cauchy(dir: &Path, grid: &SpaceTimeGrid) -> Result<CauchyData> {
    let mut segments = Vec::with_capacity(4);
    for seg in BoundarySegment::ALL {
        let path = segment_file(dir, seg);
        segments.push(parse_segment(&read_text(&path)?, &path, seg, grid)?);
    }
    let segments: [SegmentData; 4] = segments.try_into().expect("four segments");
    Ok(CauchyData::from_segments(grid, segments)?)
}

pub fn history_csv(history: &ConvergenceHistory) -> String {
    let mut out = String::from("iter,J,grad_norm_sq,alpha\n");
    for r in &history.records {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.iter,
            fmt_f64(r.j_value),
            fmt_f64(r.grad_norm_sq),
            fmt_f64(r.step_alpha)
        );
    }
    out
}

/// Ordered `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub pairs: Vec<(String, String)>,
}

impl Summary {
    pub fn put(&mut self, key: &str, value: impl ToString) {
        self.pairs.push((key.to_string(), value.to_string()));
    }

    pub fn put_f64(&mut self, key: &str, value: f64) {
        self.put(key, fmt_f64(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        self.pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut s = Summary::default();
        for (i, line) in text.lines().enumerate() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::data_at(Location::line(path, i + 1), "expected key=value"))?;
            s.put(k, v);
        }
        Ok(s)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Every regular file under `dir` except the manifest and temporaries, as
/// sorted `/`-separated relative paths.
pub fn artifact_paths(dir: &Path) -> Result<Vec<String>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
        let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| CliError::io(dir, e))?;
            let path = entry.path();
            let ty = entry.file_type().map_err(|e| CliError::io(&path, e))?;
            if ty.is_dir() {
                walk(root, &path, out)?;
            } else if ty.is_file() {
                let rel = path.strip_prefix(root).expect("under root");
                let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
                let rel = rel.join("/");
                let name = rel.rsplit('/').next().unwrap_or("");
                if rel != MANIFEST && !(name.starts_with('.') && name.ends_with(".tmp")) {
                    out.push(rel);
                }
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.sort();
    Ok(out)
}

/// `<sha256>  <path>` for every artifact under `dir`.
pub fn write_manifest(dir: &Path) -> Result<String> {
    let mut text = String::new();
    for rel in artifact_paths(dir)? {
        let path = dir.join(&rel);
        let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        let _ = writeln!(text, "{}  {rel}", sha256_hex(&bytes));
    }
    write_atomic(&dir.join(MANIFEST), &text)?;
    Ok(text)
}

/// Check every manifest entry against the file on disk. Returns the number
/// of verified files.
pub fn verify_manifest(dir: &Path) -> Result<usize> {
    let path = dir.join(MANIFEST);
    let text = read_text(&path)?;
    let mut count = 0;
    for (i, line) in text.lines().enumerate() {
        let at = Location::line(&path, i + 1);
        let (sum, rel) = line
            .split_once("  ")
            .ok_or_else(|| CliError::data_at(at.clone(), "expected '<sha256>  <path>'"))?;
        let file = dir.join(rel);
        let bytes = std::fs::read(&file).map_err(|_| CliError::data_at(at.clone(), format!("missing artifact '{rel}'")))?;
        if sha256_hex(&bytes) != sum {
            return Err(CliError::data_at(at, format!("checksum mismatch for '{rel}'")));
        }
        count += 1;
    }
    Ok(count)
}
