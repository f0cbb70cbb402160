//! Dataset manifest CSV.
//!
//! Header: `video,index,feature_path,probmap_path,label_path,pixel_path,split`.
//! Empty path cells mean "absent" (only `feature_path` is required). `split`
//! is one of `pool`, `labeled`, `test`. Paths are relative to the manifest's
//! directory unless absolute. UTF-8, LF line endings.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::atomic_write;
use crate::io::tensor::read_tensor_header;
use crate::model::{FrameId, FrameRecord, Split};

pub const HEADER: [&str; 7] = [
    "video",
    "index",
    "feature_path",
    "probmap_path",
    "label_path",
    "pixel_path",
    "split",
];

/// Shapes shared by every frame of a dataset, read from tensor headers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DatasetDims {
    pub k: Option<usize>,
    pub h: Option<usize>,
    pub w: Option<usize>,
    pub d: usize,
}

#[derive(Clone, Debug)]
pub struct Manifest {
    pub base_dir: PathBuf,
    /// Sorted by [`FrameId`].
    pub records: Vec<FrameRecord>,
    pub dims: DatasetDims,
}

impl Manifest {
    pub fn by_video(&self) -> BTreeMap<u32, Vec<&FrameRecord>> {
        let mut out: BTreeMap<u32, Vec<&FrameRecord>> = BTreeMap::new();
        for r in &self.records {
            out.entry(r.id.video).or_default().push(r);
        }
        out
    }

    pub fn resolve(&self, key: &Path) -> PathBuf {
        self.base_dir.join(key)
    }
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses a manifest without touching the referenced files.
pub fn parse_manifest(text: &[u8]) -> Result<Vec<(u64, FrameRecord)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text);
    let headers = rdr.headers()?.clone();
    let mut col = HashMap::new();
    for name in HEADER {
        let pos = headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            line: 1,
            column: name.to_string(),
        })?;
        col.insert(name, pos);
    }

    let mut out = Vec::new();
    let mut seen: HashMap<FrameId, u64> = HashMap::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let cell = |name: &str| row.get(col[name]).unwrap_or("");
        let num = |name: &str| {
            cell(name)
                .trim()
                .parse::<u32>()
                .map_err(|e| parse_err(line, format!("{name}: {e}")))
        };
        let opt_path = |name: &str| {
            let c = cell(name).trim();
            (!c.is_empty()).then(|| PathBuf::from(c))
        };
        let id = FrameId::new(num("video")?, num("index")?);
        let split: Split = cell("split").trim().parse().map_err(|tag| Error::BadSplitTag { line, tag })?;
        let feature_ref = opt_path("feature_path").ok_or_else(|| Error::MissingColumn {
            line,
            column: "feature_path".into(),
        })?;
        if seen.insert(id, line).is_some() {
            return Err(Error::DuplicateFrameId { line, id });
        }
        out.push((
            line,
            FrameRecord {
                id,
                feature_ref,
                probmap_ref: opt_path("probmap_path"),
                label_ref: opt_path("label_path"),
                pixel_ref: opt_path("pixel_path"),
                split,
            },
        ));
    }
    Ok(out)
}

/// Loads and validates a manifest: unique ids, known split tags, every
/// referenced file present, and consistent tensor shapes across frames.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let rows = parse_manifest(&text)?;

    let mut dims = DatasetDims::default();
    let mut d_seen: Option<usize> = None;
    let agree = |line: u64, what: &str, slot: &mut Option<usize>, value: usize| -> Result<()> {
        match *slot {
            Some(prev) if prev != value => Err(parse_err(line, format!("{what} is {value}, earlier rows have {prev}"))),
            _ => {
                *slot = Some(value);
                Ok(())
            }
        }
    };
    for (line, rec) in &rows {
        let line = *line;
        let refs = [
            Some(&rec.feature_ref),
            rec.probmap_ref.as_ref(),
            rec.label_ref.as_ref(),
            rec.pixel_ref.as_ref(),
        ];
        for key in refs.into_iter().flatten() {
            let p = base_dir.join(key);
            if !p.is_file() {
                return Err(Error::UnresolvedPath { line, path: p });
            }
        }
        let header_at = |key: &Path| {
            read_tensor_header(base_dir.join(key)).map_err(|e| parse_err(line, format!("{}: {e}", key.display())))
        };
        let fh = header_at(&rec.feature_ref)?;
        let d = fh.dims.iter().map(|&x| x as usize).product();
        if d == 0 {
            return Err(parse_err(line, "feature vector is empty"));
        }
        agree(line, "feature dimension", &mut d_seen, d)?;
        if let Some(key) = &rec.probmap_ref {
            let h = header_at(key)?;
            let [k, hh, ww] = h.dims[..] else {
                return Err(parse_err(line, format!("probmap has rank {}, expected 3", h.dims.len())));
            };
            agree(line, "class count", &mut dims.k, k as usize)?;
            agree(line, "height", &mut dims.h, hh as usize)?;
            agree(line, "width", &mut dims.w, ww as usize)?;
        }
        if let Some(key) = &rec.label_ref {
            let h = header_at(key)?;
            let [hh, ww] = h.dims[..] else {
                return Err(parse_err(line, format!("label mask has rank {}, expected 2", h.dims.len())));
            };
            agree(line, "height", &mut dims.h, hh as usize)?;
            agree(line, "width", &mut dims.w, ww as usize)?;
        }
    }
    dims.d = d_seen.unwrap_or(0);

    let mut records: Vec<FrameRecord> = rows.into_iter().map(|(_, r)| r).collect();
    records.sort_by_key(|r| r.id);
    Ok(Manifest { base_dir, records, dims })
}

pub fn render_manifest(records: &[FrameRecord]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(HEADER)?;
    let p = |o: &Option<PathBuf>| o.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
    for r in records {
        w.write_record([
            r.id.video.to_string(),
            r.id.index.to_string(),
            r.feature_ref.display().to_string(),
            p(&r.probmap_ref),
            p(&r.label_ref),
            p(&r.pixel_ref),
            r.split.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::io("<manifest buffer>", e.into_error()))
}

/// Writes the manifest atomically.
pub fn save_manifest(path: impl AsRef<Path>, records: &[FrameRecord]) -> Result<()> {
    atomic_write(path, &render_manifest(records)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "video,index,feature_path,probmap_path,label_path,pixel_path,split\n";

    #[test]
    fn two_rows() {
        let text = format!("{HEAD}0,0,f/0_0.tnsr,,,,labeled\n0,1,f/0_1.tnsr,p.tnsr,,,pool\n");
        let rows = parse_manifest(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].1.probmap_ref.as_deref(), Some(Path::new("p.tnsr")));
        assert_eq!(rows[1].1.split, Split::Pool);
    }

    #[test]
    fn duplicate_reported_on_second_line() {
        let text = format!("{HEAD}0,0,a,,,,pool\n1,0,b,,,,pool\n0,0,c,,,,pool\n");
        match parse_manifest(text.as_bytes()) {
            Err(Error::DuplicateFrameId { line, id }) => {
                assert_eq!(line, 4);
                assert_eq!(id, FrameId::new(0, 0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_tag_and_missing_column() {
        let text = format!("{HEAD}0,0,a,,,,train\n");
        assert!(matches!(parse_manifest(text.as_bytes()), Err(Error::BadSplitTag { line: 2, .. })));
        let text = "video,index,feature_path,probmap_path,label_path,split\n0,0,a,,,pool\n";
        assert!(matches!(
            parse_manifest(text.as_bytes()),
            Err(Error::MissingColumn { column, .. }) if column == "pixel_path"
        ));
    }

    #[test]
    fn render_round_trip() {
        let text = format!("{HEAD}0,0,f/a.tnsr,,l.tnsr,,labeled\n3,7,f/b.tnsr,p.tnsr,,px.tnsr,test\n");
        let rows: Vec<_> = parse_manifest(text.as_bytes()).unwrap().into_iter().map(|(_, r)| r).collect();
        let out = render_manifest(&rows).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }
}
