//! Access to per-frame artifacts (features, probability maps, masks).

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::tensor::{read_tensor, TensorData};
use crate::model::{FeatureVector, FrameId, FrameRecord, LabelMask, PixelTensor, ProbMap};

pub trait ArtifactStore {
    fn feature(&self, id: FrameId) -> Result<FeatureVector>;
    fn probmap(&self, id: FrameId) -> Result<ProbMap>;
}

/// Artifacts held in memory, as produced by the simulator.
#[derive(Clone, Debug, Default)]
pub struct MemoryStore {
    pub features: HashMap<FrameId, FeatureVector>,
    pub probmaps: HashMap<FrameId, ProbMap>,
}

impl ArtifactStore for MemoryStore {
    fn feature(&self, id: FrameId) -> Result<FeatureVector> {
        self.features.get(&id).cloned().ok_or(Error::MissingFeature(id))
    }

    fn probmap(&self, id: FrameId) -> Result<ProbMap> {
        self.probmaps.get(&id).cloned().ok_or(Error::MissingProbMap(id))
    }
}

/// Artifacts read on demand from TNSR files named in a manifest.
#[derive(Clone, Debug)]
pub struct FileStore {
    base: PathBuf,
    records: HashMap<FrameId, FrameRecord>,
}

impl FileStore {
    pub fn new(base: impl Into<PathBuf>, records: &[FrameRecord]) -> Self {
        FileStore {
            base: base.into(),
            records: records.iter().map(|r| (r.id, r.clone())).collect(),
        }
    }

    pub fn resolve(&self, key: &Path) -> PathBuf {
        self.base.join(key)
    }

    fn record(&self, id: FrameId) -> Result<&FrameRecord> {
        self.records.get(&id).ok_or(Error::MissingFeature(id))
    }

    pub fn label(&self, id: FrameId, k: usize) -> Result<LabelMask> {
        let key = self.record(id)?.label_ref.as_ref().ok_or(Error::MissingLabel(id))?;
        let t = read_tensor(self.resolve(key))?;
        let dims = t.dims_usize();
        if dims.len() != 2 {
            return Err(Error::ShapeMismatch { expected: vec![0, 0], found: dims });
        }
        let classes = match t.data {
            TensorData::U16(v) => v,
            other => other.to_f64().into_iter().map(|v| v as u16).collect(),
        };
        LabelMask::new(dims[0], dims[1], classes, k).map_err(|e| Error::at_frame(id, e))
    }

    /// Pixel tensor as C x H x W in [0, 1]; integer tensors are scaled by 1/255.
    pub fn pixels(&self, id: FrameId) -> Result<PixelTensor> {
        let key = self.record(id)?.pixel_ref.as_ref().ok_or(Error::MissingPixels(id))?;
        let t = read_tensor(self.resolve(key))?;
        let dims = t.dims_usize();
        let (c, h, w) = match dims[..] {
            [h, w] => (1, h, w),
            [c, h, w] => (c, h, w),
            _ => return Err(Error::at_frame(id, Error::ShapeMismatch { expected: vec![0, 0, 0], found: dims })),
        };
        let data = match t.data {
            TensorData::U16(v) => v.into_iter().map(|p| p as f64 / 255.0).collect(),
            other => other.to_f64(),
        };
        PixelTensor::new(c, h, w, data).map_err(|e| Error::at_frame(id, e))
    }
}

impl ArtifactStore for FileStore {
    fn feature(&self, id: FrameId) -> Result<FeatureVector> {
        let rec = self.record(id)?;
        let t = read_tensor(self.resolve(&rec.feature_ref))?;
        FeatureVector::new(t.data.to_f64()).map_err(|e| Error::at_frame(id, e))
    }

    fn probmap(&self, id: FrameId) -> Result<ProbMap> {
        let key = self
            .records
            .get(&id)
            .and_then(|r| r.probmap_ref.as_ref())
            .ok_or(Error::MissingProbMap(id))?;
        let t = read_tensor(self.resolve(key))?;
        let dims = t.dims_usize();
        let [k, h, w] = dims[..] else {
            return Err(Error::at_frame(id, Error::ShapeMismatch { expected: vec![0, 0, 0], found: dims }));
        };
        ProbMap::new(k, h, w, t.data.to_f64()).map_err(|e| Error::at_frame(id, e))
    }
}
