//! Feature extraction: pairwise landmark distances, axis offsets from the
//! mean shape, pooled Gabor texture on an aligned crop (BIF), and Gabor
//! magnitudes sampled at each landmark.
//!
//! Every vector carries a shared [`FeatureSpec`] describing which extractor
//! produced each coordinate.

mod gabor;
mod shape;
mod texture;

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::shapes::{self, LandmarkSet, MeanShape, IBUG_POINT_COUNT};

pub use gabor::{build_gabor_bank, gabor_kernel, BankConfig, Band, FilterBank, GaborParams, QuadratureKernel};
pub use shape::{axis_distances, pair_at, pair_count, pairs, point_distances};
pub use texture::{
    align_face, align_transform, bif_features, point_texture, SimilarityTransform, ALIGNED_LEFT_EYE,
    ALIGNED_MOUTH, ALIGNED_RIGHT_EYE, ALIGNED_SIZE,
};

/// One contiguous run of coordinates produced by a single extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureBlock {
    PointDistances { points: usize },
    AxisDistances { points: usize },
    Bif { bank: BankConfig },
    PointTexture { points: usize, bank: BankConfig },
}

impl FeatureBlock {
    pub fn dimension(&self) -> usize {
        match self {
            FeatureBlock::PointDistances { points } => pair_count(*points),
            FeatureBlock::AxisDistances { points } => 2 * points,
            FeatureBlock::Bif { bank } => bank.bif_dimension(),
            FeatureBlock::PointTexture { points, bank } => {
                points * bank.total_sizes() * bank.orientations
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeatureBlock::PointDistances { .. } => "distances",
            FeatureBlock::AxisDistances { .. } => "axis",
            FeatureBlock::Bif { .. } => "bif",
            FeatureBlock::PointTexture { .. } => "point_texture",
        }
    }

    fn describe(&self, local: usize) -> Coordinate {
        match self {
            FeatureBlock::PointDistances { points } => {
                let (i, j) = pair_at(*points, local).expect("index within block");
                Coordinate::PairDistance { i, j }
            }
            FeatureBlock::AxisDistances { .. } => Coordinate::AxisOffset {
                point: local / 2,
                axis: if local % 2 == 0 { Axis::X } else { Axis::Y },
            },
            FeatureBlock::Bif { bank } => {
                let statistic = if local % 2 == 0 { Pooling::Max } else { Pooling::StdDev };
                let mut rest = local / 2;
                let mut band = 0;
                for (b, cells) in bank.cells_per_band().into_iter().enumerate() {
                    let span = cells * bank.orientations;
                    if rest < span {
                        band = b;
                        break;
                    }
                    rest -= span;
                }
                let cells = bank.cells_per_band()[band];
                Coordinate::Bif {
                    band,
                    orientation: rest / cells,
                    cell: rest % cells,
                    statistic,
                }
            }
            FeatureBlock::PointTexture { bank, .. } => {
                let per_point = bank.total_sizes() * bank.orientations;
                Coordinate::PointTexture {
                    point: local / per_point,
                    scale: (local % per_point) / bank.orientations,
                    orientation: local % bank.orientations,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pooling {
    Max,
    StdDev,
}

/// What a single coordinate of a feature vector measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    PairDistance { i: usize, j: usize },
    AxisOffset { point: usize, axis: Axis },
    Bif { band: usize, orientation: usize, cell: usize, statistic: Pooling },
    PointTexture { point: usize, scale: usize, orientation: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    blocks: Vec<FeatureBlock>,
}

impl FeatureSpec {
    pub fn new(blocks: Vec<FeatureBlock>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::EmptyInput("feature spec without blocks".into()));
        }
        Ok(FeatureSpec { blocks })
    }

    pub fn point_distances(points: usize) -> Self {
        FeatureSpec {
            blocks: vec![FeatureBlock::PointDistances { points }],
        }
    }

    pub fn axis_distances(points: usize) -> Self {
        FeatureSpec {
            blocks: vec![FeatureBlock::AxisDistances { points }],
        }
    }

    pub fn bif(bank: &BankConfig) -> Self {
        FeatureSpec {
            blocks: vec![FeatureBlock::Bif { bank: bank.clone() }],
        }
    }

    pub fn point_texture(points: usize, bank: &BankConfig) -> Self {
        FeatureSpec {
            blocks: vec![FeatureBlock::PointTexture {
                points,
                bank: bank.clone(),
            }],
        }
    }

    /// The feature spec an extractor for `set` produces on 68-point input.
    pub fn for_feature_set(set: FeatureSet, bif: &BankConfig, texture: &BankConfig) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::InvalidConfig("no feature family selected".into()));
        }
        let n = IBUG_POINT_COUNT;
        let mut blocks = Vec::new();
        if set.distances {
            blocks.push(FeatureBlock::PointDistances { points: n });
        }
        if set.axis {
            blocks.push(FeatureBlock::AxisDistances { points: n });
        }
        if set.bif {
            blocks.push(FeatureBlock::Bif { bank: bif.clone() });
        }
        if set.point_texture {
            blocks.push(FeatureBlock::PointTexture {
                points: n,
                bank: texture.clone(),
            });
        }
        FeatureSpec::new(blocks)
    }

    pub fn blocks(&self) -> &[FeatureBlock] {
        &self.blocks
    }

    pub fn total_dimension(&self) -> usize {
        self.blocks.iter().map(FeatureBlock::dimension).sum()
    }

    /// `(offset, block)` for every block.
    pub fn block_offsets(&self) -> impl Iterator<Item = (usize, &FeatureBlock)> + '_ {
        self.blocks.iter().scan(0, |offset, block| {
            let start = *offset;
            *offset += block.dimension();
            Some((start, block))
        })
    }

    /// Offset and point count of the first pairwise-distance block.
    pub fn distance_block(&self) -> Option<(usize, usize)> {
        self.block_offsets().find_map(|(offset, block)| match block {
            FeatureBlock::PointDistances { points } => Some((offset, *points)),
            _ => None,
        })
    }

    /// Landmark pair behind each coordinate of the distance block, in
    /// coordinate order.
    pub fn pair_index(&self) -> Option<Vec<(usize, usize)>> {
        self.distance_block().map(|(_, points)| pairs(points).collect())
    }

    /// Describes coordinate `index`, or `None` when out of range.
    pub fn describe(&self, index: usize) -> Option<(usize, Coordinate)> {
        self.block_offsets()
            .enumerate()
            .find(|(_, (offset, block))| index >= *offset && index < offset + block.dimension())
            .map(|(b, (offset, block))| (b, block.describe(index - offset)))
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("feature spec serializes");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn concat(specs: &[&FeatureSpec]) -> FeatureSpec {
        FeatureSpec {
            blocks: specs.iter().flat_map(|s| s.blocks.iter().cloned()).collect(),
        }
    }
}

/// Flat feature values tied to the feature spec that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    spec: Arc<FeatureSpec>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, spec: Arc<FeatureSpec>) -> Result<Self> {
        if values.len() != spec.total_dimension() {
            return Err(Error::DimensionMismatch {
                expected: spec.total_dimension(),
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!("feature {i} is not finite")));
        }
        Ok(FeatureVector { values, spec })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn spec(&self) -> &Arc<FeatureSpec> {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Concatenates vectors block-wise under a merged spec.
pub fn concat_features(blocks: &[FeatureVector]) -> Result<FeatureVector> {
    match blocks {
        [] => Err(Error::EmptyInput("nothing to concatenate".into())),
        [single] => Ok(single.clone()),
        _ => {
            let specs: Vec<&FeatureSpec> = blocks.iter().map(|b| b.spec.as_ref()).collect();
            let spec = Arc::new(FeatureSpec::concat(&specs));
            let values = blocks.iter().flat_map(|b| b.values.iter().copied()).collect();
            FeatureVector::new(values, spec)
        }
    }
}

/// Which feature families to extract. Blocks always appear in the order
/// distances, axis, BIF, point texture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub distances: bool,
    pub axis: bool,
    pub bif: bool,
    pub point_texture: bool,
}

impl FeatureSet {
    pub const DISTANCES: FeatureSet = FeatureSet {
        distances: true,
        axis: false,
        bif: false,
        point_texture: false,
    };

    pub fn is_empty(&self) -> bool {
        !(self.distances || self.axis || self.bif || self.point_texture)
    }

    pub fn needs_image(&self) -> bool {
        self.bif || self.point_texture
    }
}

/// Runs the configured extractors over 68-point landmark sets.
///
/// Shapes are size-normalized and up-righted before the shape features are
/// taken; pairwise distances are rotation invariant so up-righting does not
/// affect them.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    set: FeatureSet,
    spec: Arc<FeatureSpec>,
    mean: Option<MeanShape>,
    bif_bank: Option<FilterBank>,
    texture_bank: Option<FilterBank>,
}

impl FeatureExtractor {
    /// `mean` is required when axis features are selected.
    pub fn new(
        set: FeatureSet,
        bif: &BankConfig,
        texture: &BankConfig,
        mean: Option<MeanShape>,
    ) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::InvalidConfig("no feature family selected".into()));
        }
        if set.axis {
            match &mean {
                Some(m) if m.point_count() == IBUG_POINT_COUNT => {}
                Some(m) => {
                    return Err(Error::DimensionMismatch {
                        expected: IBUG_POINT_COUNT,
                        actual: m.point_count(),
                    })
                }
                None => {
                    return Err(Error::InvalidConfig(
                        "axis features need a training mean shape".into(),
                    ))
                }
            }
        }
        let spec = FeatureSpec::for_feature_set(set, bif, texture)?;
        let bif_bank = if set.bif { Some(build_gabor_bank(bif)?) } else { None };
        let texture_bank = if set.point_texture {
            Some(build_gabor_bank(texture)?)
        } else {
            None
        };
        Ok(FeatureExtractor {
            set,
            spec: Arc::new(spec),
            mean: if set.axis { mean } else { None },
            bif_bank,
            texture_bank,
        })
    }

    pub fn spec(&self) -> &Arc<FeatureSpec> {
        &self.spec
    }

    pub fn feature_set(&self) -> FeatureSet {
        self.set
    }

    pub fn mean_shape(&self) -> Option<&MeanShape> {
        self.mean.as_ref()
    }

    pub fn extract(&self, landmarks: &LandmarkSet, image: Option<&GrayImage>) -> Result<FeatureVector> {
        if landmarks.point_count() != IBUG_POINT_COUNT {
            return Err(Error::UnsupportedTopology {
                expected: IBUG_POINT_COUNT,
                actual: landmarks.point_count(),
            });
        }
        let shape = shapes::upright(&shapes::normalize_size(landmarks)?)?;
        let mut values = Vec::with_capacity(self.spec.total_dimension());
        if self.set.distances {
            values.extend(shape::distance_values(shape.points()));
        }
        if let Some(mean) = &self.mean {
            values.extend(shape::axis_values(shape.points(), mean.points()));
        }
        if self.set.needs_image() {
            let image = image.ok_or_else(|| {
                Error::InvalidConfig("texture features need an image".into())
            })?;
            if let Some(bank) = &self.bif_bank {
                let aligned = align_face(image, landmarks)?;
                values.extend(texture::bif_values(&aligned, bank)?);
            }
            if let Some(bank) = &self.texture_bank {
                values.extend(texture::point_texture_values(image, landmarks, bank)?);
            }
        }
        FeatureVector::new(values, Arc::clone(&self.spec))
    }
}

/// Writes one row per sample, `label<TAB>v0<TAB>v1...`, for inspection
/// outside this crate.
pub fn write_feature_matrix<'a, W: Write>(
    out: &mut W,
    rows: impl IntoIterator<Item = (&'a str, &'a FeatureVector)>,
) -> Result<()> {
    for (label, vector) in rows {
        write!(out, "{label}")?;
        for v in vector.values() {
            write!(out, "\t{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Structured-text companion to [`write_feature_matrix`].
pub fn write_feature_spec<W: Write>(out: &mut W, spec: &FeatureSpec) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, spec)?;
    writeln!(out)?;
    Ok(())
}
