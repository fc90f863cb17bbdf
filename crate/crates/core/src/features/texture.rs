use std::sync::Arc;

use crate::error::{Error, Result};
use crate::features::{FeatureSpec, FeatureVector, FilterBank};
use crate::image::GrayImage;
use crate::shapes::{LandmarkSet, Point, IBUG_POINT_COUNT, LEFT_EYE, MOUTH, RIGHT_EYE};

/// Side of the aligned face crop.
pub const ALIGNED_SIZE: usize = 60;
pub const ALIGNED_LEFT_EYE: Point = Point::new(18.0, 20.0);
pub const ALIGNED_RIGHT_EYE: Point = Point::new(42.0, 20.0);
pub const ALIGNED_MOUTH: Point = Point::new(30.0, 48.0);

/// `(x, y) -> (a x - b y + tx, b x + a y + ty)`: uniform scale, rotation and
/// translation, written as complex multiply-add.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityTransform {
    pub a: f64,
    pub b: f64,
    pub tx: f64,
    pub ty: f64,
}

impl SimilarityTransform {
    pub fn apply(&self, p: Point) -> Point {
        Point::new(
            self.a * p.x - self.b * p.y + self.tx,
            self.b * p.x + self.a * p.y + self.ty,
        )
    }

    pub fn apply_inverse(&self, p: Point) -> Point {
        let norm = self.a * self.a + self.b * self.b;
        let (dx, dy) = (p.x - self.tx, p.y - self.ty);
        Point::new(
            (self.a * dx + self.b * dy) / norm,
            (-self.b * dx + self.a * dy) / norm,
        )
    }

    /// Least-squares similarity taking `from[i]` towards `to[i]`.
    pub fn fit(from: &[Point], to: &[Point]) -> Result<Self> {
        if from.len() != to.len() || from.len() < 2 {
            return Err(Error::InvalidValue("similarity fit needs matching point pairs".into()));
        }
        let n = from.len() as f64;
        let mean = |ps: &[Point]| {
            let (sx, sy) = ps.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
            Point::new(sx / n, sy / n)
        };
        let (fc, tc) = (mean(from), mean(to));
        let (mut re, mut im, mut denom) = (0.0, 0.0, 0.0);
        for (f, t) in from.iter().zip(to) {
            let (zx, zy) = (f.x - fc.x, f.y - fc.y);
            let (wx, wy) = (t.x - tc.x, t.y - tc.y);
            re += zx * wx + zy * wy;
            im += zx * wy - zy * wx;
            denom += zx * zx + zy * zy;
        }
        if !(denom > 1e-18) {
            return Err(Error::DegenerateShape("source points coincide".into()));
        }
        let (a, b) = (re / denom, im / denom);
        Ok(SimilarityTransform {
            a,
            b,
            tx: tc.x - (a * fc.x - b * fc.y),
            ty: tc.y - (b * fc.x + a * fc.y),
        })
    }
}

/// Similarity taking the eye centers and mouth center of `landmarks` to the
/// canonical crop positions.
pub fn align_transform(landmarks: &LandmarkSet) -> Result<SimilarityTransform> {
    if landmarks.point_count() != IBUG_POINT_COUNT {
        return Err(Error::UnsupportedTopology {
            expected: IBUG_POINT_COUNT,
            actual: landmarks.point_count(),
        });
    }
    let left = landmarks.region_center(LEFT_EYE);
    let right = landmarks.region_center(RIGHT_EYE);
    if !(left.distance(right) > 1e-9) {
        return Err(Error::DegenerateShape("eye centers coincide".into()));
    }
    let mouth = landmarks.region_center(MOUTH);
    SimilarityTransform::fit(
        &[left, right, mouth],
        &[ALIGNED_LEFT_EYE, ALIGNED_RIGHT_EYE, ALIGNED_MOUTH],
    )
}

/// Resamples a 60x60 face crop aligned on the eyes and mouth.
pub fn align_face(image: &GrayImage, landmarks: &LandmarkSet) -> Result<GrayImage> {
    let transform = align_transform(landmarks)?;
    GrayImage::from_fn(ALIGNED_SIZE, ALIGNED_SIZE, |x, y| {
        let src = transform.apply_inverse(Point::new(x as f64, y as f64));
        image.sample_bilinear(src.x, src.y)
    })
}

fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

pub(crate) fn bif_values(image: &GrayImage, bank: &FilterBank) -> Result<Vec<f64>> {
    let config = bank.config();
    let crop = config.crop_size;
    if image.width() != crop || image.height() != crop {
        return Err(Error::InvalidValue(format!(
            "BIF input must be {crop}x{crop}, got {}x{}",
            image.width(),
            image.height()
        )));
    }
    let mut out = Vec::with_capacity(config.bif_dimension());
    let mut pooled = vec![0.0; crop * crop];
    let mut cell_values = Vec::new();
    for (b, band) in config.bands.iter().enumerate() {
        let sizes = bank.band_kernels(b);
        let per_axis = band.cells_per_axis(crop);
        for o in 0..config.orientations {
            // max over the band's filter sizes, per pixel
            for y in 0..crop {
                for x in 0..crop {
                    pooled[y * crop + x] = sizes
                        .iter()
                        .map(|per_orientation| per_orientation[o].magnitude_at(image, x, y))
                        .fold(0.0, f64::max);
                }
            }
            for cy in 0..per_axis {
                for cx in 0..per_axis {
                    let (x0, y0) = (cx * band.step, cy * band.step);
                    cell_values.clear();
                    for y in y0..y0 + band.cell {
                        cell_values.extend_from_slice(&pooled[y * crop + x0..y * crop + x0 + band.cell]);
                    }
                    out.push(cell_values.iter().copied().fold(0.0, f64::max));
                    out.push(population_std(&cell_values));
                }
            }
        }
    }
    Ok(out)
}

/// Pooled Gabor magnitudes over an aligned crop.
///
/// For each band and orientation the quadrature magnitude is max-pooled over
/// the band's filter sizes, then summarized over square cells by MAX and
/// population STDDEV. Layout is `(band, orientation, cell row-major,
/// {MAX, STDDEV})`.
pub fn bif_features(image: &GrayImage, bank: &FilterBank) -> Result<FeatureVector> {
    let values = bif_values(image, bank)?;
    FeatureVector::new(values, Arc::new(FeatureSpec::bif(bank.config())))
}

pub(crate) fn point_texture_values(
    image: &GrayImage,
    landmarks: &LandmarkSet,
    bank: &FilterBank,
) -> Result<Vec<f64>> {
    let orientations = bank.config().orientations;
    let mut out = Vec::with_capacity(landmarks.point_count() * bank.config().total_sizes() * orientations);
    let max_x = (image.width() - 1) as f64;
    let max_y = (image.height() - 1) as f64;
    for p in landmarks.points() {
        let x = p.x.round().clamp(0.0, max_x) as usize;
        let y = p.y.round().clamp(0.0, max_y) as usize;
        for scale in bank.scales() {
            out.extend(scale.iter().map(|k| k.magnitude_at(image, x, y)));
        }
    }
    Ok(out)
}

/// Gabor magnitude at every landmark (rounded to the nearest pixel and
/// clamped into the image), ordered `(point, scale, orientation)`.
pub fn point_texture(image: &GrayImage, landmarks: &LandmarkSet, bank: &FilterBank) -> Result<FeatureVector> {
    let values = point_texture_values(image, landmarks, bank)?;
    let spec = FeatureSpec::point_texture(landmarks.point_count(), bank.config());
    FeatureVector::new(values, Arc::new(spec))
}
