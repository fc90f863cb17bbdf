//! Seeded synthetic expression dataset.
//!
//! Each sample starts from a frontal 68-point template, is deformed by a
//! class-specific displacement pattern loosely modelled on facial action
//! units (lip corner puller and cheek raiser for happiness, inner brow
//! raiser with lip corner depressor for sadness, and so on), then gets
//! Gaussian jitter and a random similarity transform into pixel space.

use std::fs;
use std::path::Path;

use landmark_emotion::image::GrayImage;
use landmark_emotion::shapes::{self, LandmarkSet, Point, IBUG_POINT_COUNT};
use landmark_emotion::Emotion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::manifest::{DatasetManifest, ManifestEntry, Split};
use crate::CliError;

pub const IMAGE_SIZE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub seed: u64,
    pub per_class: usize,
    pub images: bool,
    /// Standard deviation of per-coordinate jitter, in template units
    /// (the template's chin sits one unit below its centre).
    pub jitter: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            seed: 0,
            per_class: 30,
            images: false,
            jitter: 0.012,
        }
    }
}

fn side(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Displacement of every template point for `emotion` at full intensity.
pub fn displacement(emotion: Emotion, template: &[Point]) -> Vec<Point> {
    let mut d = vec![Point::default(); IBUG_POINT_COUNT];
    let mut shift = |idx: &[usize], f: &dyn Fn(Point) -> (f64, f64)| {
        for &i in idx {
            let (dx, dy) = f(template[i]);
            d[i].x += dx;
            d[i].y += dy;
        }
    };
    let brows: Vec<usize> = (17..27).collect();
    let inner_brows = [20, 21, 22, 23];
    let upper_lids = [37, 38, 43, 44];
    let lower_lids = [40, 41, 46, 47];
    let corners = [48, 54, 60, 64];
    let upper_lip = [49, 50, 51, 52, 53, 61, 62, 63];
    let lower_lip = [55, 56, 57, 58, 59, 65, 66, 67];
    let lower_jaw: Vec<usize> = (4..13).collect();
    match emotion {
        Emotion::Neutral => {}
        Emotion::Happy => {
            shift(&corners, &|p| (0.07 * side(p.x), -0.09));
            shift(&lower_lids, &|_| (0.0, -0.025));
            shift(&[50, 52, 58, 56], &|p| (0.02 * side(p.x), -0.03));
        }
        Emotion::Sad => {
            shift(&inner_brows, &|p| (-0.02 * side(p.x), -0.07));
            shift(&[17, 26], &|_| (0.0, 0.03));
            shift(&corners, &|_| (0.0, 0.08));
            shift(&[57, 66], &|_| (0.0, -0.02));
        }
        Emotion::Surprise => {
            shift(&brows, &|_| (0.0, -0.11));
            shift(&upper_lids, &|_| (0.0, -0.04));
            shift(&lower_lip, &|_| (0.0, 0.14));
            shift(&lower_jaw, &|_| (0.0, 0.12));
            shift(&corners, &|p| (-0.04 * side(p.x), 0.06));
        }
        Emotion::Fear => {
            shift(&inner_brows, &|p| (-0.04 * side(p.x), -0.08));
            shift(&[17, 18, 25, 26], &|_| (0.0, -0.03));
            shift(&upper_lids, &|_| (0.0, -0.035));
            shift(&corners, &|p| (0.09 * side(p.x), 0.02));
            shift(&lower_lip, &|_| (0.0, 0.05));
        }
        Emotion::Angry => {
            shift(&brows, &|p| (-0.04 * side(p.x), 0.06));
            shift(&inner_brows, &|_| (0.0, 0.03));
            shift(&upper_lids, &|_| (0.0, 0.02));
            shift(&upper_lip, &|_| (0.0, 0.025));
            shift(&lower_lip, &|_| (0.0, -0.035));
            shift(&corners, &|p| (-0.03 * side(p.x), 0.0));
        }
        Emotion::Disgust => {
            shift(&upper_lip, &|_| (0.0, -0.07));
            shift(&[31, 32, 33, 34, 35], &|_| (0.0, -0.035));
            shift(&brows, &|p| (-0.015 * side(p.x), 0.035));
            shift(&[48, 54], &|_| (0.0, 0.03));
            shift(&lower_lids, &|_| (0.0, -0.02));
        }
    }
    d
}

fn split_sizes(n: usize) -> (usize, usize) {
    let train = ((n as f64 * 0.6).round() as usize).min(n);
    let validate = ((n as f64 * 0.2).round() as usize).min(n - train);
    (train, validate)
}

fn render(landmarks: &LandmarkSet, rng: &mut ChaCha8Rng) -> Result<GrayImage, CliError> {
    let noise = Normal::new(0.0, 0.02).expect("valid normal");
    let pts = landmarks.points();
    let mut pixels = Vec::with_capacity(IMAGE_SIZE * IMAGE_SIZE);
    for y in 0..IMAGE_SIZE {
        for x in 0..IMAGE_SIZE {
            let mut v = 0.45 + 0.2 * x as f64 / IMAGE_SIZE as f64;
            for p in pts {
                let r2 = (x as f64 - p.x).powi(2) + (y as f64 - p.y).powi(2);
                if r2 < 64.0 {
                    v -= 0.4 * (-r2 / 8.0).exp();
                }
            }
            pixels.push((v + noise.sample(rng)).clamp(0.0, 1.0));
        }
    }
    Ok(GrayImage::new(IMAGE_SIZE, IMAGE_SIZE, pixels)?)
}

/// One deformed, transformed landmark set.
fn synth_shape(emotion: Emotion, template: &[Point], options: &SynthOptions, rng: &mut ChaCha8Rng) -> LandmarkSet {
    let jitter = Normal::new(0.0, options.jitter).expect("valid normal");
    let pattern = displacement(emotion, template);
    let intensity = rng.random_range(0.7..1.3);
    let width = 1.0 + 0.03 * rng.random_range(-1.0..1.0);
    let scale = rng.random_range(70.0..110.0);
    let angle: f64 = rng.random_range(-0.25..0.25);
    let tx = IMAGE_SIZE as f64 / 2.0 + rng.random_range(-15.0..15.0);
    let ty = IMAGE_SIZE as f64 / 2.0 + rng.random_range(-15.0..15.0);
    let (sin, cos) = angle.sin_cos();
    let points = template
        .iter()
        .zip(&pattern)
        .map(|(p, d)| {
            let x = width * (p.x + intensity * d.x) + jitter.sample(rng);
            let y = p.y + intensity * d.y + jitter.sample(rng);
            Point::new(scale * (cos * x - sin * y) + tx, scale * (sin * x + cos * y) + ty)
        })
        .collect();
    LandmarkSet::new(points).expect("finite synthetic points")
}

/// Writes `pts/`, optionally `img/`, `manifest.csv` and a starter
/// `config.txt` under `out`. Output bytes depend only on `options`.
pub fn synth_dataset(out: &Path, options: &SynthOptions) -> Result<DatasetManifest, CliError> {
    if options.per_class == 0 {
        return Err(CliError::Usage("per-class count must be at least 1".into()));
    }
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |e| CliError::Io { path, source: e }
    };
    let pts_dir = out.join("pts");
    let img_dir = out.join("img");
    fs::create_dir_all(&pts_dir).map_err(io(&pts_dir))?;
    if options.images {
        fs::create_dir_all(&img_dir).map_err(io(&img_dir))?;
    }

    let template = shapes::reference_face();
    let template = template.points();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let (n_train, n_val) = split_sizes(options.per_class);
    let mut entries = Vec::new();
    for emotion in Emotion::ALL {
        for i in 0..options.per_class {
            let id = format!("{}_{i:03}", emotion.name().to_ascii_lowercase());
            let shape = synth_shape(emotion, template, options, &mut rng);
            let pts_path = pts_dir.join(format!("{id}.pts"));
            fs::write(&pts_path, shapes::write_pts(&shape)).map_err(io(&pts_path))?;
            let image_path = if options.images {
                let path = img_dir.join(format!("{id}.pgm"));
                let img = render(&shape, &mut rng)?;
                fs::write(&path, img.write_pgm()).map_err(io(&path))?;
                Some(path)
            } else {
                None
            };
            let split = if i < n_train {
                Split::Train
            } else if i < n_train + n_val {
                Split::Validate
            } else {
                Split::Test
            };
            entries.push(ManifestEntry {
                id,
                pts_path: Some(pts_path),
                image_path,
                label: Some(emotion),
                split,
            });
        }
    }
    let manifest = DatasetManifest { entries };
    let manifest_path = out.join("manifest.csv");
    fs::write(&manifest_path, manifest.to_csv(out)?).map_err(io(&manifest_path))?;
    let config_path = out.join("config.txt");
    let features = if options.images { "distances,bif" } else { "distances" };
    let config = format!(
        "# generated with seed {}\nmanifest = manifest.csv\nfeatures = {features}\nmodel = svm\nseed = {}\n",
        options.seed, options.seed
    );
    fs::write(&config_path, config).map_err(io(&config_path))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes_are_sixty_twenty_twenty() {
        assert_eq!(split_sizes(30), (18, 6));
        assert_eq!(split_sizes(10), (6, 2));
        assert_eq!(split_sizes(1), (1, 0));
        assert_eq!(split_sizes(2), (1, 0));
    }

    #[test]
    fn neutral_has_no_displacement_and_others_do() {
        let t = shapes::reference_face();
        for e in Emotion::ALL {
            let moved = displacement(e, t.points()).iter().filter(|p| p.x != 0.0 || p.y != 0.0).count();
            assert_eq!(moved == 0, e == Emotion::Neutral, "{e}");
        }
    }

    #[test]
    fn happy_raises_mouth_corners_and_sad_lowers_them() {
        let t = shapes::reference_face();
        assert!(displacement(Emotion::Happy, t.points())[48].y < 0.0);
        assert!(displacement(Emotion::Sad, t.points())[54].y > 0.0);
    }
}
