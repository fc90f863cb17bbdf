//! Quadrature Gabor filter banks in the HMAX/BIF parameterization.
//!
//! For a kernel of odd side `size` and orientation `theta`, with `(x, y)`
//! measured from the kernel center,
//!
//! ```text
//! X = x cos(theta) + y sin(theta)
//! Y = -x sin(theta) + y cos(theta)
//! even(x, y) = exp(-(X^2 + gamma^2 Y^2) / (2 sigma^2)) * cos(2 pi X / lambda)
//! odd(x, y)  = exp(-(X^2 + gamma^2 Y^2) / (2 sigma^2)) * sin(2 pi X / lambda)
//! ```
//!
//! with `sigma = a size^2 + b size + c` and `lambda = sigma / ratio`. Each
//! kernel has its mean removed and is scaled to unit L2 norm.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaborParams {
    /// Spatial aspect ratio of the Gaussian envelope.
    pub gamma: f64,
    /// `[a, b, c]` in `sigma = a size^2 + b size + c`.
    pub sigma_coefficients: [f64; 3],
    /// `sigma / lambda`.
    pub wavelength_ratio: f64,
}

impl Default for GaborParams {
    fn default() -> Self {
        GaborParams {
            gamma: 0.3,
            sigma_coefficients: [0.0036, 0.35, 0.18],
            wavelength_ratio: 0.8,
        }
    }
}

impl GaborParams {
    pub fn sigma(&self, size: usize) -> f64 {
        let s = size as f64;
        let [a, b, c] = self.sigma_coefficients;
        a * s * s + b * s + c
    }

    pub fn wavelength(&self, size: usize) -> f64 {
        self.sigma(size) / self.wavelength_ratio
    }
}

/// A group of filter sizes whose responses are max-pooled together, plus the
/// square pooling cell used for that group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub sizes: Vec<usize>,
    /// Side of a pooling cell in pixels.
    pub cell: usize,
    /// Distance between neighbouring cell origins.
    pub step: usize,
}

impl Band {
    /// Number of cell origins along one axis of a `crop`-pixel image.
    pub fn cells_per_axis(&self, crop: usize) -> usize {
        if self.cell > crop || self.step == 0 {
            0
        } else {
            (crop - self.cell) / self.step + 1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankConfig {
    pub orientations: usize,
    pub bands: Vec<Band>,
    pub params: GaborParams,
    /// Side of the square image the pooling grid is laid over.
    pub crop_size: usize,
}

impl BankConfig {
    /// Eight orientations, sixteen odd sizes 7..=37 paired into eight bands;
    /// band `b` pools over `6 + 2b` pixel cells with 50% overlap.
    pub fn bif_default() -> Self {
        let bands = (0..8)
            .map(|b| {
                let cell = 6 + 2 * b;
                Band {
                    sizes: vec![7 + 4 * b, 9 + 4 * b],
                    cell,
                    step: cell / 2,
                }
            })
            .collect();
        BankConfig {
            orientations: 8,
            bands,
            params: GaborParams::default(),
            crop_size: crate::features::ALIGNED_SIZE,
        }
    }

    /// Twelve orientations at eight scales (odd sizes 7, 11, ..., 35), one
    /// size per band. Pooling geometry is unused for point sampling.
    pub fn point_texture_default() -> Self {
        let bands = (0..8)
            .map(|s| {
                let size = 7 + 4 * s;
                Band {
                    sizes: vec![size],
                    cell: size,
                    step: size,
                }
            })
            .collect();
        BankConfig {
            orientations: 12,
            bands,
            params: GaborParams::default(),
            crop_size: crate::features::ALIGNED_SIZE,
        }
    }

    /// All filter sizes in band order.
    pub fn sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.bands.iter().flat_map(|b| b.sizes.iter().copied())
    }

    pub fn total_sizes(&self) -> usize {
        self.bands.iter().map(|b| b.sizes.len()).sum()
    }

    /// Pooling cells in the whole grid of each band.
    pub fn cells_per_band(&self) -> Vec<usize> {
        self.bands
            .iter()
            .map(|b| b.cells_per_axis(self.crop_size).pow(2))
            .collect()
    }

    /// MAX and STDDEV for every (band, orientation, cell).
    pub fn bif_dimension(&self) -> usize {
        self.cells_per_band().iter().sum::<usize>() * self.orientations * 2
    }

    pub fn orientation(&self, index: usize) -> f64 {
        PI * index as f64 / self.orientations as f64
    }

    fn validate(&self) -> Result<()> {
        if self.orientations == 0 {
            return Err(Error::InvalidConfig("bank needs at least one orientation".into()));
        }
        if self.bands.is_empty() {
            return Err(Error::InvalidConfig("bank needs at least one band".into()));
        }
        let p = &self.params;
        if !(p.gamma > 0.0) || !(p.wavelength_ratio > 0.0) {
            return Err(Error::InvalidConfig("gamma and wavelength ratio must be positive".into()));
        }
        for (b, band) in self.bands.iter().enumerate() {
            if band.sizes.is_empty() {
                return Err(Error::InvalidConfig(format!("band {b} has no filter sizes")));
            }
            for &size in &band.sizes {
                if size % 2 == 0 {
                    return Err(Error::InvalidConfig(format!(
                        "filter size {size} is even; kernels need a center pixel"
                    )));
                }
                if size < 3 {
                    return Err(Error::InvalidConfig(format!("filter size {size} is below 3")));
                }
                if !(p.sigma(size) > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "sigma for filter size {size} is not positive"
                    )));
                }
            }
            if band.cell == 0 || band.step == 0 {
                return Err(Error::InvalidConfig(format!("band {b} has a zero cell or step")));
            }
        }
        Ok(())
    }
}

/// Even/odd Gabor pair of one size and orientation, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureKernel {
    pub size: usize,
    pub theta: f64,
    pub even: Vec<f64>,
    pub odd: Vec<f64>,
}

impl QuadratureKernel {
    /// Quadrature magnitude `sqrt(even^2 + odd^2)` of the correlation centered
    /// at `(x, y)`, with clamp-to-edge borders.
    ///
    /// The center intensity is subtracted from the patch first. Kernels are
    /// zero-mean so this leaves the response unchanged, and flat regions
    /// come out as exactly zero.
    pub fn magnitude_at(&self, image: &GrayImage, x: usize, y: usize) -> f64 {
        let half = (self.size / 2) as isize;
        let center = image.get(x, y);
        let (mut e, mut o) = (0.0, 0.0);
        let mut k = 0;
        for v in -half..=half {
            for u in -half..=half {
                let d = image.get_clamped(x as isize + u, y as isize + v) - center;
                e += self.even[k] * d;
                o += self.odd[k] * d;
                k += 1;
            }
        }
        e.hypot(o)
    }
}

/// Builds one DC-corrected, unit-norm quadrature pair.
pub fn gabor_kernel(size: usize, theta: f64, params: &GaborParams) -> QuadratureKernel {
    let sigma = params.sigma(size);
    let lambda = params.wavelength(size);
    let gamma2 = params.gamma * params.gamma;
    let half = (size / 2) as f64;
    let (sin, cos) = theta.sin_cos();
    let mut even = Vec::with_capacity(size * size);
    let mut odd = Vec::with_capacity(size * size);
    for row in 0..size {
        for col in 0..size {
            let x = col as f64 - half;
            let y = row as f64 - half;
            let rx = x * cos + y * sin;
            let ry = -x * sin + y * cos;
            let envelope = (-(rx * rx + gamma2 * ry * ry) / (2.0 * sigma * sigma)).exp();
            let phase = 2.0 * PI * rx / lambda;
            even.push(envelope * phase.cos());
            odd.push(envelope * phase.sin());
        }
    }
    zero_mean_unit_norm(&mut even);
    zero_mean_unit_norm(&mut odd);
    QuadratureKernel {
        size,
        theta,
        even,
        odd,
    }
}

fn zero_mean_unit_norm(kernel: &mut [f64]) {
    let mean = kernel.iter().sum::<f64>() / kernel.len() as f64;
    kernel.iter_mut().for_each(|v| *v -= mean);
    let norm = kernel.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        kernel.iter_mut().for_each(|v| *v /= norm);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    config: BankConfig,
    /// Indexed `[band][size within band][orientation]`.
    kernels: Vec<Vec<Vec<QuadratureKernel>>>,
}

impl FilterBank {
    pub fn config(&self) -> &BankConfig {
        &self.config
    }

    pub fn kernel(&self, band: usize, size_index: usize, orientation: usize) -> &QuadratureKernel {
        &self.kernels[band][size_index][orientation]
    }

    pub fn band_kernels(&self, band: usize) -> &[Vec<QuadratureKernel>] {
        &self.kernels[band]
    }

    /// Kernels across all sizes in band order, each with its orientations.
    pub fn scales(&self) -> impl Iterator<Item = &[QuadratureKernel]> + '_ {
        self.kernels.iter().flatten().map(Vec::as_slice)
    }

    /// Individual even and odd kernels.
    pub fn kernel_count(&self) -> usize {
        self.kernels
            .iter()
            .flatten()
            .map(|per_orientation| per_orientation.len() * 2)
            .sum()
    }
}

pub fn build_gabor_bank(config: &BankConfig) -> Result<FilterBank> {
    config.validate()?;
    let kernels = config
        .bands
        .iter()
        .map(|band| {
            band.sizes
                .iter()
                .map(|&size| {
                    (0..config.orientations)
                        .map(|o| gabor_kernel(size, config.orientation(o), &config.params))
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(FilterBank {
        config: config.clone(),
        kernels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_bank_has_256_kernels() {
        let bank = build_gabor_bank(&BankConfig::bif_default()).unwrap();
        assert_eq!(bank.kernel_count(), 8 * 2 * 8 * 2);
        let sizes: Vec<usize> = bank.config().sizes().collect();
        assert_eq!(sizes, (7..=37).step_by(2).collect::<Vec<_>>());
    }

    #[test]
    fn kernels_are_zero_mean_and_unit_norm() {
        for config in [BankConfig::bif_default(), BankConfig::point_texture_default()] {
            let bank = build_gabor_bank(&config).unwrap();
            for scale in bank.scales() {
                for k in scale {
                    assert_abs_diff_eq!(k.even.iter().sum::<f64>(), 0.0, epsilon = 1e-9);
                    assert_abs_diff_eq!(k.odd.iter().sum::<f64>(), 0.0, epsilon = 1e-9);
                    let norm: f64 = k.even.iter().map(|v| v * v).sum();
                    assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn opposite_orientation_flips_only_the_odd_kernel() {
        // Rotating by pi negates (X, Y): the Gaussian envelope and cosine are
        // even in X, the sine is odd.
        let params = GaborParams::default();
        for theta in [0.0, 0.4, 1.3, 2.9] {
            let a = gabor_kernel(11, theta, &params);
            let b = gabor_kernel(11, theta + PI, &params);
            for (x, y) in a.even.iter().zip(&b.even) {
                assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
            }
            for (x, y) in a.odd.iter().zip(&b.odd) {
                assert_abs_diff_eq!(*x, -*y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn raw_formula_matches_kernel_before_normalization() {
        // Recompute one size-7 kernel straight from the formula and compare
        // after applying the same normalization by hand.
        let params = GaborParams::default();
        let theta = PI / 8.0;
        let k = gabor_kernel(7, theta, &params);
        let sigma = 0.0036 * 49.0 + 0.35 * 7.0 + 0.18;
        let lambda = sigma / 0.8;
        let mut raw = Vec::new();
        for row in 0..7 {
            for col in 0..7 {
                let (x, y) = (col as f64 - 3.0, row as f64 - 3.0);
                let rx = x * theta.cos() + y * theta.sin();
                let ry = -x * theta.sin() + y * theta.cos();
                let env = (-(rx * rx + 0.09 * ry * ry) / (2.0 * sigma * sigma)).exp();
                raw.push(env * (2.0 * PI * rx / lambda).cos());
            }
        }
        let mean = raw.iter().sum::<f64>() / 49.0;
        let centered: Vec<f64> = raw.iter().map(|v| v - mean).collect();
        let norm = centered.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (a, b) in k.even.iter().zip(centered.iter().map(|v| v / norm)) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_even_and_tiny_sizes() {
        let mut config = BankConfig::bif_default();
        config.bands[3].sizes[0] = 14;
        assert!(matches!(build_gabor_bank(&config), Err(Error::InvalidConfig(_))));
        config.bands[3].sizes[0] = 1;
        assert!(build_gabor_bank(&config).is_err());
        let mut config = BankConfig::bif_default();
        config.orientations = 0;
        assert!(build_gabor_bank(&config).is_err());
    }

    #[test]
    fn default_bif_dimension() {
        // cells per axis for cell/step (6,3) (8,4) ... (20,10) on 60 px:
        // 19, 14, 11, 9, 7, 6, 5, 5
        let config = BankConfig::bif_default();
        let per_axis: Vec<usize> = config.bands.iter().map(|b| b.cells_per_axis(60)).collect();
        assert_eq!(per_axis, vec![19, 14, 11, 9, 7, 6, 5, 5]);
        let cells: usize = per_axis.iter().map(|n| n * n).sum();
        assert_eq!(cells, 894);
        assert_eq!(config.bif_dimension(), 894 * 8 * 2);
    }
}
