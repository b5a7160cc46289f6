//! Denoising stage: Gaussian smoothing and non-local means.
//!
//! All filters use replicate border padding. Kernels are applied as
//! correlations; every kernel built here is symmetric, so that is the same
//! as convolution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio::GrayFrame;

/// Real-valued working image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatFrame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl FloatFrame {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width.checked_mul(height) != Some(data.len()) {
            return Err(Error::param(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite sample {v}")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample with replicate padding for out-of-range coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

impl From<&GrayFrame> for FloatFrame {
    fn from(g: &GrayFrame) -> Self {
        Self {
            width: g.width(),
            height: g.height(),
            data: g.data().iter().map(|&v| f64::from(v)).collect(),
        }
    }
}

/// Square correlation kernel with odd side length.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size == 0 || size.is_multiple_of(2) {
            return Err(Error::param(format!("kernel size must be odd, got {size}")));
        }
        if weights.len() != size * size {
            return Err(Error::param(format!(
                "kernel of size {size} needs {} weights, got {}",
                size * size,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::param("kernel weights must be finite"));
        }
        Ok(Self { size, weights })
    }

    /// The classic integer 5x5 Gaussian approximation divided by 159.
    pub fn gaussian_5x5_159() -> Self {
        const K: [f64; 25] = [
            2., 4., 5., 4., 2., //
            4., 9., 12., 9., 4., //
            5., 12., 15., 12., 5., //
            4., 9., 12., 9., 4., //
            2., 4., 5., 4., 2., //
        ];
        Self {
            size: 5,
            weights: K.iter().map(|v| v / 159.0).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.size + col]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Sampled isotropic Gaussian, normalized to unit sum.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Result<Kernel> {
    if size == 0 || size.is_multiple_of(2) {
        return Err(Error::param(format!("kernel size must be odd, got {size}")));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::param(format!("sigma must be > 0, got {sigma}")));
    }
    let r = (size / 2) as isize;
    let two_s2 = 2.0 * sigma * sigma;
    let mut weights = Vec::with_capacity(size * size);
    for j in -r..=r {
        for i in -r..=r {
            weights.push((-((i * i + j * j) as f64) / two_s2).exp());
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Kernel::new(size, weights)
}

/// Correlates `frame` with `kernel` using replicate padding.
pub fn convolve(frame: &FloatFrame, kernel: &Kernel) -> Result<FloatFrame> {
    if frame.is_empty() {
        return Err(Error::EmptyFrame);
    }
    let limit = 2 * frame.width.min(frame.height) + 1;
    if kernel.size > limit {
        return Err(Error::param(format!(
            "kernel of size {} too large for {}x{} frame",
            kernel.size, frame.width, frame.height
        )));
    }
    let r = (kernel.size / 2) as isize;
    let (w, h) = (frame.width, frame.height);
    let mut data = vec![0.0; w * h];
    data.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in -r..=r {
                let krow = &kernel.weights[((j + r) as usize) * kernel.size..];
                for i in -r..=r {
                    acc += krow[(i + r) as usize]
                        * frame.get_clamped(x as isize + i, y as isize + j);
                }
            }
            *out = acc;
        }
    });
    Ok(FloatFrame {
        width: w,
        height: h,
        data,
    })
}

/// Parameters of the non-local means filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NlMeansParams {
    /// Side of the comparison patch (odd).
    pub patch: usize,
    /// Side of the search window (odd).
    pub search: usize,
    /// Filtering strength in intensity units.
    pub h: f64,
    /// Noise standard deviation subtracted from patch distances; 0 disables it.
    #[serde(default)]
    pub sigma_noise: f64,
}

impl NlMeansParams {
    pub fn new(patch: usize, search: usize, h: f64) -> Self {
        Self {
            patch,
            search,
            h,
            sigma_noise: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("patch", self.patch), ("search", self.search)] {
            if v == 0 || v % 2 == 0 {
                return Err(Error::param(format!("NL-means {name} must be odd, got {v}")));
            }
        }
        if self.patch > self.search {
            return Err(Error::param(format!(
                "NL-means patch {} larger than search window {}",
                self.patch, self.search
            )));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::param(format!("NL-means h must be > 0, got {}", self.h)));
        }
        if !(self.sigma_noise.is_finite() && self.sigma_noise >= 0.0) {
            return Err(Error::param("NL-means sigma_noise must be >= 0"));
        }
        Ok(())
    }
}

// Rows per work unit. Fixed so that results do not depend on thread count.
const NLM_BAND: usize = 16;

/// Non-local means with replicate padding.
///
/// Each output pixel is the weighted mean of the pixels in its search
/// window, weighted by `exp(-max(d2 - 2 sigma_noise^2, 0) / h^2)` where `d2`
/// is the mean squared difference of the surrounding patches.
pub fn nl_means(frame: &FloatFrame, params: &NlMeansParams) -> Result<FloatFrame> {
    params.validate()?;
    if frame.is_empty() {
        return Err(Error::EmptyFrame);
    }
    let (w, h) = (frame.width, frame.height);
    let pr = (params.patch / 2) as isize;
    let sr = (params.search / 2) as isize;
    let inv_area = 1.0 / (params.patch * params.patch) as f64;
    let bias = 2.0 * params.sigma_noise * params.sigma_noise;
    let inv_h2 = 1.0 / (params.h * params.h);

    // padded copy: coordinates shifted by `pad` in both axes
    let pad = pr + sr;
    let pw = w as isize + 2 * pad;
    let ph = h as isize + 2 * pad;
    let mut padded = Vec::with_capacity((pw * ph) as usize);
    for y in 0..ph {
        for x in 0..pw {
            padded.push(frame.get_clamped(x - pad, y - pad));
        }
    }
    let at = |x: isize, y: isize| padded[((y + pad) * pw + (x + pad)) as usize];

    let mut data = vec![0.0; w * h];
    data.par_chunks_mut(NLM_BAND * w)
        .enumerate()
        .for_each(|(band, out)| {
            let y0 = (band * NLM_BAND) as isize;
            let rows = out.len() / w;
            let cols = w + 2 * pr as usize;
            let mut wsum = vec![0.0; out.len()];
            let mut acc = vec![0.0; out.len()];
            let mut colsum = vec![0.0; cols];
            for dy in -sr..=sr {
                for dx in -sr..=sr {
                    for r in 0..rows {
                        let y = y0 + r as isize;
                        // column sums of squared differences over the patch height
                        for (c, cs) in colsum.iter_mut().enumerate() {
                            let x = c as isize - pr;
                            if r == 0 {
                                let mut s = 0.0;
                                for k in -pr..=pr {
                                    let d = at(x, y + k) - at(x + dx, y + k + dy);
                                    s += d * d;
                                }
                                *cs = s;
                            } else {
                                let add = at(x, y + pr) - at(x + dx, y + pr + dy);
                                let sub = at(x, y - pr - 1) - at(x + dx, y - pr - 1 + dy);
                                *cs += add * add - sub * sub;
                            }
                        }
                        let mut s: f64 = colsum[..params.patch].iter().sum();
                        for x in 0..w {
                            if x > 0 {
                                s += colsum[x + 2 * pr as usize] - colsum[x - 1];
                            }
                            let d2 = (s * inv_area).max(0.0);
                            let weight = if d2 == 0.0 {
                                1.0
                            } else {
                                (-(d2 - bias).max(0.0) * inv_h2).exp()
                            };
                            let xi = x as isize;
                            let i = r * w + x;
                            wsum[i] += weight;
                            acc[i] += weight * (at(xi + dx, y + dy) - at(xi, y));
                        }
                    }
                }
            }
            for r in 0..rows {
                for x in 0..w {
                    let i = r * w + x;
                    out[i] = at(x as isize, y0 + r as isize) + acc[i] / wsum[i];
                }
            }
        });
    Ok(FloatFrame {
        width: w,
        height: h,
        data,
    })
}

/// Which Gaussian kernel a [`DenoiserSpec::Gaussian`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GaussianKernelSpec {
    /// The integer 5x5 kernel over 159.
    Integer5x5,
    Sampled { size: usize, sigma: f64 },
}

impl GaussianKernelSpec {
    pub fn kernel(&self) -> Result<Kernel> {
        match *self {
            GaussianKernelSpec::Integer5x5 => Ok(Kernel::gaussian_5x5_159()),
            GaussianKernelSpec::Sampled { size, sigma } => gaussian_kernel(size, sigma),
        }
    }
}

/// Uniform handle over the available denoisers.
///
/// Block-matching 3-D filtering is not provided; new denoisers plug in as
/// further variants here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DenoiserSpec {
    None,
    Gaussian(GaussianKernelSpec),
    NlMeans(NlMeansParams),
}

impl DenoiserSpec {
    pub fn nl_means_default() -> Self {
        DenoiserSpec::NlMeans(NlMeansParams::new(7, 21, 10.0))
    }

    pub fn gaussian_default() -> Self {
        DenoiserSpec::Gaussian(GaussianKernelSpec::Integer5x5)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DenoiserSpec::None => Ok(()),
            DenoiserSpec::Gaussian(k) => k.kernel().map(|_| ()),
            DenoiserSpec::NlMeans(p) => p.validate(),
        }
    }
}

pub fn denoise(frame: &FloatFrame, spec: &DenoiserSpec) -> Result<FloatFrame> {
    match spec {
        DenoiserSpec::None => Ok(frame.clone()),
        DenoiserSpec::Gaussian(k) => convolve(frame, &k.kernel()?),
        DenoiserSpec::NlMeans(p) => nl_means(frame, p),
    }
}
