//! Keyframe curation for RGB capture sweeps.
//!
//! Two gates run over the sequence in capture order. A frame is first
//! scored for defocus blur: high-frequency log-magnitude energy of its FFT
//! is compared against the same energy after Gaussian blurring at the
//! configured radii, and frames scoring below the threshold are dropped.
//! Surviving frames are de-duplicated with a 64-bit DCT perceptual hash:
//! a frame whose Hamming distance to the most recently kept frame is
//! within the threshold is redundant. Capture is a continuous sweep, so
//! comparing against the last kept frame covers the dominant redundancy.

use std::fmt;
use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hash raster size: images are area-resampled to 32x32 before the DCT.
const DCT_INPUT: usize = 32;
/// Low-frequency block kept from the DCT.
const HASH_BLOCK: usize = 8;
/// Floor added inside the FFT log, in luma units after normalizing the
/// spectrum by the pixel count: magnitudes below this count as empty bins
/// rather than dragging the log toward minus infinity.
const LOG_EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("failed to read image {path}: {message}")]
    Image { path: String, message: String },
}

/// One RGB frame of a capture sequence.
#[derive(Debug, Clone)]
pub struct Frame {
    /// Ordinal position in the capture sequence.
    pub index: usize,
    /// Stable identifier, normally the source filename stem.
    pub id: String,
    width: u32,
    height: u32,
    rgb: Vec<u8>,
}

impl Frame {
    /// Wrap an 8-bit RGB raster (3 bytes per pixel, row-major).
    pub fn from_rgb(
        index: usize,
        id: impl Into<String>,
        width: u32,
        height: u32,
        rgb: Vec<u8>,
    ) -> Result<Self, FrameError> {
        if width < 8 || height < 8 {
            return Err(FrameError::InvalidInput(format!(
                "frame must be at least 8x8, got {width}x{height}"
            )));
        }
        if rgb.len() != (width as usize) * (height as usize) * 3 {
            return Err(FrameError::InvalidInput(format!(
                "raster length {} does not match {width}x{height} RGB",
                rgb.len()
            )));
        }
        Ok(Self {
            index,
            id: id.into(),
            width,
            height,
            rgb,
        })
    }

    /// Load a PNG or JPEG file; the id is the filename stem.
    pub fn load(path: impl AsRef<Path>, index: usize) -> Result<Self, FrameError> {
        let path = path.as_ref();
        let img = image::open(path)
            .map_err(|e| FrameError::Image {
                path: path.display().to_string(),
                message: e.to_string(),
            })?
            .to_rgb8();
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        Self::from_rgb(index, id, img.width(), img.height(), img.into_raw())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn rgb(&self) -> &[u8] {
        &self.rgb
    }

    /// ITU-R BT.601 luma, row-major.
    pub fn luma(&self) -> Vec<f64> {
        self.rgb
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
            .collect()
    }
}

/// Ordered, index-unique frame sequence.
#[derive(Debug, Clone, Default)]
pub struct FrameSet {
    frames: Vec<Frame>,
}

impl FrameSet {
    pub fn new(frames: Vec<Frame>) -> Result<Self, FrameError> {
        let mut seen = std::collections::HashSet::new();
        for f in &frames {
            if !seen.insert(f.index) {
                return Err(FrameError::InvalidInput(format!(
                    "duplicate frame index {}",
                    f.index
                )));
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// 64-bit DCT perceptual hash. Equal rasters produce equal hashes; small
/// Hamming distance means visually similar content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PerceptualHash {
    pub bits: u64,
}

impl PerceptualHash {
    pub fn hamming_distance(self, other: Self) -> u32 {
        hamming_distance(self, other)
    }

    pub fn to_hex(self) -> String {
        format!("{:016x}", self.bits)
    }
}

impl fmt::Display for PerceptualHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

/// Outcome of keyframe selection over one sequence. `kept`,
/// `rejected_blurry`, and `rejected_duplicate` partition the input frame
/// indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeyframeSelection {
    pub kept: Vec<usize>,
    pub rejected_blurry: Vec<usize>,
    pub rejected_duplicate: Vec<usize>,
    /// |kept| / total, in [0, 1].
    pub retention_ratio: f64,
    /// Set when every frame failed the blur gate and nothing was kept.
    pub all_blurry: bool,
}

/// Per-frame signals the selection fold consumes; exposed so callers can
/// report them.
#[derive(Debug, Clone)]
pub struct FrameAnalysis {
    pub index: usize,
    pub id: String,
    pub hash: PerceptualHash,
    pub blur_score: f64,
}

/// Compute the 64-bit DCT hash of one frame: grayscale, 32x32 area-averaged
/// resample, 2D DCT-II, keep the 8x8 lowest-frequency block, set bit `i`
/// when coefficient `i` exceeds the median of the block (DC excluded from
/// the median).
pub fn perceptual_hash(frame: &Frame) -> PerceptualHash {
    let luma = frame.luma();
    let small = area_resample(
        &luma,
        frame.width as usize,
        frame.height as usize,
        DCT_INPUT,
        DCT_INPUT,
    );
    let dct = dct2_2d(&small, DCT_INPUT);

    let mut block = [0.0f64; HASH_BLOCK * HASH_BLOCK];
    for r in 0..HASH_BLOCK {
        for c in 0..HASH_BLOCK {
            block[r * HASH_BLOCK + c] = dct[r * DCT_INPUT + c];
        }
    }

    let mut sorted: Vec<f64> = block[1..].to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };

    let mut bits = 0u64;
    for (i, &v) in block.iter().enumerate() {
        if v > median {
            bits |= 1 << i;
        }
    }
    PerceptualHash { bits }
}

/// Number of differing bits between two hashes, in [0, 64].
pub fn hamming_distance(a: PerceptualHash, b: PerceptualHash) -> u32 {
    (a.bits ^ b.bits).count_ones()
}

/// Sharpness score of a frame: the high-frequency log-magnitude energy of
/// its spectrum minus the mean of the same energy after Gaussian blurring
/// at each radius. Sharp content loses more energy to blurring, so larger
/// scores mean sharper frames. Radius 0 is the identity blur, and a score
/// over `radii = [0]` is exactly 0.
///
/// Blurred variants are evaluated through the kernel's exact transfer
/// function (Gaussian blurring with periodic boundaries multiplies each
/// spectrum bin by the kernel's DFT), so a blurred variant can never gain
/// energy over the original and the score is always nonnegative.
pub fn blur_score(frame: &Frame, radii: &[u32]) -> Result<f64, FrameError> {
    if radii.is_empty() {
        return Err(FrameError::InvalidInput(
            "blur score needs at least one radius".into(),
        ));
    }
    let w = frame.width as usize;
    let h = frame.height as usize;
    let luma = frame.luma();

    let mut planner = FftPlanner::new();
    let spectrum = fft2d(&luma, w, h, &mut planner);
    let norm = (w * h) as f64;
    let radius = (w.min(h) as f64) / 16.0;
    let r2 = radius * radius;

    // (bin index, normalized magnitude) outside the low-frequency disc
    let mut high_bins: Vec<(usize, usize, f64)> = Vec::new();
    for v in 0..h {
        let dv = v.min(h - v) as f64;
        for u in 0..w {
            let du = u.min(w - u) as f64;
            if du * du + dv * dv > r2 {
                high_bins.push((u, v, spectrum[v * w + u].norm() / norm));
            }
        }
    }
    if high_bins.is_empty() {
        return Ok(0.0);
    }

    let energy = |attenuation: &dyn Fn(usize, usize) -> f64| -> f64 {
        high_bins
            .iter()
            .map(|&(u, v, mag)| (attenuation(u, v) * mag + LOG_EPS).ln())
            .sum::<f64>()
            / high_bins.len() as f64
    };

    let base = energy(&|_, _| 1.0);
    let mut blurred_sum = 0.0;
    for &r in radii {
        if r == 0 {
            blurred_sum += base;
            continue;
        }
        let tw = kernel_transfer(r, w);
        let th = kernel_transfer(r, h);
        blurred_sum += energy(&|u, v| (tw[u] * th[v]).abs());
    }
    Ok(base - blurred_sum / radii.len() as f64)
}

/// DFT of the length-`n` circular embedding of the radius-`r` Gaussian
/// kernel. The kernel is even, so the transform is the real cosine sum
/// `k0 + 2 sum_j k_j cos(2 pi u j / n)`, with magnitude at most 1.
fn kernel_transfer(radius: u32, n: usize) -> Vec<f64> {
    let kernel = gaussian_kernel(radius);
    let r = radius as usize;
    let mut out = Vec::with_capacity(n);
    for u in 0..n {
        let mut acc = kernel[r];
        for j in 1..=r {
            acc += 2.0 * kernel[r + j] * (std::f64::consts::TAU * u as f64 * j as f64 / n as f64).cos();
        }
        out.push(acc);
    }
    out
}

/// Normalized Gaussian taps over [-radius, radius] with sigma = radius/2.
fn gaussian_kernel(radius: u32) -> Vec<f64> {
    let r = radius as i64;
    let sigma = radius as f64 / 2.0;
    let mut kernel = Vec::with_capacity((2 * r + 1) as usize);
    for k in -r..=r {
        kernel.push((-(k as f64).powi(2) / (2.0 * sigma * sigma)).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= norm;
    }
    kernel
}

/// Single forward pass in capture order: drop frames scoring below the
/// blur threshold, then drop frames within `hamming_threshold` of the most
/// recently kept frame. The first frame passing the blur gate is always
/// kept.
pub fn select_keyframes(
    frames: &FrameSet,
    hamming_threshold: u32,
    blur_threshold: f64,
    radii: &[u32],
) -> Result<KeyframeSelection, FrameError> {
    let analyses = analyze_frames(frames, radii)?;
    Ok(select_from_analyses(
        &analyses,
        hamming_threshold,
        blur_threshold,
    ))
}

/// Hash and blur-score every frame. Pure per-frame work, independent of
/// the selection fold.
pub fn analyze_frames(frames: &FrameSet, radii: &[u32]) -> Result<Vec<FrameAnalysis>, FrameError> {
    if frames.is_empty() {
        return Err(FrameError::InvalidInput("frame set is empty".into()));
    }
    frames
        .frames()
        .iter()
        .map(|f| {
            Ok(FrameAnalysis {
                index: f.index,
                id: f.id.clone(),
                hash: perceptual_hash(f),
                blur_score: blur_score(f, radii)?,
            })
        })
        .collect()
}

/// The sequential selection fold over precomputed per-frame signals.
pub fn select_from_analyses(
    analyses: &[FrameAnalysis],
    hamming_threshold: u32,
    blur_threshold: f64,
) -> KeyframeSelection {
    let mut kept = Vec::new();
    let mut rejected_blurry = Vec::new();
    let mut rejected_duplicate = Vec::new();
    let mut last_kept_hash: Option<PerceptualHash> = None;

    for a in analyses {
        if a.blur_score < blur_threshold {
            rejected_blurry.push(a.index);
            continue;
        }
        if let Some(prev) = last_kept_hash {
            if hamming_distance(prev, a.hash) <= hamming_threshold {
                rejected_duplicate.push(a.index);
                continue;
            }
        }
        last_kept_hash = Some(a.hash);
        kept.push(a.index);
    }

    let total = analyses.len();
    KeyframeSelection {
        all_blurry: kept.is_empty() && rejected_blurry.len() == total,
        retention_ratio: kept.len() as f64 / total as f64,
        kept,
        rejected_blurry,
        rejected_duplicate,
    }
}

/// Exact box-filter resample: each destination cell averages the source
/// region it covers, with fractional pixel coverage. Works in both the
/// down- and up-sampling directions.
fn area_resample(src: &[f64], sw: usize, sh: usize, dw: usize, dh: usize) -> Vec<f64> {
    let x_scale = sw as f64 / dw as f64;
    let y_scale = sh as f64 / dh as f64;
    let mut out = vec![0.0; dw * dh];
    for dy in 0..dh {
        let y0 = dy as f64 * y_scale;
        let y1 = (dy + 1) as f64 * y_scale;
        let iy0 = y0.floor() as usize;
        let iy1 = (y1.ceil() as usize).min(sh);
        for dx in 0..dw {
            let x0 = dx as f64 * x_scale;
            let x1 = (dx + 1) as f64 * x_scale;
            let ix0 = x0.floor() as usize;
            let ix1 = (x1.ceil() as usize).min(sw);

            let mut acc = 0.0;
            for iy in iy0..iy1 {
                let wy = overlap(iy as f64, y0, y1);
                if wy == 0.0 {
                    continue;
                }
                for ix in ix0..ix1 {
                    let wx = overlap(ix as f64, x0, x1);
                    if wx > 0.0 {
                        acc += wx * wy * src[iy * sw + ix];
                    }
                }
            }
            out[dy * dw + dx] = acc / (x_scale * y_scale);
        }
    }
    out
}

fn overlap(cell_start: f64, lo: f64, hi: f64) -> f64 {
    (hi.min(cell_start + 1.0) - lo.max(cell_start)).max(0.0)
}

/// 2D DCT-II: rows, transpose, rows, transpose back.
fn dct2_2d(data: &[f64], n: usize) -> Vec<f64> {
    let dct = rustdct::DctPlanner::new().plan_dct2(n);
    let mut grid = data.to_vec();
    let mut row = vec![0.0f64; n];

    for pass in 0..2 {
        for r in 0..n {
            row.copy_from_slice(&grid[r * n..(r + 1) * n]);
            dct.process_dct2(&mut row);
            grid[r * n..(r + 1) * n].copy_from_slice(&row);
        }
        if pass == 0 {
            transpose_square(&mut grid, n);
        }
    }
    transpose_square(&mut grid, n);
    grid
}

fn transpose_square(grid: &mut [f64], n: usize) {
    for r in 0..n {
        for c in r + 1..n {
            grid.swap(r * n + c, c * n + r);
        }
    }
}

fn fft2d(luma: &[f64], w: usize, h: usize, planner: &mut FftPlanner<f64>) -> Vec<Complex<f64>> {
    let mut data: Vec<Complex<f64>> = luma.iter().map(|&v| Complex::new(v, 0.0)).collect();

    let fft_w = planner.plan_fft_forward(w);
    for r in 0..h {
        fft_w.process(&mut data[r * w..(r + 1) * w]);
    }

    let fft_h = planner.plan_fft_forward(h);
    let mut col = vec![Complex::new(0.0, 0.0); h];
    for c in 0..w {
        for r in 0..h {
            col[r] = data[r * w + c];
        }
        fft_h.process(&mut col);
        for r in 0..h {
            data[r * w + c] = col[r];
        }
    }
    data
}

/// Separable spatial Gaussian blur with sigma = radius / 2, kernel window
/// [-radius, radius], clamp-to-edge boundary. Radius 0 is the identity.
/// Used to degrade frames when building corpora; scoring goes through the
/// spectral route in [`blur_score`].
pub fn gaussian_blur(luma: &[f64], w: usize, h: usize, radius: u32) -> Vec<f64> {
    if radius == 0 {
        return luma.to_vec();
    }
    let r = radius as i64;
    let kernel = gaussian_kernel(radius);

    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, kv) in kernel.iter().enumerate() {
                let sx = (x as i64 + ki as i64 - r).clamp(0, w as i64 - 1) as usize;
                acc += kv * luma[y * w + sx];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, kv) in kernel.iter().enumerate() {
                let sy = (y as i64 + ki as i64 - r).clamp(0, h as i64 - 1) as usize;
                acc += kv * tmp[sy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Blur an RGB frame channel-wise with the same kernel [`blur_score`] uses
/// on luma; handy for building corpora and CLI diagnostics.
pub fn blur_frame(frame: &Frame, radius: u32) -> Frame {
    let w = frame.width as usize;
    let h = frame.height as usize;
    let mut channels = [vec![0.0; w * h], vec![0.0; w * h], vec![0.0; w * h]];
    for (i, px) in frame.rgb.chunks_exact(3).enumerate() {
        for (c, ch) in channels.iter_mut().enumerate() {
            ch[i] = px[c] as f64;
        }
    }
    let blurred: Vec<Vec<f64>> = channels
        .iter()
        .map(|ch| gaussian_blur(ch, w, h, radius))
        .collect();
    let mut rgb = vec![0u8; w * h * 3];
    for i in 0..w * h {
        for c in 0..3 {
            rgb[i * 3 + c] = blurred[c][i].round().clamp(0.0, 255.0) as u8;
        }
    }
    Frame {
        index: frame.index,
        id: frame.id.clone(),
        width: frame.width,
        height: frame.height,
        rgb,
    }
}
