//! Exemplar-based colorization end to end: YUV split, luminance remap,
//! metamorphosis, chrominance transport, optional TV cleanup, reassembly.

use crate::colorspace::{rgb_to_yuv, unclamped_rgb, yuv_to_rgb, luminance_remap, ColorImage, YuvImage};
use crate::error::{Error, Result};
use crate::grid::{same_dims, CoordinateMap, ScalarField};
use crate::morphing::{compose_map, morph_with_observer, MorphOutcome, MorphParams, SweepRecord};
use crate::postprocess::{debias, tv_chrominance, Chroma, PostParams, TvReport};
use crate::transfer::{sample_along, transfer_chrominance};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelineParams {
    pub morph: MorphParams,
    /// `None` skips the TV cleanup and debiasing.
    pub post: Option<PostParams>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PostReport {
    pub tv: TvReport,
    pub debias: TvReport,
    pub rho: f64,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub image: ColorImage,
    /// RGB before the gamut clamp.
    pub unclamped: Vec<[f64; 3]>,
    /// Source luminance after remapping and clipping to `[0, 1]`.
    pub template: ScalarField,
    pub morph: MorphOutcome,
    pub phi: CoordinateMap,
    /// Chrominance sampled through `phi`, before any cleanup.
    pub transported: Chroma,
    /// Chrominance written into `image`.
    pub chroma: Chroma,
    pub post: Option<PostReport>,
}

impl PipelineOutput {
    /// Pixels whose reconstruction needed no clamping.
    pub fn unclamped_mask(&self) -> Vec<bool> {
        self.unclamped
            .iter()
            .map(|px| px.iter().all(|c| (0.0..=1.0).contains(c)))
            .collect()
    }
}

/// Colorizes `target` with the colors of `source`. Both must have the same size.
pub fn colorize_from_exemplar(
    source: &ColorImage,
    target: &ScalarField,
    params: &PipelineParams,
) -> Result<PipelineOutput> {
    colorize_from_exemplar_with_observer(source, target, params, |_| {})
}

pub fn colorize_from_exemplar_with_observer(
    source: &ColorImage,
    target: &ScalarField,
    params: &PipelineParams,
    observer: impl FnMut(&SweepRecord),
) -> Result<PipelineOutput> {
    if source.dims() != target.dims() {
        return Err(Error::DimensionMismatch {
            expected: target.dims(),
            found: source.dims(),
        });
    }
    params.morph.validate()?;
    if let Some(post) = &params.post {
        post.validate()?;
    }

    let yuv = rgb_to_yuv(source);
    let template = luminance_remap(&yuv.y, target)?.map(|v| v.clamp(0.0, 1.0));
    let outcome = morph_with_observer(&template, target, &params.morph, observer)?;
    let phi = compose_map(&outcome.path);
    let (u, v) = transfer_chrominance(&phi, &yuv.u, &yuv.v)?;
    let transported = Chroma::new(u, v)?;

    let (chroma, post) = match &params.post {
        None => (transported.clone(), None),
        Some(post) => {
            let tv = tv_chrominance(&transported, target, post)?;
            let debiased = debias(&transported, &tv.chroma, target, post)?;
            let report = PostReport {
                tv: tv.report,
                debias: debiased.report,
                rho: debiased.rho,
            };
            (debiased.chroma, Some(report))
        }
    };

    let assembled = YuvImage::new(target.clone(), chroma.u.clone(), chroma.v.clone())?;
    Ok(PipelineOutput {
        image: yuv_to_rgb(&assembled),
        unclamped: unclamped_rgb(&assembled),
        template,
        morph: outcome,
        phi,
        transported,
        chroma,
        post,
    })
}

/// One row of `K + 1` tiles separated by white gutters. Tile `k` is the path
/// image `I_k` colored with the source chrominance pulled back through the
/// first `k` deformations.
pub fn path_montage(outcome: &MorphOutcome, u_src: &ScalarField, v_src: &ScalarField, gutter: usize) -> Result<ColorImage> {
    same_dims(u_src, v_src)?;
    same_dims(u_src, &outcome.images[0])?;
    let (w, h) = u_src.dims();
    let k_steps = outcome.path.len();
    let total_w = (k_steps + 1) * w + k_steps * gutter;
    let mut pixels = vec![[1.0; 3]; total_w * h];

    for k in 0..=k_steps {
        let phi = match outcome.path.prefix(k) {
            Some(prefix) => compose_map(&prefix),
            None => CoordinateMap::identity(w, h),
        };
        let (u, v) = transfer_chrominance(&phi, u_src, v_src)?;
        let tile = yuv_to_rgb(&YuvImage::new(outcome.images[k].clone(), u, v)?);
        let x0 = k * (w + gutter);
        for row in 0..h {
            let dst = row * total_w + x0;
            pixels[dst..dst + w].copy_from_slice(&tile.pixels()[row * w..(row + 1) * w]);
        }
    }
    ColorImage::new(total_w, h, pixels)
}

/// All three RGB channels of `source` pulled back through `phi`. Only useful
/// as a comparison: it carries the source's shading along with its colors.
pub fn rgb_transport(source: &ColorImage, phi: &CoordinateMap) -> Result<ColorImage> {
    if source.dims() != phi.dims() {
        return Err(Error::DimensionMismatch {
            expected: phi.dims(),
            found: source.dims(),
        });
    }
    let channels: Vec<ScalarField> = (0..3).map(|i| sample_along(phi, &source.channel(i))).collect();
    let pixels = (0..phi.points().len())
        .map(|k| std::array::from_fn(|i| channels[i].values()[k]))
        .collect();
    ColorImage::clamped(source.width(), source.height(), pixels)
}
