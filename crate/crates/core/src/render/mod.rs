//! Rendering an asset package without network evaluation, the continuous
//! reference renderer, the view-independent baseline and image metrics.

mod baked;
mod image;
mod metrics;

pub use baked::{
    bake_rgb_baseline, eval_package, mean_metrics, render, render_float, BaselineMode, EvalReport, EvalRow,
    MeanMetrics, PreparedPackage, RenderConfig,
};
pub use image::ImageBuffer;
pub use metrics::{mse, psnr, psnr_json, ssim, SSIM_SIGMA, SSIM_WINDOW};
