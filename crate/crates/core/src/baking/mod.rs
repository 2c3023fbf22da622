//! Tabulating the factorized field over mesh texels and a direction grid,
//! 8-bit quantization, channel-tiled PNG storage and the asset package.

mod atlas;
mod bake;
mod direction;
mod layout;
mod package;
mod tiling;

pub use atlas::{dequantize, dequantize_atlas, pad_unused, quantize_atlas, AtlasRole, ChannelAtlas, QuantParams};
pub use bake::{bake_direction_map, bake_position_atlases, bake_rgb_baseline_atlases, BASELINE_GRID};
pub use direction::{DirectionFetch, DirectionGrid};
pub use layout::{
    layout_atlas, texel_count, texel_world_position, with_atlas_uvs, TexelCell, TexelLayout, DEFAULT_MAX_ATLAS_WIDTH,
};
pub use package::{
    package_bytes, position_payload_bytes, read_asset_package, write_asset_package, AssetPackage, Manifest,
    PackageVariant, PngFiles, QuantSet, ELEVATION_CONVENTION, MANIFEST_FILE, MESH_FILE, PACKAGE_VERSION,
};
pub use tiling::{decode_channel_tiled_png, encode_channel_tiled_png, tile_grid};
