use lfbake::baking::{
    decode_channel_tiled_png, dequantize, encode_channel_tiled_png, layout_atlas, quantize_atlas, texel_count,
    AtlasRole, ChannelAtlas, DirectionFetch, DirectionGrid, TexelCell,
};
use lfbake::field::{predict_color, DirectionWeights, EmbeddingTriplet};
use lfbake::Vec3;
use proptest::prelude::*;

fn atlas_f32(d: usize, w: usize, h: usize) -> impl Strategy<Value = ChannelAtlas<f32>> {
    prop::collection::vec(-1e3f32..1e3, d * w * h).prop_map(move |data| ChannelAtlas {
        role: AtlasRole::MU,
        channels: d,
        width: w,
        height: h,
        data,
    })
}

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=8, 1usize..12, 1usize..12).prop_map(|(k, w, h)| (4 * k, w, h))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantization_error_at_most_half_step(
        (atlas, mask) in dims().prop_flat_map(|(d, w, h)| (atlas_f32(d, w, h), prop::collection::vec(any::<bool>(), w * h)))
    ) {
        let (q, params) = quantize_atlas(&atlas, Some(&mask)).unwrap();
        let d = atlas.channels;
        for (i, &used) in mask.iter().enumerate() {
            for c in 0..d {
                let qq = q.data[i * d + c];
                if used {
                    let x = atlas.data[i * d + c] as f64;
                    let err = (dequantize(qq, params.ranges[c]) - x).abs();
                    prop_assert!(err <= params.half_step(c) * (1.0 + 1e-9) + 1e-12);
                    let [lo, hi] = params.ranges[c];
                    prop_assert!(lo as f64 <= x && x <= hi as f64);
                } else {
                    prop_assert_eq!(qq, 0);
                }
            }
        }
    }

    #[test]
    fn tiled_png_round_trips(
        ((d, w, h), seed) in (dims(), any::<u64>())
    ) {
        let data = (0..d * w * h).map(|i| (seed.wrapping_mul(6364136223846793005).wrapping_add((i as u64).wrapping_mul(1442695040888963407)) >> 56) as u8).collect();
        let a = ChannelAtlas { role: AtlasRole::MW, channels: d, width: w, height: h, data };
        let bytes = encode_channel_tiled_png(&a).unwrap();
        prop_assert_eq!(decode_channel_tiled_png(&bytes, AtlasRole::MW, d, w, h).unwrap(), a);
    }

    #[test]
    fn layout_is_a_bijection(p in 1usize..14, n_faces in 1usize..80, max_width in 16usize..200) {
        let Ok(l) = layout_atlas(n_faces, p, max_width) else {
            // Only refused when the atlas cannot fit a max_width square.
            let qpr = max_width / p;
            prop_assert!(qpr == 0 || n_faces.div_ceil(2).div_ceil(qpr) * (p + p % 2) > max_width);
            return Ok(());
        };
        prop_assert_eq!(l.texels_per_face, texel_count(p));
        prop_assert!(l.width <= max_width);
        let mut seen = vec![false; l.width * l.height];
        for f in 0..n_faces {
            for t in 0..l.texels_per_face {
                let (x, y) = l.texel_pixel(f, t);
                prop_assert!(x < l.width && y < l.height);
                prop_assert!(!seen[y * l.width + x]);
                seen[y * l.width + x] = true;
                prop_assert_eq!(l.pixel_texel(x, y), Some((f, t)));
            }
        }
        prop_assert_eq!(l.used_mask(), seen);
    }

    #[test]
    fn texel_lookup_is_total_and_consistent(p in 1usize..20, b1 in 0.0f64..1.0, b2 in 0.0f64..1.0) {
        let (b1, b2) = if b1 + b2 > 1.0 { (1.0 - b1, 1.0 - b2) } else { (b1, b2) };
        let l = layout_atlas(2, p, 1024).unwrap();
        let t = l.texel_at(&[1.0 - b1 - b2, b1, b2]);
        prop_assert!(t < l.texels_per_face);
        let (x, y) = ((b1 * p as f64).floor() as usize, (b2 * p as f64).floor() as usize);
        match l.cell(t) {
            TexelCell::Square { x: sx, y: sy } => prop_assert_eq!((sx, sy), (x, y)),
            TexelCell::Diagonal { j } => prop_assert_eq!(j, x.min(p - 1) / 2),
        }
        let s = l.texel_barycentric(t);
        if matches!(l.cell(t), TexelCell::Square { .. }) {
            prop_assert_eq!(l.texel_at(&s), t);
        }
        prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(s.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn direction_lookup_weights(
        n_elev in 2usize..40, n_azim in 1usize..70,
        x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0,
    ) {
        let d = Vec3::new(x, y, z);
        prop_assume!(d.norm() > 1e-3);
        let g = DirectionGrid::new(n_elev, n_azim).unwrap();
        for mode in [DirectionFetch::Nearest, DirectionFetch::Bilinear] {
            let cells = g.lookup(&d, mode);
            let total: f64 = cells.iter().map(|c| c.1).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for ((r, c), w) in cells {
                prop_assert!(w >= 0.0 && r < n_elev && c < n_azim);
            }
        }
        let ((r, c), w) = g.lookup(&d, DirectionFetch::Nearest)[0];
        prop_assert_eq!(w, 1.0);
        // Elevation from +y and azimuth both round to the chosen cell.
        let u = d.normalize();
        let de = std::f64::consts::PI / (n_elev - 1) as f64;
        prop_assert!((u.y.clamp(-1.0, 1.0).acos() - r as f64 * de).abs() <= 0.5 * de + 1e-9);
        if r > 0 && r < n_elev - 1 {
            let bil = g.lookup(&d, DirectionFetch::Bilinear);
            prop_assert!(bil.iter().any(|((br, bc), _)| (*br, *bc) == (r, c)));
        }
    }

    #[test]
    fn grid_directions_recover_their_cell(n_elev in 3usize..40, n_azim in 1usize..70, r in 1usize..38, c in 0usize..69) {
        prop_assume!(r < n_elev - 1 && c < n_azim);
        let g = DirectionGrid::new(n_elev, n_azim).unwrap();
        let ((rr, cc), _) = g.lookup(&g.direction(r, c), DirectionFetch::Nearest)[0];
        prop_assert_eq!((rr, cc), (r, c));
        prop_assert!((g.direction(r, c).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn colors_strictly_inside_unit_cube(
        u in prop::collection::vec(-1e6f64..1e6, 4),
        v in prop::collection::vec(-1e6f64..1e6, 4),
        w in prop::collection::vec(-1e6f64..1e6, 4),
        beta in prop::collection::vec(-1e6f64..1e6, 4),
    ) {
        let c = predict_color(&EmbeddingTriplet { u, v, w }, &DirectionWeights { beta }).unwrap();
        prop_assert!(c.iter().all(|&x| x > 0.0 && x < 1.0));
    }
}
