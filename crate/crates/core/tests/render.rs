mod common;

use lfbake::baking::{texel_world_position, DirectionFetch};
use lfbake::field::FactorizedField;
use lfbake::math::sigmoid;
use lfbake::par;
use lfbake::pipeline;
use lfbake::render::{BaselineMode, PreparedPackage, RenderConfig};
use lfbake::{Rgb, Vec3};

fn prepared() -> (PreparedPackage, FactorizedField) {
    let (cfg, mesh, field) = common::small();
    let pkg = pipeline::bake_package(&cfg, &field, &mesh).unwrap();
    (PreparedPackage::new(pkg).unwrap(), field)
}

fn eyes() -> [Vec3; 3] {
    [
        Vec3::new(0.0, 0.0, 3.5),
        Vec3::new(2.0, 1.5, -2.2),
        Vec3::new(-1.0, -3.0, 1.0),
    ]
}

#[test]
fn zero_field_renders_half_grey_over_background() {
    let (cfg, mesh, _) = common::small();
    let zero = FactorizedField::zeros(&cfg.field).unwrap();
    let pkg = PreparedPackage::new(pipeline::bake_package(&cfg, &zero, &mesh).unwrap()).unwrap();
    let bg = Rgb::new(0.2, 0.4, 0.6);
    let rc = RenderConfig {
        background: Some(bg),
        ..RenderConfig::default()
    };
    let cam = common::camera(Vec3::new(0.0, 0.0, 3.5), 32);
    let img = pkg.render(&cam, &rc).unwrap();
    let (mut hits, mut misses) = (0, 0);
    for y in 0..32 {
        for x in 0..32 {
            let px = img.pixel(x, y);
            if pkg.bvh().first_hit(&cam.pixel_ray(x, y)).is_some() {
                assert_eq!(px, [0.5; 3]);
                hits += 1;
            } else {
                assert_eq!(px, [0.2f32, 0.4, 0.6]);
                misses += 1;
            }
        }
    }
    assert!(hits > 100 && misses > 100);
}

#[test]
fn renders_are_deterministic_across_threading() {
    let (pkg, _) = prepared();
    let cam = common::camera(eyes()[1], 40);
    let rc = RenderConfig::default();
    let a = pkg.render(&cam, &rc).unwrap();
    let b = pkg.render(&cam, &rc).unwrap();
    let c = par::sequential(|| pkg.render(&cam, &rc).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
}

/// Every hit pixel matches the field evaluated at its texel's sample point and
/// its grid direction, up to the error 8-bit storage can introduce:
/// `|Δ(u·β)| ≤ Σ |β| h_u + |u| h_β + h_u h_β`, and the sigmoid is 1/4-Lipschitz.
#[test]
fn baked_color_within_quantization_bound() {
    let (pkg, field) = prepared();
    let p = &pkg.package;
    let rc = RenderConfig::default();
    let mut checked = 0;
    for eye in eyes() {
        let cam = common::camera(eye, 24);
        let img = pkg.render(&cam, &rc).unwrap();
        for y in 0..24 {
            for x in 0..24 {
                let ray = cam.pixel_ray(x, y);
                let Some(hit) = pkg.bvh().first_hit(&ray) else { continue };
                let texel = p.layout.texel_at(&hit.bary);
                let point = texel_world_position(&p.mesh, hit.face, texel, &p.layout).unwrap();
                let ((row, col), w) = p.grid.lookup(&ray.direction, DirectionFetch::Nearest)[0];
                assert_eq!(w, 1.0);
                let emb = field.pos_embed(&point).unwrap();
                let beta = field.dir_embed(&p.grid.direction(row, col)).unwrap().beta;
                let hb = &p.quant[3];
                let px = img.pixel(x, y);
                for (k, e) in [&emb.u, &emb.v, &emb.w].into_iter().enumerate() {
                    let hq = &p.quant[k];
                    let exact: f64 = e.iter().zip(&beta).map(|(a, b)| a * b).sum();
                    let bound: f64 = (0..e.len())
                        .map(|c| {
                            beta[c].abs() * hq.half_step(c)
                                + e[c].abs() * hb.half_step(c)
                                + hq.half_step(c) * hb.half_step(c)
                        })
                        .sum();
                    let err = (px[k] as f64 - sigmoid(exact)).abs();
                    assert!(
                        err <= bound / 4.0 + 1e-6,
                        "pixel ({x},{y}) channel {k}: {err} > {}",
                        bound / 4.0
                    );
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 300);
}

#[test]
fn bilinear_fetch_changes_only_beta() {
    let (pkg, _) = prepared();
    let near = RenderConfig::default();
    let bil = RenderConfig {
        direction_fetch: DirectionFetch::Bilinear,
        ..near
    };
    let cam = common::camera(eyes()[0], 16);
    let mut beta_differs = false;
    for y in 0..16 {
        for x in 0..16 {
            let ray = cam.pixel_ray(x, y);
            let Some(hit) = pkg.bvh().first_hit(&ray) else { continue };
            let (uvw_n, beta_n) = pkg.fetch(&hit, &ray.direction, &near);
            let (uvw_b, beta_b) = pkg.fetch(&hit, &ray.direction, &bil);
            assert_eq!(uvw_n, uvw_b);
            beta_differs |= beta_n != beta_b;
        }
    }
    assert!(beta_differs);
}

#[test]
fn baseline_mode_ignores_direction() {
    let (pkg, _) = prepared();
    let rc = RenderConfig {
        baseline: BaselineMode::RgbNormal,
        ..RenderConfig::default()
    };
    let cam = common::camera(eyes()[2], 16);
    for y in 0..16 {
        for x in 0..16 {
            let ray = cam.pixel_ray(x, y);
            let Some(hit) = pkg.bvh().first_hit(&ray) else { continue };
            let a = pkg.fetch(&hit, &ray.direction, &rc);
            let b = pkg.fetch(&hit, &-ray.direction, &rc);
            assert_eq!(a, b);
        }
    }
}

/// The rgb_normal package stores `Sig`-logits of the field viewed head-on
/// (`d = -n`), so its colors do not depend on the camera.
#[test]
fn rgb_normal_package_is_view_independent() {
    let (cfg, mesh, field) = common::small();
    let pkg = PreparedPackage::new(pipeline::bake_baseline_package(&cfg, &field, &mesh).unwrap()).unwrap();
    let rc = RenderConfig::default();
    let mut seen = 0;
    for face in (0..mesh.faces.len()).step_by(37) {
        let c = mesh.centroid(face);
        let n = mesh.face_normal(face).unwrap();
        let colors: Vec<[f32; 3]> = [n, (n + Vec3::new(0.3, 0.2, -0.1)).normalize()]
            .iter()
            .map(|d| {
                let eye = c + d * 0.5;
                let cam = lfbake::scene::Camera::look_at(
                    eye,
                    c,
                    Vec3::new(0.1, 1.0, 0.2),
                    lfbake::scene::Intrinsics::from_fov(1, 1, 10.0),
                )
                .unwrap();
                pkg.render(&cam, &rc).unwrap().pixel(0, 0)
            })
            .collect();
        if let Some(hit) = pkg.bvh().first_hit(&lfbake::scene::Ray::through(c + n * 0.5, -n)) {
            if hit.face == face {
                assert_eq!(colors[0], colors[1]);
                seen += 1;
            }
        }
    }
    assert!(seen > 5);
}
