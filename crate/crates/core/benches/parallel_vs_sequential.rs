use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lfbake::baking::{bake_position_atlases, layout_atlas};
use lfbake::field::{grad, precompute_hits, LossOptions};
use lfbake::geometry::Bvh;
use lfbake::par;
use lfbake::pipeline::{self, PipelineConfig};
use lfbake::render::PreparedPackage;
use lfbake::scene::generate_pseudo_images;

fn fixture() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    for (k, v) in [
        ("grid_k", "32"),
        ("cameras", "4"),
        ("image_size", "48"),
        ("eval_size", "64"),
    ] {
        cfg.set(k, v).unwrap();
    }
    cfg
}

fn bench(c: &mut Criterion) {
    let cfg = fixture();
    let scene = pipeline::build_scene(&cfg);
    let (mesh, _) = pipeline::distill_mesh(&cfg, &scene).unwrap();
    let field = pipeline::initial_field(&cfg).unwrap();
    let layout = layout_atlas(mesh.faces.len(), 6, 8192).unwrap();
    let pkg = PreparedPackage::new(pipeline::bake_package(&cfg, &field, &mesh).unwrap()).unwrap();
    let camera = &pipeline::evaluation_cameras(&cfg).unwrap()[0];
    let render_cfg = cfg.render_config();
    let cams = pipeline::training_cameras(&cfg).unwrap();
    let pseudo = generate_pseudo_images(&scene, &cams, &cfg.pseudo_options(), 0).unwrap();
    let records = &pseudo.records[..4096];
    let hits = precompute_hits(&Bvh::build(&mesh).unwrap(), records);
    let opts = LossOptions::default();

    let mut g = c.benchmark_group("parallel_vs_sequential");
    g.sample_size(10);
    for mode in ["parallel", "sequential"] {
        let run = |f: &mut dyn FnMut()| {
            if mode == "sequential" {
                par::sequential(f)
            } else {
                f()
            }
        };
        g.bench_function(BenchmarkId::new("bake_position_atlases", mode), |b| {
            b.iter(|| run(&mut || drop(bake_position_atlases(&field, &mesh, &layout).unwrap())))
        });
        g.bench_function(BenchmarkId::new("render_64x64", mode), |b| {
            b.iter(|| run(&mut || drop(pkg.render(camera, &render_cfg).unwrap())))
        });
        g.bench_function(BenchmarkId::new("grad_4096_rays", mode), |b| {
            b.iter(|| run(&mut || drop(grad(&field, records, &hits, &opts).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
