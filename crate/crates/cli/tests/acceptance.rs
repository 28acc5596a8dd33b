//! Acceptance suite: one check per criterion, each printed as a PASS/FAIL line.
//! Run with `cargo test -p fisheye-depth-cli --test acceptance -- --nocapture`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use fisheye_depth::camera::{ds_project, ds_unproject, pinhole_project};
use fisheye_depth::io::depth_png::{decode_depth_png, encode_depth_png};
use fisheye_depth::io::manifest::{CaptureHeight, Lighting, ScanEntry};
use fisheye_depth::io::pfm::{decode_pfm, disparity_samples, encode_pfm, samples_to_disparity};
use fisheye_depth::io::SceneManifest;
use fisheye_depth::metrics::{depth_metrics, disparity_metrics, local_entropy_stats};
use fisheye_depth::projection::row_latitude;
use fisheye_depth::render::{render, render_with_hole_fill, synthesize_stereo_sample, PointCloud};
use fisheye_depth::rig::{
    build_rig, enumerate_benchmark, virtual_intrinsics, BenchmarkGrid, CameraKind,
    RigOrientation, VirtualCamera,
};
use fisheye_depth::stereo::{disparity_to_range, range_to_disparity};
use fisheye_depth::synthetic::{occluder_scene, Quad, Scene, OCCLUDER_SCANS};
use fisheye_depth::{
    DepthMap, DisparityMap, DoubleSphereIntrinsics, Grid, PinholeIntrinsics, ProjectionSpec,
    RenderSettings, VirtualIntrinsicsPolicy,
};
use nalgebra::{Isometry3, Point3, Translation3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn policy() -> VirtualIntrinsicsPolicy {
    VirtualIntrinsicsPolicy::with_defaults(
        DoubleSphereIntrinsics::new(350.0, 350.0, 959.5, 539.5, -0.2, 0.6, 1920, 1080).unwrap(),
    )
}

fn depth_disparity_inversion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 1_000_000;
    let tuples: Vec<(f64, f64, usize, f64)> = (0..n)
        .map(|_| {
            let h = rng.gen_range(64..=4096);
            let v = rng.gen_range(0..h);
            // valid disparities keep the triangle closed: disp < (v + 0.5)
            let disp = rng.gen_range(1e-3..0.999 * (v as f64 + 0.5));
            let b = rng.gen_range(0.01..1.0);
            (row_latitude(v, h), disp, h, b)
        })
        .collect();
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    for &(lat, disp, h, b) in &tuples {
        match disparity_to_range(lat, disp, h, b).and_then(|r| range_to_disparity(lat, r, h, b)) {
            Some(back) => worst = worst.max((back - disp).abs()),
            None => failures += 1,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst < 1e-6 && failures == 0 && secs < 5.0,
        format!("max error {worst:.3e} px, {failures} rejected, {secs:.3} s single-threaded"),
    )
}

fn analytic_fixture() -> Outcome {
    let h = 1024;
    let depth = disparity_to_range(PI / 2.0, h as f64 / 4.0, h, 1.0).unwrap();
    let disp = range_to_disparity(PI / 2.0, 0.065, h, 0.065).unwrap();
    check(
        (depth - 1.0).abs() < 1e-12 && (disp - h as f64 / 4.0).abs() < 1e-9,
        format!("depth {depth:.15}, disparity {disp:.12} (H/4 = {})", h / 4),
    )
}

fn ds_closed_form_inverse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cams = [
        DoubleSphereIntrinsics::new(350.0, 350.0, 959.5, 539.5, -0.2, 0.6, 1920, 1080).unwrap(),
        DoubleSphereIntrinsics::new(300.0, 310.0, 639.5, 479.5, 0.1, 0.55, 1280, 960).unwrap(),
        DoubleSphereIntrinsics::new(180.0, 180.0, 320.0, 240.0, 0.6, 0.3, 640, 480).unwrap(),
    ];
    let (mut tested, mut worst) = (0usize, 0.0f64);
    while tested < 100_000 {
        let k = &cams[tested % cams.len()];
        let p = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ) * rng.gen_range(0.1..50.0);
        let Ok(Some(px)) = ds_project(&p, k) else {
            continue;
        };
        let Some(ray) = ds_unproject(&px, k) else {
            return Err(format!("projected pixel {px:?} failed to unproject"));
        };
        let r = ray.into_inner();
        worst = worst.max(r.cross(&p).norm().atan2(r.dot(&p)));
        tested += 1;
    }

    let ds = DoubleSphereIntrinsics::new(400.0, 380.0, 320.0, 240.0, 0.0, 0.0, 640, 480).unwrap();
    let ph = PinholeIntrinsics::new(400.0, 380.0, 320.0, 240.0, 640, 480).unwrap();
    let mut worst_px = 0.0f64;
    for _ in 0..10_000 {
        let p = Vector3::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.05..5.0),
        );
        let a = ds_project(&p, &ds).unwrap().unwrap();
        let b: Vector2<f64> = pinhole_project(&p, &ph).unwrap().unwrap();
        worst_px = worst_px.max((a - b).norm());
    }
    check(
        worst < 1e-9 && worst_px < 1e-9,
        format!("max angular error {worst:.3e} rad over {tested} points, pinhole gap {worst_px:.3e} px"),
    )
}

fn virtual_intrinsics_plug_ins() -> Outcome {
    let p = policy();
    let r = p.reference;
    let k = virtual_intrinsics(&p, 180.0).map_err(|e| e.to_string())?;
    let exact = k.fx == 1.25 * r.fx
        && k.fy == 1.25 * r.fy
        && k.xi == 0.8 * r.xi
        && k.alpha == r.alpha + 0.2 * (1.0 - r.alpha);
    let series: Vec<DoubleSphereIntrinsics> = (120..=195)
        .map(|f| virtual_intrinsics(&p, f as f64).unwrap())
        .collect();
    let monotone = series.windows(2).all(|w| {
        w[1].fx < w[0].fx && w[1].alpha > w[0].alpha && w[1].xi > w[0].xi
    });
    check(
        exact && monotone,
        format!(
            "FOV 180: f {} xi {} alpha {}; monotone over 120..195: {monotone}",
            k.fx, k.xi, k.alpha
        ),
    )
}

fn photo_consistency() -> Outcome {
    let scene = Scene::new(vec![Quad::facing_z(2.0, [-3.0, 3.0], [-3.0, 3.0])]);
    let bundle = [scene.sample_surfaces(0.01, 0).unwrap()];
    let rig = build_rig(Isometry3::identity(), 0.065, 195.0, RigOrientation::Vertical).unwrap();
    let camera = VirtualCamera::Fisheye {
        intrinsics: virtual_intrinsics(&policy(), 195.0).unwrap(),
        fov_deg: 195.0,
    };
    let h = 512;
    let sample =
        synthesize_stereo_sample(&bundle, &rig, &camera, h, &RenderSettings::default(), &[])
            .map_err(|e| e.to_string())?;
    let spec = rig.stereo_projection(h);
    let to_ref = rig.reference_pose.inverse();
    let to_sec = rig.second_pose().inverse();
    let (mut total, mut good, mut worst) = (0usize, 0usize, 0.0f64);
    for v in 0..h {
        for u in 0..2 * h {
            if !*sample.disparity_ref.valid.get(u, v) {
                continue;
            }
            total += 1;
            // the tracked feature is the surface point imaged at this pixel
            let scan = sample.source_ref.get(u, v).unwrap() as usize;
            let point = bundle[scan].position(sample.point_index_ref.get(u, v).unwrap() as usize);
            let r = spec.orientation.transpose();
            let a = spec.project_direction(&(r * (to_ref * point).coords)).unwrap();
            let b = spec.project_direction(&(r * (to_sec * point).coords)).unwrap();
            let disp = *sample.disparity_ref.values.get(u, v);
            let du = (b.x - a.x + h as f64).rem_euclid(2.0 * h as f64) - h as f64;
            let err = du.hypot(b.y - (a.y - disp));
            worst = worst.max(err);
            good += (err < 0.5) as usize;
        }
    }
    let frac = good as f64 / total.max(1) as f64;
    check(
        total > 10_000 && frac >= 0.99,
        format!("{good}/{total} valid pixels within 0.5 px ({:.2}%), worst {worst:.3} px", 100.0 * frac),
    )
}

fn occlusion_fill() -> Outcome {
    let scene = occluder_scene();
    let bundle: Vec<PointCloud> = OCCLUDER_SCANS
        .iter()
        .enumerate()
        .map(|(i, o)| scene.scan(*o, 1536, i as u16).unwrap())
        .collect();
    let cam = Point3::new(1.0, 0.0, 0.0);
    let pose = Isometry3::from_parts(Translation3::from(cam.coords), Default::default());
    let spec = ProjectionSpec::equirectangular(1024);
    let settings = RenderSettings {
        splat_radius_px: 1.0,
        hole_fill_order: vec![0, 1, 2],
    };
    let central = render(&bundle[0], &pose, &spec, &settings).map_err(|e| e.to_string())?;
    let full = render_with_hole_fill(&bundle, &pose, &spec, &settings, None)
        .map_err(|e| e.to_string())?;

    let origins: Vec<Point3<f64>> = OCCLUDER_SCANS.iter().map(|o| Point3::from(*o)).collect();
    let (mut violations, mut occluded, mut recovered) = (0usize, 0usize, 0usize);
    for v in 0..spec.height() {
        for u in 0..spec.width() {
            if *central.hit.get(u, v)
                && (central.rgb.get(u, v) != full.rgb.get(u, v)
                    || central.depth.values.get(u, v) != full.depth.values.get(u, v)
                    || central.source_scan.get(u, v) != full.source_scan.get(u, v))
            {
                violations += 1;
            }
            let d = spec.pixel_direction(u as f64, v as f64).unwrap();
            let Some(hit) = scene.raycast(&cam, &d) else {
                continue;
            };
            let from_adjacent = origins[1..].iter().any(|o| scene.visible(o, &hit.point, 1e-6));
            if scene.visible(&origins[0], &hit.point, 1e-6) || !from_adjacent {
                continue;
            }
            occluded += 1;
            let (Some(scan), Some(pi)) = (*full.source_scan.get(u, v), *full.point_index.get(u, v))
            else {
                continue;
            };
            let p = bundle[scan as usize].position(pi as usize);
            let same_surface = scene.surface_of(&p, 1e-4) == Some(hit.surface);
            let depth_ok = *full.depth.valid.get(u, v)
                && (full.depth.values.get(u, v) - hit.t).abs() < 0.02;
            recovered += (same_surface && depth_ok) as usize;
        }
    }
    let frac = recovered as f64 / occluded.max(1) as f64;
    check(
        occluded > 1000 && frac >= 0.95 && violations == 0,
        format!(
            "recovered {recovered}/{occluded} occluded pixels ({:.2}%), {violations} overwrites",
            100.0 * frac
        ),
    )
}

fn naive_percentile(e: &[f64], p: f64) -> f64 {
    let mut s = e.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = p / 100.0 * (s.len() - 1) as f64;
    let (lo, hi) = (rank.floor() as usize, rank.ceil() as usize);
    s[lo] + (s[hi] - s[lo]) * (rank - lo as f64)
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let track = |name: &str, got: Option<f64>, want: f64, worst: &mut f64| -> Result<(), String> {
        let got = got.ok_or(format!("missing {name}"))?;
        let err = (got - want).abs();
        *worst = worst.max(err);
        if err > 1e-9 {
            return Err(format!("{name}: {got} vs oracle {want}"));
        }
        Ok(())
    };
    for _ in 0..100 {
        let (w, h) = (rng.gen_range(8..40), rng.gen_range(8..30));
        let n = w * h;
        let gt: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..80.0)).collect();
        let pred: Vec<f64> = gt.iter().map(|g| (g + rng.gen_range(-4.0..4.0)).max(0.05)).collect();
        let vg: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.9)).collect();
        let vp: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.9)).collect();
        let grid = |v: &Vec<f64>| Grid::from_vec(w, h, v.clone()).unwrap();
        let mask = |v: &Vec<bool>| Grid::from_vec(w, h, v.clone()).unwrap();
        let dp = DisparityMap::new(grid(&pred), mask(&vp), None).unwrap();
        let dg = DisparityMap::new(grid(&gt), mask(&vg), None).unwrap();
        let d = disparity_metrics(&dp, &dg).map_err(|e| e.to_string())?;
        let zp = DepthMap::new(grid(&pred), mask(&vp), None).unwrap();
        let zg = DepthMap::new(grid(&gt), mask(&vg), None).unwrap();
        let z = depth_metrics(&zp, &zg).map_err(|e| e.to_string())?;

        let idx: Vec<usize> = (0..n).filter(|&i| vg[i] && vp[i]).collect();
        let m = idx.len() as f64;
        let err: Vec<f64> = idx.iter().map(|&i| (pred[i] - gt[i]).abs()).collect();
        let mut epe = 0.0;
        let mut rel = 0.0;
        let mut bad = [0.0; 3];
        let (mut absrel, mut sq) = (0.0, 0.0);
        let mut delta = [0.0; 3];
        for &i in &idx {
            let e = (pred[i] - gt[i]).abs();
            epe += e;
            rel += e / gt[i].max(0.5);
            for (k, t) in [1.0, 2.0, 3.0].iter().enumerate() {
                if e > *t {
                    bad[k] += 1.0;
                }
            }
            absrel += e / gt[i];
            sq += e * e;
            let ratio = f64::max(pred[i] / gt[i], gt[i] / pred[i]);
            for (k, t) in [1.25f64, 1.25 * 1.25, 1.25 * 1.25 * 1.25].iter().enumerate() {
                if ratio < *t {
                    delta[k] += 1.0;
                }
            }
        }
        track("epe", d.get("epe"), epe / m, &mut worst)?;
        track("rel_epe", d.get("rel_epe"), rel / m, &mut worst)?;
        track("q50_epe", d.get("q50_epe"), naive_percentile(&err, 50.0), &mut worst)?;
        track("q95_epe", d.get("q95_epe"), naive_percentile(&err, 95.0), &mut worst)?;
        for (k, name) in ["bad_1", "bad_2", "bad_3"].iter().enumerate() {
            track(name, d.get(name), 100.0 * bad[k] / m, &mut worst)?;
        }
        track("abs_rel", z.get("abs_rel"), absrel / m, &mut worst)?;
        track("mae", z.get("mae"), epe / m, &mut worst)?;
        track("rmse", z.get("rmse"), (sq / m).sqrt(), &mut worst)?;
        for (k, name) in ["delta_1", "delta_2", "delta_3"].iter().enumerate() {
            track(name, z.get(name), 100.0 * delta[k] / m, &mut worst)?;
        }

        let img = Grid::from_vec(w, h, (0..n).map(|_| rng.gen_range(0..6u8) * 40).collect()).unwrap();
        let ent = local_entropy_stats(&img).map_err(|e| e.to_string())?;
        let mut sum = 0.0;
        for y in 0..h {
            for x in 0..w {
                let mut hist = BTreeMap::<u8, usize>::new();
                for yy in y.saturating_sub(5)..=(y + 5).min(h - 1) {
                    for xx in x.saturating_sub(5)..=(x + 5).min(w - 1) {
                        *hist.entry(*img.get(xx, yy)).or_default() += 1;
                    }
                }
                let total: usize = hist.values().sum();
                let e: f64 = hist
                    .values()
                    .map(|&c| {
                        let p = c as f64 / total as f64;
                        -p * p.log2()
                    })
                    .sum();
                track("entropy", Some(*ent.entropy.get(x, y)), e, &mut worst)?;
                sum += e;
            }
        }
        track("entropy_mean", Some(ent.mean), sum / n as f64, &mut worst)?;
    }

    let gt = DisparityMap::from_values(Grid::filled(4, 1, 10.0), None);
    let pred = DisparityMap::from_values(Grid::from_vec(4, 1, vec![10.5, 11.5, 12.5, 13.5]).unwrap(), None);
    let r = disparity_metrics(&pred, &gt).map_err(|e| e.to_string())?;
    let fixture = (r.get("bad_1"), r.get("bad_2"), r.get("bad_3"), r.get("epe"));
    check(
        fixture == (Some(75.0), Some(50.0), Some(25.0), Some(2.0)),
        format!("100 random maps, max deviation {worst:.3e}; bad-1/2/3 fixture {fixture:?}"),
    )
}

fn fdepth(threads: usize, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_fdepth"))
        .arg("--threads")
        .arg(threads.to_string())
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("fdepth {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn files_under(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn cli_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scene = tmp.path().join("scene");
    let s = scene.to_str().unwrap();
    fdepth(4, &["synth-scene", "--out", s, "--scan-height", "160"])?;
    let manifest = scene.join("scene.json");
    let mut trees = Vec::new();
    let mut reports = Vec::new();
    for threads in [1, 8] {
        let out = tmp.path().join(format!("samples-{threads}"));
        let o = out.to_str().unwrap();
        fdepth(threads, &["gen-stereo", "--manifest", manifest.to_str().unwrap(), "--out", o, "--height", "48"])?;
        let index = out.join("index.json");
        let i = index.to_str().unwrap();
        let sweep = fdepth(threads, &["eval", "--index", i, "--pred-dir", o])?;
        let stats = fdepth(threads, &["stats", "--index", i])?;
        let sample = out.join("synthetic-occluder/fisheye-vertical-b065mm-fov195/disparity_ref.pfm");
        let single = fdepth(
            threads,
            &["eval", "--kind", "disparity", "--pred", sample.to_str().unwrap(), "--gt", sample.to_str().unwrap()],
        )?;
        trees.push(files_under(&out));
        reports.push((sweep, stats, single));
    }
    let files = trees[0].len();
    check(
        files == 201 && trees[0] == trees[1] && reports[0] == reports[1],
        format!(
            "{files} files from gen-stereo plus eval and stats output compared between 1 and 8 threads: {}",
            if trees[0] == trees[1] && reports[0] == reports[1] { "identical" } else { "different" }
        ),
    )
}

fn default_grid_counts() -> Outcome {
    let entries = enumerate_benchmark(&BenchmarkGrid::default(), Isometry3::identity())
        .map_err(|e| e.to_string())?;
    let count = |cam: CameraKind, o: RigOrientation| {
        entries
            .iter()
            .filter(|e| e.descriptor.camera == cam && e.descriptor.orientation == o)
            .count()
    };
    let got = [
        count(CameraKind::Fisheye, RigOrientation::Vertical),
        count(CameraKind::Fisheye, RigOrientation::Horizontal),
        count(CameraKind::Pinhole, RigOrientation::Vertical),
        count(CameraKind::Pinhole, RigOrientation::Horizontal),
    ];
    check(
        got == [20, 20, 5, 5] && entries.len() == 50,
        format!("fisheye vertical/horizontal, pinhole vertical/horizontal = {got:?}"),
    )
}

fn format_roundtrips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_mm = 0.0f64;
    for _ in 0..20 {
        let (w, h) = (rng.gen_range(1..64), rng.gen_range(1..48));
        let values = Grid::from_vec(w, h, (0..w * h).map(|_| rng.gen_range(0.001..65.5)).collect()).unwrap();
        let valid = Grid::from_vec(w, h, (0..w * h).map(|_| rng.gen_bool(0.8)).collect()).unwrap();
        let d = DepthMap::new(values, valid, None).unwrap();
        let back = decode_depth_png(&encode_depth_png(&d).unwrap().png).unwrap();
        if back.valid != d.valid {
            return Err("depth PNG changed the validity mask".into());
        }
        for i in 0..w * h {
            if d.valid.as_slice()[i] {
                worst_mm = worst_mm.max(1000.0 * (back.values.as_slice()[i] - d.values.as_slice()[i]).abs());
            }
        }
    }

    let mut pfm_exact = true;
    for _ in 0..20 {
        let (w, h) = (rng.gen_range(1..64), rng.gen_range(1..48));
        let values = Grid::from_vec(w, h, (0..w * h).map(|_| rng.gen_range(0.0..300.0)).collect()).unwrap();
        let valid = Grid::from_vec(w, h, (0..w * h).map(|_| rng.gen_bool(0.8)).collect()).unwrap();
        let d = DisparityMap::new(values, valid, None).unwrap();
        let bytes = encode_pfm(&disparity_samples(&d));
        let back = samples_to_disparity(&decode_pfm(&bytes).unwrap()).unwrap();
        let rebytes = encode_pfm(&disparity_samples(&back));
        let values_exact = (0..w * h).all(|i| {
            !d.valid.as_slice()[i]
                || back.values.as_slice()[i].to_bits() == (d.values.as_slice()[i] as f32 as f64).to_bits()
        });
        pfm_exact &= rebytes == bytes && back.valid == d.valid && values_exact;
    }

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::create_dir(tmp.path().join("scans")).unwrap();
    std::fs::write(tmp.path().join("scans/a.ply"), b"").unwrap();
    let m = SceneManifest {
        schema_version: 1,
        scene_id: "lab".into(),
        scans: vec![ScanEntry {
            id: 0,
            path: "scans/a.ply".into(),
            origin: [0.25, -1.65, 3.0],
        }],
        central_scan: 0,
        capture_height: CaptureHeight::Eye,
        lighting: Lighting::Mixed,
        masks: None,
        camera: policy(),
        rig_pose: None,
    };
    let path = tmp.path().join("scene.json");
    m.save(&path).map_err(|e| e.to_string())?;
    let first = std::fs::read(&path).unwrap();
    let loaded = SceneManifest::load(&path).map_err(|e| e.to_string())?;
    loaded.save(&path).map_err(|e| e.to_string())?;
    let manifest_exact = loaded == m && std::fs::read(&path).unwrap() == first;

    check(
        worst_mm <= 0.5 && pfm_exact && manifest_exact,
        format!("depth PNG max error {worst_mm:.4} mm; PFM bit-exact {pfm_exact}; manifest bit-exact {manifest_exact}"),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 10] = [
        ("1 depth/disparity inversion", depth_disparity_inversion),
        ("2 analytic fixture", analytic_fixture),
        ("3 double sphere inverse", ds_closed_form_inverse),
        ("4 virtual intrinsics plug-ins", virtual_intrinsics_plug_ins),
        ("5 photo-consistency", photo_consistency),
        ("6 occlusion fill", occlusion_fill),
        ("7 metric oracles", metric_oracles),
        ("8 thread-count determinism", cli_determinism),
        ("9 benchmark grid", default_grid_counts),
        ("10 format roundtrips", format_roundtrips),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                println!("FAIL  criterion {name}: {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
