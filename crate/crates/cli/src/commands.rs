use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fisheye_depth::io::depth_png::decode_depth_png;
use fisheye_depth::io::manifest::{CaptureHeight, Lighting, Pose, ScanEntry, SceneMasks};
use fisheye_depth::io::pfm::{decode_pfm, encode_pfm, INVALID_SAMPLE};
use fisheye_depth::io::{
    read_depth_png, read_mask_png, read_pfm, read_ply, read_rgb_png, write_atomic,
    write_depth_png, write_mask_png, write_pfm, write_ply, write_rgb_png, SampleIndex,
    SampleRecord, SceneManifest,
};
use fisheye_depth::metrics::{
    depth_histogram, depth_metrics, disparity_metrics, local_entropy_stats, ComparisonDomain,
    EvalReport,
};
use fisheye_depth::projection::{
    crop_and_rotate_for_stereo, restore_from_stereo_input, warp as warp_grid, CropInfo,
    Interpolation,
};
use fisheye_depth::render::synthesize_stereo_sample;
use fisheye_depth::rig::{enumerate_benchmark, BenchmarkGrid};
use fisheye_depth::stereo::{depth_to_disparity, disparity_to_depth};
use fisheye_depth::synthetic::{occluder_scene, OCCLUDER_SCANS};
use fisheye_depth::{
    DepthMap, DisparityMap, DoubleSphereIntrinsics, Error, Grid, Mask, ProjectionSpec,
    RenderSettings, Result, StereoGeometry, VirtualIntrinsicsPolicy,
};
use log::info;
use serde_json::{json, Value};

use crate::cli::{
    ConvertArgs, EvalArgs, EvalKind, GenStereoArgs, InterpArg, PrepArgs, SampleKind, StatsArgs,
    SynthArgs, WarpArgs,
};

fn is_pfm(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pfm"))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    write_atomic(path, serde_json::to_string_pretty(value)?.as_bytes())
}

fn emit(value: &Value) {
    println!("{value}");
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Depth from a millimeter PNG or a float PFM.
fn read_depth_any(path: &Path) -> Result<DepthMap> {
    if is_pfm(path) {
        let d = read_pfm(path)?;
        DepthMap::new(d.values, d.valid, None)
    } else {
        read_depth_png(path)
    }
}

/// Returns the number of clamped PNG pixels.
fn write_depth_any(path: &Path, depth: &DepthMap) -> Result<usize> {
    if is_pfm(path) {
        write_pfm(path, &DisparityMap::new(depth.values.clone(), depth.valid.clone(), None)?)?;
        Ok(0)
    } else {
        write_depth_png(path, depth)
    }
}

fn require_pfm(path: &Path) -> Result<()> {
    if is_pfm(path) {
        Ok(())
    } else {
        Err(Error::Config(format!("{} must be a .pfm file", path.display())))
    }
}

fn interpolation(arg: Option<InterpArg>, kind: SampleKind) -> Interpolation {
    match (arg, kind) {
        (Some(InterpArg::Nearest), _) => Interpolation::Nearest,
        (Some(InterpArg::Bilinear), _) => Interpolation::Bilinear,
        (None, SampleKind::Rgb) => Interpolation::Bilinear,
        (None, _) => Interpolation::Nearest,
    }
}

pub fn warp(a: WarpArgs) -> Result<()> {
    let src_spec: ProjectionSpec = read_json(&a.source)?;
    let target: ProjectionSpec = read_json(&a.target)?;
    src_spec.validate()?;
    target.validate()?;
    let interp = interpolation(a.interp, a.kind);
    let valid = match a.kind {
        SampleKind::Rgb => {
            let img = read_rgb_png(&a.input)?;
            let mask = a.input_mask.as_deref().map(read_mask_png).transpose()?;
            let out = warp_grid(&img, mask.as_ref(), &src_spec, &target, interp)?;
            write_rgb_png(&a.output, &out.image)?;
            out.valid
        }
        SampleKind::Depth => {
            let d = read_depth_any(&a.input)?;
            let out = warp_grid(&d.values, Some(&d.valid), &src_spec, &target, interp)?;
            write_depth_any(&a.output, &DepthMap::new(out.image, out.valid.clone(), None)?)?;
            out.valid
        }
        SampleKind::Disparity => {
            require_pfm(&a.output)?;
            let d = read_pfm(&a.input)?;
            let out = warp_grid(&d.values, Some(&d.valid), &src_spec, &target, interp)?;
            write_pfm(&a.output, &DisparityMap::new(out.image, out.valid.clone(), None)?)?;
            out.valid
        }
    };
    if let Some(m) = &a.mask_output {
        write_mask_png(m, &valid)?;
    }
    emit(&json!({
        "output": a.output,
        "width": valid.width(),
        "height": valid.height(),
        "valid_pixels": valid.count(),
    }));
    Ok(())
}

pub fn gen_stereo(a: GenStereoArgs) -> Result<()> {
    let manifest = SceneManifest::load(&a.manifest)?;
    let base = a.manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let grid = match &a.grid {
        Some(p) => read_json::<BenchmarkGrid>(p)?,
        None => BenchmarkGrid::default(),
    };
    grid.validate()?;
    if a.height < 2 {
        return Err(Error::Config("height must be at least 2".into()));
    }
    let regions = match &manifest.masks {
        Some(p) => SceneMasks::load(&base.join(p))?.regions,
        None => Vec::new(),
    };
    let mut bundle = Vec::with_capacity(manifest.scans.len());
    for scan in &manifest.scans {
        info!("reading scan {} from {}", scan.id, scan.path.display());
        let mut cloud = read_ply(&base.join(&scan.path), scan.id)?;
        cloud.scan_ids.fill(scan.id);
        bundle.push(cloud);
    }
    let settings = RenderSettings {
        splat_radius_px: a.splat_radius,
        hole_fill_order: manifest.fill_order(),
    };
    let entries = enumerate_benchmark(&grid, manifest.rig_pose()?)?;

    let mut records = Vec::with_capacity(entries.len());
    for entry in &entries {
        let d = &entry.descriptor;
        info!("rendering {}", d.id);
        let camera = d.virtual_camera(&manifest.camera)?;
        let sample =
            synthesize_stereo_sample(&bundle, &entry.rig, &camera, a.height, &settings, &regions)?;
        let rel = PathBuf::from(&manifest.scene_id).join(&d.id);
        create_dir(&a.out.join(&rel))?;
        let record = SampleRecord {
            scene_id: manifest.scene_id.clone(),
            rig: d.clone(),
            width: sample.depth_ref.width(),
            height: sample.depth_ref.height(),
            rgb_ref: rel.join("rgb_ref.png"),
            rgb_sec: rel.join("rgb_sec.png"),
            depth_ref: rel.join("depth_ref.png"),
            disparity_ref: rel.join("disparity_ref.pfm"),
            depth_clamped: 0,
        };
        write_rgb_png(&a.out.join(&record.rgb_ref), &sample.rgb_ref)?;
        write_rgb_png(&a.out.join(&record.rgb_sec), &sample.rgb_sec)?;
        let clamped = write_depth_png(&a.out.join(&record.depth_ref), &sample.depth_ref)?;
        write_pfm(&a.out.join(&record.disparity_ref), &sample.disparity_ref)?;
        records.push(SampleRecord {
            depth_clamped: clamped,
            ..record
        });
    }
    let index_path = a.out.join("index.json");
    SampleIndex::new(records).save(&index_path)?;
    emit(&json!({ "index": index_path, "samples": entries.len() }));
    Ok(())
}

fn geometry_for(height: usize, actual: usize, baseline_m: f64) -> Result<StereoGeometry> {
    if height != actual {
        return Err(Error::Contract(format!(
            "--height {height} does not match the input height {actual}"
        )));
    }
    StereoGeometry::new(height, baseline_m)
}

pub fn disp2depth(a: ConvertArgs) -> Result<()> {
    let mut disp = read_pfm(&a.input)?;
    disp.geometry = Some(geometry_for(a.height, disp.height(), a.baseline_m)?);
    let depth = disparity_to_depth(&disp)?;
    let clamped = write_depth_any(&a.output, &depth)?;
    emit(&json!({
        "output": a.output,
        "valid_pixels": depth.valid.count(),
        "clamped_pixels": clamped,
    }));
    Ok(())
}

pub fn depth2disp(a: ConvertArgs) -> Result<()> {
    require_pfm(&a.output)?;
    let mut depth = read_depth_any(&a.input)?;
    depth.geometry = Some(geometry_for(a.height, depth.height(), a.baseline_m)?);
    let disp = depth_to_disparity(&depth)?;
    write_pfm(&a.output, &disp)?;
    emit(&json!({ "output": a.output, "valid_pixels": disp.valid.count() }));
    Ok(())
}

fn evaluate(kind: EvalKind, pred: &Path, gt: &Path) -> Result<EvalReport> {
    match kind {
        EvalKind::Disparity => disparity_metrics(&read_pfm(pred)?, &read_pfm(gt)?),
        EvalKind::Depth => depth_metrics(&read_depth_any(pred)?, &read_depth_any(gt)?),
    }
}

pub fn eval(a: EvalArgs) -> Result<()> {
    if let Some(index) = &a.index {
        return eval_sweep(&a, index);
    }
    let (Some(pred), Some(gt)) = (&a.pred, &a.gt) else {
        return Err(Error::Config("eval needs --pred and --gt, or --index".into()));
    };
    let report = evaluate(a.kind, pred, gt)?.with_domain(ComparisonDomain {
        fov_deg: a.fov_deg,
        baseline_m: a.baseline_m,
        projection: (a.fov_deg.is_some() || a.baseline_m.is_some())
            .then(|| "equirectangular".to_string()),
    });
    let text = report.to_json()?;
    if let Some(out) = &a.output {
        write_atomic(out, text.as_bytes())?;
    }
    println!("{text}");
    Ok(())
}

/// Orientation, camera, FOV and baseline, the latter two scaled to integers.
type SweepKey = (String, String, i64, i64);

/// Metric sum, sample count and valid pixel count.
type SweepCell = (f64, usize, usize);

/// Mean of one metric per (orientation, camera, FOV, baseline) over scenes, as CSV.
fn eval_sweep(a: &EvalArgs, index_path: &Path) -> Result<()> {
    let index = SampleIndex::load(index_path)?;
    let base = index_path.parent().unwrap_or(Path::new("."));
    let pred_dir = a
        .pred_dir
        .as_ref()
        .ok_or_else(|| Error::Config("sweep needs --pred-dir".into()))?;
    let metric = a.metric.clone().unwrap_or_else(|| match a.kind {
        EvalKind::Disparity => "epe".into(),
        EvalKind::Depth => "abs_rel".into(),
    });
    let mut cells: BTreeMap<SweepKey, SweepCell> = BTreeMap::new();
    for rec in &index.samples {
        let rel = match a.kind {
            EvalKind::Disparity => &rec.disparity_ref,
            EvalKind::Depth => &rec.depth_ref,
        };
        let report = evaluate(a.kind, &pred_dir.join(rel), &base.join(rel))?;
        let m = report
            .metrics
            .get(&metric)
            .ok_or_else(|| Error::Config(format!("unknown metric {metric:?}")))?;
        let key = (
            rec.rig.orientation.name().to_string(),
            rec.rig.camera.name().to_string(),
            (rec.rig.fov_deg * 1000.0).round() as i64,
            (rec.rig.baseline_m * 1e6).round() as i64,
        );
        let cell = cells.entry(key).or_insert((0.0, 0, 0));
        cell.0 += m.value;
        cell.1 += 1;
        cell.2 += m.valid_pixel_count;
    }
    let mut csv = format!("orientation,camera,fov_deg,baseline_m,samples,valid_pixels,{metric}\n");
    for ((orientation, camera, fov, b), (sum, n, px)) in &cells {
        csv.push_str(&format!(
            "{orientation},{camera},{},{},{n},{px},{}\n",
            *fov as f64 / 1000.0,
            *b as f64 / 1e6,
            sum / *n as f64
        ));
    }
    if let Some(out) = &a.output {
        write_atomic(out, csv.as_bytes())?;
    }
    print!("{csv}");
    Ok(())
}

pub fn stats(a: StatsArgs) -> Result<()> {
    let index = SampleIndex::load(&a.index)?;
    if index.samples.is_empty() {
        return Err(Error::Empty("sample index is empty".into()));
    }
    let base = a.index.parent().unwrap_or(Path::new("."));
    let mut counts = vec![0usize; a.bin_edges.len().saturating_sub(1)];
    let mut valid = 0usize;
    let mut entropy_means = Vec::with_capacity(index.samples.len());
    for rec in &index.samples {
        let depth = read_depth_png(&base.join(&rec.depth_ref))?;
        let h = depth_histogram(&depth, &a.bin_edges)?;
        for (c, n) in counts.iter_mut().zip(&h.counts) {
            *c += n;
        }
        valid += h.valid_pixel_count;
        let gray = fisheye_depth::grid::rgb_to_gray(&read_rgb_png(&base.join(&rec.rgb_ref))?);
        entropy_means.push(local_entropy_stats(&gray)?.mean);
    }
    let edges: Vec<Value> = a
        .bin_edges
        .iter()
        .map(|&e| if e.is_finite() { json!(e) } else { json!(e.to_string()) })
        .collect();
    let fractions: Vec<f64> = counts.iter().map(|&c| c as f64 / valid as f64).collect();
    emit(&json!({
        "samples": index.samples.len(),
        "bin_edges": edges,
        "counts": counts,
        "fractions": fractions,
        "valid_pixel_count": valid,
        "mean_local_entropy": entropy_means.iter().sum::<f64>() / entropy_means.len() as f64,
    }));
    Ok(())
}

/// A prep-stereo-input payload with its validity mask.
enum Payload {
    Rgb(Grid<[u8; 3]>),
    Depth(Grid<f64>),
    Disparity(Grid<f32>),
}

fn load_payload(path: &Path, mask: Option<&Path>) -> Result<(Payload, Mask)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if is_pfm(path) {
        let s = decode_pfm(&bytes)?;
        let valid = s.map(|&v| v.is_finite() && v >= 0.0);
        return Ok((Payload::Disparity(s), valid));
    }
    match decode_depth_png(&bytes) {
        Ok(d) => Ok((Payload::Depth(d.values), d.valid)),
        Err(Error::Unsupported(_)) => {
            let img = fisheye_depth::io::image_png::decode_rgb_png(&bytes)?;
            let valid = match mask {
                Some(m) => read_mask_png(m)?,
                None => img.map(|p| p.iter().any(|&c| c > 0)),
            };
            Ok((Payload::Rgb(img), valid))
        }
        Err(e) => Err(e),
    }
}

fn save_payload(path: &Path, payload: Payload, valid: &Mask) -> Result<()> {
    match payload {
        Payload::Rgb(img) => write_rgb_png(path, &img),
        Payload::Depth(values) => write_depth_png(path, &DepthMap::new(values, valid.clone(), None)?).map(|_| ()),
        Payload::Disparity(s) => {
            let s = Grid::from_fn_par(s.width(), s.height(), |x, y| {
                if *valid.get(x, y) {
                    *s.get(x, y)
                } else {
                    INVALID_SAMPLE
                }
            });
            write_atomic(path, &encode_pfm(&s))
        }
    }
}

fn transform<T: Copy + Default>(
    img: &Grid<T>,
    valid: &Mask,
    undo: Option<&CropInfo>,
) -> Result<(Grid<T>, Mask, Option<CropInfo>)> {
    match undo {
        Some(info) => {
            let (g, m) = restore_from_stereo_input(img, valid, info)?;
            Ok((g, m, None))
        }
        None => {
            let (g, m, info) = crop_and_rotate_for_stereo(img, valid)?;
            Ok((g, m, Some(info)))
        }
    }
}

pub fn prep_stereo_input(a: PrepArgs) -> Result<()> {
    let (payload, valid) = load_payload(&a.input, a.mask.as_deref())?;
    let undo = if a.undo {
        Some(read_json::<CropInfo>(&a.crop_info)?)
    } else {
        None
    };
    let (out, mask, info) = match payload {
        Payload::Rgb(g) => {
            let (g, m, i) = transform(&g, &valid, undo.as_ref())?;
            (Payload::Rgb(g), m, i)
        }
        Payload::Depth(g) => {
            let (g, m, i) = transform(&g, &valid, undo.as_ref())?;
            (Payload::Depth(g), m, i)
        }
        Payload::Disparity(g) => {
            let (g, m, i) = transform(&g, &valid, undo.as_ref())?;
            (Payload::Disparity(g), m, i)
        }
    };
    let (w, h) = mask.dims();
    save_payload(&a.output, out, &mask)?;
    if let Some(info) = &info {
        write_json(&a.crop_info, info)?;
    }
    emit(&json!({ "output": a.output, "width": w, "height": h, "crop": info }));
    Ok(())
}

/// Reference fisheye used by the synthetic scene.
pub fn synthetic_camera() -> VirtualIntrinsicsPolicy {
    VirtualIntrinsicsPolicy::with_defaults(
        DoubleSphereIntrinsics::new(300.0, 300.0, 639.5, 479.5, -0.2, 0.6, 1280, 960)
            .expect("constant intrinsics are valid"),
    )
}

pub fn synth_scene(a: SynthArgs) -> Result<()> {
    if a.scan_height < 2 {
        return Err(Error::Config("scan height must be at least 2".into()));
    }
    let scene = occluder_scene();
    create_dir(&a.out.join("scans"))?;
    let mut scans = Vec::new();
    for (i, origin) in OCCLUDER_SCANS.iter().enumerate() {
        let path = PathBuf::from("scans").join(format!("scan_{i}.ply"));
        let cloud = scene.scan(*origin, a.scan_height, i as u16)?;
        info!("scan {i}: {} points", cloud.len());
        write_ply(&a.out.join(&path), &cloud)?;
        scans.push(ScanEntry {
            id: i as u16,
            path,
            origin: *origin,
        });
    }
    let manifest = SceneManifest {
        schema_version: fisheye_depth::io::manifest::SCHEMA_VERSION,
        scene_id: "synthetic-occluder".into(),
        scans,
        central_scan: 0,
        capture_height: CaptureHeight::Eye,
        lighting: Lighting::Office,
        masks: None,
        camera: synthetic_camera(),
        rig_pose: Some(Pose::at([1.0, 0.0, 0.0])),
    };
    let path = a.out.join("scene.json");
    manifest.save(&path)?;
    emit(&json!({ "manifest": path }));
    Ok(())
}
