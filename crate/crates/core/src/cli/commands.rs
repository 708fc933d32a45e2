use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use super::{
    write_atomic, CheckAttnArgs, CliError, Command, ConfigFile, GenMapsArgs, GridArgs, InputArgs, LossesArgs,
    PerturbArgs, RunManifest, StatsArgs, SynthArgs,
};
use crate::analysis::{
    attitude_histograms, depth_histogram, histogram_csv, histogram_svg, overlap_coefficient, sample_perturbations,
    scatter_csv, scatter_svg, v_correlation_series, Histogram, HistogramRange, Quantity, OVERLAP_BINS,
};
use crate::attention::{frame_losses, run_invariant_suite, total_loss, Fixture, FixtureShapes, LossComponents, LossWeights};
use crate::dataset::{
    parse_calib, parse_detections, parse_labels, synthesize_scene, write_frames, CalibKeys, FrameRecord, FrameSet,
    SceneConfig,
};
use crate::maps::{build_global_denorm_map, build_ground_depth_map, denorm_l1_loss, refine_denorm_map, DenormMap, MapFile, MapGrid};

const DEFAULT_RESOLUTION: (usize, usize) = (512, 928);
const DEFAULT_STRIDE: usize = 16;
const DEFAULT_SIGMA: f64 = 0.3;
const DEFAULT_BINS: usize = 64;

pub fn dispatch(cmd: &Command, cfg: &ConfigFile) -> Result<(), CliError> {
    match cmd {
        Command::GenMaps(a) => gen_maps(a, cfg),
        Command::Perturb(a) => perturb(a, cfg),
        Command::Stats(a) => stats(a, cfg),
        Command::Synth(a) => synth(a, cfg),
        Command::Losses(a) => losses(a, cfg),
        Command::CheckAttn(a) => check_attn(a, cfg),
    }
}

const INPUT_KEYS: [&str; 8] = ["calib", "labels", "denorm", "synthetic", "frames", "objects", "calib-keys", "jobs"];

fn keys_with(extra: &[&'static str]) -> Vec<&'static str> {
    INPUT_KEYS.iter().chain(extra).copied().collect()
}

pub fn parse_resolution(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::input(format!("resolution must look like 512x928, got {s:?}"));
    let (h, w) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    if h == 0 || w == 0 {
        return Err(bad());
    }
    Ok((h, w))
}

fn resolution(flag: &Option<String>, cfg: &ConfigFile) -> Result<(usize, usize), CliError> {
    match flag.clone().or(cfg.string("resolution")?) {
        Some(s) => parse_resolution(&s),
        None => Ok(DEFAULT_RESOLUTION),
    }
}

fn grid(g: &GridArgs, cfg: &ConfigFile) -> Result<MapGrid, CliError> {
    let (h, w) = resolution(&g.resolution, cfg)?;
    let stride = match &g.stride {
        Some(s) => s.parse().expect("validated by clap"),
        None => cfg.usize("stride")?.unwrap_or(DEFAULT_STRIDE),
    };
    if stride != 1 && stride != 16 {
        return Err(CliError::input(format!("stride must be 1 or 16, got {stride}")));
    }
    Ok(MapGrid::new(h, w, stride)?)
}

fn out_dir(flag: &Option<PathBuf>, cfg: &ConfigFile) -> Result<PathBuf, CliError> {
    let out = flag.clone().or(cfg.string("out")?.map(PathBuf::from)).ok_or_else(|| CliError::input("missing --out"))?;
    std::fs::create_dir_all(&out).map_err(|e| CliError::input(format!("{}: {e}", out.display())))?;
    Ok(out)
}

fn calib_keys(flag: &Option<String>, cfg: &ConfigFile) -> Result<CalibKeys, CliError> {
    match flag.clone().or(cfg.string("calib-keys")?) {
        Some(spec) => CalibKeys::with_overrides(&spec).map_err(CliError::Input),
        None => Ok(CalibKeys::default()),
    }
}

/// Frames either loaded from disk or generated.
struct Inputs {
    frames: Vec<FrameRecord>,
    paths: Vec<String>,
    settings: serde_json::Value,
    /// Per-frame load failures; the remaining frames are still used.
    failures: Vec<CliError>,
}

fn scene_config(input: &InputArgs, cfg: &ConfigFile, seed: u64, image: (usize, usize)) -> Result<SceneConfig, CliError> {
    let d = SceneConfig::default();
    Ok(SceneConfig {
        frames: input.frames.or(cfg.usize("frames")?).unwrap_or(d.frames),
        objects_per_frame: input.objects.or(cfg.usize("objects")?).unwrap_or(d.objects_per_frame),
        image_height: image.0,
        image_width: image.1,
        seed,
        ..d
    })
}

fn load_inputs(input: &InputArgs, cfg: &ConfigFile, seed: u64, image: (usize, usize)) -> Result<Inputs, CliError> {
    let synthetic = input.synthetic || cfg.bool("synthetic")?.unwrap_or(false);
    if synthetic {
        let scene = scene_config(input, cfg, seed, image)?;
        let frames = synthesize_scene(&scene)?;
        return Ok(Inputs {
            frames,
            paths: Vec::new(),
            settings: json!({ "synthetic": scene }),
            failures: Vec::new(),
        });
    }
    let dir = |flag: &Option<PathBuf>, key: &str| -> Result<Option<PathBuf>, CliError> {
        Ok(flag.clone().or(cfg.string(key)?.map(PathBuf::from)))
    };
    let (Some(calib), Some(labels), Some(denorm)) =
        (dir(&input.calib, "calib")?, dir(&input.labels, "labels")?, dir(&input.denorm, "denorm")?)
    else {
        return Err(CliError::input("missing input: pass --calib, --labels and --denorm, or --synthetic"));
    };
    for d in [&calib, &labels, &denorm] {
        if !d.is_dir() {
            return Err(CliError::input(format!("input directory {} does not exist", d.display())));
        }
    }
    let keys = calib_keys(&input.calib_keys, cfg)?;
    let set = FrameSet { calib, labels, denorm };
    let ids = set.frame_ids()?;
    let loaded: Vec<_> = ids.par_iter().map(|id| set.load_frame(id, &keys)).collect();
    let mut frames = Vec::new();
    let mut failures = Vec::new();
    for r in loaded {
        match r {
            Ok(f) => frames.push(f),
            Err(e) => {
                eprintln!("error: {e}");
                failures.push(e.into());
            }
        }
    }
    let paths = [&set.calib, &set.labels, &set.denorm].iter().map(|p| p.display().to_string()).collect();
    let settings = json!({
        "calib": set.calib, "labels": set.labels, "denorm": set.denorm,
        "calib_keys": [keys.projection, keys.extrinsics],
    });
    Ok(Inputs { frames, paths, settings, failures })
}

/// The worst of the collected failures, if any.
fn finish(failures: Vec<CliError>) -> Result<(), CliError> {
    let n = failures.len();
    match failures.into_iter().max_by_key(|e| e.exit_code()) {
        None => Ok(()),
        Some(CliError::Geometry(_)) => Err(CliError::Geometry(format!("{n} frame(s) failed"))),
        Some(_) => Err(CliError::Input(format!("{n} frame(s) failed"))),
    }
}

fn write_text(manifest: &mut RunManifest, out: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = out.join(name);
    write_atomic(&path, text.as_bytes())?;
    manifest.add_output(out, &path);
    Ok(())
}

fn seed(flag: Option<u64>, cfg: &ConfigFile) -> Result<u64, CliError> {
    Ok(flag.or(cfg.u64("seed")?).unwrap_or(0))
}

struct FrameMaps {
    triangles: usize,
    pixels_written: usize,
    skipped_degenerate: usize,
    insufficient_points: bool,
    refined_vs_global: f64,
    outputs: Vec<PathBuf>,
}

fn frame_maps(f: &FrameRecord, grid: &MapGrid, out: &Path) -> Result<FrameMaps, CliError> {
    let (h, w) = grid.dims();
    let k = grid.intrinsics(&f.rig.intrinsics);
    let depth = build_ground_depth_map(&k, &f.ground, h, w)?;
    let global = build_global_denorm_map(&f.ground, h, w)?;
    let refined = refine_denorm_map(&f.ground, &f.boxes(), &k, h, w)?;
    let mut outputs = Vec::new();
    for (dir, file) in [
        ("depth", MapFile::from(&depth)),
        ("global", MapFile::from(&global)),
        ("refined", MapFile::from(&refined.map)),
    ] {
        let path = out.join(dir).join(format!("{}.gpkm", f.id));
        file.write(&path)?;
        outputs.push(path);
    }
    Ok(FrameMaps {
        triangles: refined.triangles,
        pixels_written: refined.pixels_written,
        skipped_degenerate: refined.skipped_degenerate,
        insufficient_points: refined.insufficient_points,
        refined_vs_global: denorm_l1_loss(&refined.map, &global)?,
        outputs,
    })
}

fn gen_maps(a: &GenMapsArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let start = Instant::now();
    cfg.check_keys(&keys_with(&["out", "seed", "resolution", "stride"]))?;
    let grid = grid(&a.grid, cfg)?;
    let seed = seed(a.seed, cfg)?;
    let out = out_dir(&a.out, cfg)?;
    let inputs = load_inputs(&a.input, cfg, seed, (grid.image_height, grid.image_width))?;
    for d in ["depth", "global", "refined"] {
        std::fs::create_dir_all(out.join(d)).map_err(|e| CliError::input(format!("{}: {e}", out.display())))?;
    }
    let settings = json!({
        "inputs": inputs.settings,
        "resolution": [grid.image_height, grid.image_width],
        "stride": grid.stride,
        "seed": seed,
    });
    let mut m = RunManifest::new("gen-maps", settings, Some(seed));
    m.inputs = inputs.paths.clone();
    let results: Vec<_> = inputs.frames.par_iter().map(|f| (f.id.clone(), frame_maps(f, &grid, &out))).collect();
    let mut failures = inputs.failures;
    m.count("frames_processed", 0);
    m.count("frame_errors", failures.len() as u64);
    let mut worst_l1: f64 = 0.0;
    for (id, r) in results {
        match r {
            Ok(r) => {
                m.count("frames_processed", 1);
                m.count("triangles", r.triangles as u64);
                m.count("pixels_written", r.pixels_written as u64);
                m.count("skipped_degenerate", r.skipped_degenerate as u64);
                m.count("insufficient_points", r.insufficient_points as u64);
                worst_l1 = worst_l1.max(r.refined_vs_global);
                for p in &r.outputs {
                    m.add_output(&out, p);
                }
            }
            Err(e) => {
                eprintln!("error: frame {id}: {e}");
                m.count("frame_errors", 1);
                failures.push(e);
            }
        }
    }
    m.metrics.insert("max_refined_vs_global_l1".into(), worst_l1);
    m.wall_time_s = start.elapsed().as_secs_f64();
    m.write(&out)?;
    log::info!("gen-maps: {} frames, max refined/global L1 {worst_l1:e}", m.counters["frames_processed"]);
    finish(failures)
}

fn perturb(a: &PerturbArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let start = Instant::now();
    cfg.check_keys(&keys_with(&["out", "seed", "sigma", "seeds", "quantity", "resolution"]))?;
    let first = seed(a.seed, cfg)?;
    let sigma = a.sigma.or(cfg.f64("sigma")?).unwrap_or(DEFAULT_SIGMA);
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(CliError::input(format!("--sigma must be finite and non-negative, got {sigma}")));
    }
    let seeds = a.seeds.or(cfg.usize("seeds")?).unwrap_or(1);
    let quantity = a.quantity.clone().or(cfg.string("quantity")?).unwrap_or_else(|| "all".into());
    let quantities: Vec<Quantity> = if quantity == "all" {
        Quantity::ALL.to_vec()
    } else {
        vec![quantity.parse::<Quantity>()?]
    };
    let image = resolution(&cfg.string("resolution")?.or(None), cfg)?;
    let out = out_dir(&a.out, cfg)?;

    let synthetic = a.input.synthetic || cfg.bool("synthetic")?.unwrap_or(false);
    let fixed = if synthetic { None } else { Some(load_inputs(&a.input, cfg, first, image)?) };
    let mut failures = Vec::new();
    let mut input_settings = serde_json::Value::Null;
    let mut m_inputs = Vec::new();
    if let Some(inp) = &fixed {
        input_settings = inp.settings.clone();
        m_inputs = inp.paths.clone();
    }
    let mut overlap_rows = String::from("seed,quantity,overlap\n");
    let mut results = Vec::new();
    let mut outputs: Vec<(String, String)> = Vec::new();
    for s in first..first + seeds as u64 {
        let generated;
        let frames: &[FrameRecord] = match &fixed {
            Some(inp) => &inp.frames,
            None => {
                let inp = load_inputs(&a.input, cfg, s, image)?;
                if input_settings.is_null() {
                    input_settings = inp.settings.clone();
                }
                generated = inp.frames;
                &generated
            }
        };
        if frames.is_empty() {
            return Err(CliError::input("no frames to perturb"));
        }
        let offsets = sample_perturbations(frames.len(), sigma, s)?;
        let mut entry = serde_json::Map::new();
        entry.insert("seed".into(), json!(s));
        let mut overlaps = std::collections::BTreeMap::new();
        for &q in &quantities {
            let clean = v_correlation_series(frames, q, None)?;
            let moved = v_correlation_series(frames, q, Some(&offsets))?;
            let o = overlap_coefficient(&clean, &moved, OVERLAP_BINS)?;
            overlaps.insert(q, o);
            overlap_rows.push_str(&format!("{s},{q},{o}\n"));
            entry.insert(q.name().into(), json!(o));
            outputs.push((format!("scatter_{q}_seed{s}.csv"), scatter_csv(&[&clean, &moved])));
            outputs.push((format!("scatter_{q}_seed{s}.svg"), scatter_svg(&[&clean, &moved], &format!("v vs {q}, sigma {sigma}"))));
        }
        if let (Some(d), Some(r), Some(p)) =
            (overlaps.get(&Quantity::Depth), overlaps.get(&Quantity::Roll), overlaps.get(&Quantity::Pitch))
        {
            entry.insert("attitude_more_robust".into(), json!(r > d && p > d));
        }
        results.push(serde_json::Value::Object(entry));
    }
    let all_robust = results.iter().all(|r| r.get("attitude_more_robust").and_then(|v| v.as_bool()).unwrap_or(false));
    let settings = json!({
        "inputs": input_settings, "sigma": sigma, "seed": first, "seeds": seeds,
        "quantity": quantity, "overlap_bins": OVERLAP_BINS,
    });
    let mut m = RunManifest::new("perturb", settings, Some(first));
    m.inputs = m_inputs;
    for (name, text) in &outputs {
        write_text(&mut m, &out, name, text)?;
    }
    write_text(&mut m, &out, "overlap.csv", &overlap_rows)?;
    let report = json!({
        "sigma": sigma,
        "results": results,
        "attitude_more_robust": if quantities.len() == 3 { json!(all_robust) } else { serde_json::Value::Null },
    });
    write_text(&mut m, &out, "report.json", &(serde_json::to_string_pretty(&report).unwrap() + "\n"))?;
    m.count("seeds", seeds as u64);
    if let Some(inp) = fixed {
        m.count("frames_processed", inp.frames.len() as u64);
        m.count("frame_errors", inp.failures.len() as u64);
        failures = inp.failures;
    }
    m.wall_time_s = start.elapsed().as_secs_f64();
    m.write(&out)?;
    if quantities.len() == 3 {
        log::info!("perturb: attitude overlaps exceed depth overlap on every seed: {all_robust}");
    }
    finish(failures)
}

fn stats(a: &StatsArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let start = Instant::now();
    cfg.check_keys(&keys_with(&["out", "seed", "bins", "resolution", "stride"]))?;
    let grid = grid(&a.grid, cfg)?;
    let seed = seed(a.seed, cfg)?;
    let bins = a.bins.or(cfg.usize("bins")?).unwrap_or(DEFAULT_BINS);
    let out = out_dir(&a.out, cfg)?;
    let inputs = load_inputs(&a.input, cfg, seed, (grid.image_height, grid.image_width))?;
    let depth = depth_histogram(&inputs.frames, bins, HistogramRange::Auto)?;
    let att = attitude_histograms(&inputs.frames, bins, &grid)?;
    let settings = json!({
        "inputs": inputs.settings, "bins": bins, "seed": seed,
        "resolution": [grid.image_height, grid.image_width], "stride": grid.stride,
    });
    let mut m = RunManifest::new("stats", settings, Some(seed));
    m.inputs = inputs.paths.clone();
    let hists: [(&str, &Histogram, &str); 4] = [
        ("depth", &depth, "depth (m)"),
        ("roll", &att.roll, "roll (rad)"),
        ("pitch", &att.pitch, "pitch (rad)"),
        ("height", &att.height, "height (m)"),
    ];
    let mut summary = serde_json::Map::new();
    for (name, h, label) in hists {
        write_text(&mut m, &out, &format!("{name}_histogram.csv"), &histogram_csv(h))?;
        write_text(&mut m, &out, &format!("{name}_histogram.svg"), &histogram_svg(h, name, label))?;
        summary.insert(
            name.into(),
            json!({
                "total": h.total(), "mean": h.mean(), "occupied_range": h.occupied_range(),
                "relative_support": h.relative_support(),
            }),
        );
    }
    let ratio = match (depth.relative_support(), att.pitch.relative_support()) {
        (Some(d), Some(p)) if p > 0.0 => Some(d / p),
        _ => None,
    };
    summary.insert("depth_over_pitch_relative_support".into(), json!(ratio));
    write_text(&mut m, &out, "stats.json", &(serde_json::to_string_pretty(&summary).unwrap() + "\n"))?;
    m.count("frames_processed", inputs.frames.len() as u64);
    m.count("frame_errors", inputs.failures.len() as u64);
    if let Some(r) = ratio {
        m.metrics.insert("depth_over_pitch_relative_support".into(), r);
    }
    m.wall_time_s = start.elapsed().as_secs_f64();
    m.write(&out)?;
    finish(inputs.failures)
}

fn synth(a: &SynthArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let start = Instant::now();
    cfg.check_keys(&["out", "seed", "frames", "objects", "resolution", "calib-keys", "jobs"])?;
    let seed = seed(a.seed, cfg)?;
    let image = resolution(&a.resolution, cfg)?;
    let input = InputArgs {
        calib: None,
        labels: None,
        denorm: None,
        synthetic: true,
        frames: a.frames,
        objects: a.objects,
        calib_keys: None,
    };
    let scene = scene_config(&input, cfg, seed, image)?;
    let keys = calib_keys(&a.calib_keys, cfg)?;
    let out = out_dir(&a.out, cfg)?;
    let frames = synthesize_scene(&scene)?;
    let written = write_frames(&FrameSet::under(&out), &frames, &keys)?;
    let settings = json!({ "scene": scene, "calib_keys": [keys.projection, keys.extrinsics] });
    let mut m = RunManifest::new("synth", settings, Some(seed));
    for p in &written {
        m.add_output(&out, p);
    }
    m.count("frames_processed", frames.len() as u64);
    m.count("objects", frames.iter().map(|f| f.labels.len() as u64).sum());
    m.wall_time_s = start.elapsed().as_secs_f64();
    m.write(&out)?;
    Ok(())
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn read_denorm_map(path: &Path) -> Result<DenormMap, CliError> {
    let file = MapFile::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    DenormMap::try_from(file).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn losses(a: &LossesArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    let start = Instant::now();
    cfg.check_keys(&["pred", "labels", "calib", "pred-map", "label-map", "calib-keys", "out", "jobs"])?;
    let path = |flag: &Option<PathBuf>, key: &str| -> Result<Option<PathBuf>, CliError> {
        Ok(flag.clone().or(cfg.string(key)?.map(PathBuf::from)))
    };
    let need = |p: Option<PathBuf>, flag: &str| p.ok_or_else(|| CliError::input(format!("missing --{flag}")));
    let pred_path = need(path(&a.pred, "pred")?, "pred")?;
    let label_path = need(path(&a.labels, "labels")?, "labels")?;
    let calib_path = need(path(&a.calib, "calib")?, "calib")?;
    let keys = calib_keys(&a.calib_keys, cfg)?;
    let pred = parse_detections(&read(&pred_path)?).map_err(|e| e.in_file(&pred_path))?;
    let label = parse_labels(&read(&label_path)?).map_err(|e| e.in_file(&label_path))?;
    let k = parse_calib(&read(&calib_path)?, &keys)
        .and_then(|c| c.intrinsics())
        .map_err(|e| e.in_file(&calib_path))?;
    let maps = match (path(&a.pred_map, "pred-map")?, path(&a.label_map, "label-map")?) {
        (Some(p), Some(l)) => Some((read_denorm_map(&p)?, read_denorm_map(&l)?)),
        (None, None) => None,
        _ => return Err(CliError::input("--pred-map and --label-map go together")),
    };
    let c: LossComponents = frame_losses(&pred, &label, &k, maps.as_ref().map(|(p, l)| (p, l)))?;
    let weights = LossWeights::default();
    let total = total_loss(&c, &weights);
    for (name, v) in LossComponents::NAMES.iter().zip(c.to_array()) {
        println!("{name}\t{v}");
    }
    println!("total\t{total}");
    if let Some(out) = &a.out {
        let out = out_dir(&Some(out.clone()), cfg)?;
        let settings = json!({
            "pred": pred_path, "labels": label_path, "calib": calib_path, "weights": weights,
            "calib_keys": [keys.projection, keys.extrinsics],
        });
        let mut m = RunManifest::new("losses", settings, None);
        m.inputs = [&pred_path, &label_path, &calib_path].iter().map(|p| p.display().to_string()).collect();
        let report = json!({ "components": c, "weights": weights, "total": total });
        write_text(&mut m, &out, "losses.json", &(serde_json::to_string_pretty(&report).unwrap() + "\n"))?;
        m.count("objects", pred.len() as u64);
        m.metrics.insert("total".into(), total);
        m.wall_time_s = start.elapsed().as_secs_f64();
        m.write(&out)?;
    }
    Ok(())
}

fn check_attn(a: &CheckAttnArgs, cfg: &ConfigFile) -> Result<(), CliError> {
    cfg.check_keys(&["seed", "fixture", "write-fixture", "jobs"])?;
    let seed = seed(a.seed, cfg)?;
    let mut failed = 0;
    for r in run_invariant_suite(seed)? {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        failed += !r.passed as usize;
        if r.detail.is_empty() {
            println!("{tag} {}", r.name);
        } else {
            println!("{tag} {} ({})", r.name, r.detail);
        }
    }
    let fixture = a.fixture.clone().or(cfg.string("fixture")?.map(PathBuf::from));
    if let Some(p) = fixture {
        let f = Fixture::from_json(&read(&p)?)?;
        let bad = f.verify()?;
        if bad.is_empty() {
            println!("PASS fixture {} ({} digests)", p.display(), f.digests.len());
        } else {
            failed += 1;
            println!("FAIL fixture {} (changed: {})", p.display(), bad.join(", "));
        }
    }
    let write = a.write_fixture.clone().or(cfg.string("write-fixture")?.map(PathBuf::from));
    if let Some(p) = write {
        let f = Fixture::compute(&format!("seed-{seed}"), seed, FixtureShapes::default())?;
        write_atomic(&p, f.to_json().as_bytes())?;
    }
    if failed > 0 {
        return Err(CliError::input(format!("{failed} invariant check(s) failed")));
    }
    Ok(())
}
