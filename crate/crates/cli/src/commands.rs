use std::fs;
use std::io::{self, Write};
use std::path::Path;

use cuboid_core::codec::{read_tree_file, write_tree_file};
use cuboid_core::cuboid::check_tiling;
use cuboid_core::io::{load_raw_video, save_raw_video};
use cuboid_core::motion::{dump_motion_field, motion_bit_cost};
use cuboid_core::partition::{dump_partition, parse_partition_dump, partition_with};
use cuboid_core::pipeline::{
  pooled, run_sequence, total_bits, GopResult, PartitionSource, ResidualBits,
};
use cuboid_core::report::{emit_report, RdCurve};
use cuboid_core::{
  bd_delta, compensate, cuboid_count_from_blocks, decode_tree, encode_tree, estimate_motion,
  fixed_block_grid, psnr, sse_region, ChannelPolicy, Cuboid, Frame, PipelineConfig, Psnr,
  RawFormat, RdPoint, Scheme, SearchConfig,
};

use crate::args::{
  BdrateArgs, CoarsenArgs, CompareArgs, CountArgs, EstimateArgs, InputArgs, PartitionArgs,
  PipelineArgs, PredictArgs, SchemeArg,
};
use crate::failure::{Context, Failure, Outcome};

const DEFAULT_BLOCK: usize = 32;

fn load(input: &InputArgs) -> Outcome<Vec<Frame>> {
  if input.width == 0 || input.height == 0 {
    return Err(Failure::usage(format!(
      "frame geometry must be non-zero, got {}x{}",
      input.width, input.height
    )));
  }
  let frames = load_raw_video(&input.input, input.width, input.height, input.format.into(), None)
    .context(format!("reading {}", input.input.display()))?
    .into_frames();
  if frames.is_empty() {
    return Err(Failure::data(format!("{} holds no frames", input.input.display())));
  }
  Ok(frames)
}

fn pick<'a>(frames: &'a [Frame], index: usize, flag: &str) -> Outcome<&'a Frame> {
  frames.get(index).ok_or_else(|| {
    Failure::usage(format!("{flag} {index} is out of range: input has {} frames", frames.len()))
  })
}

fn cuboid_count(count: &CountArgs, width: usize, height: usize) -> Outcome<usize> {
  match (count.cuboids, count.block_size) {
    (Some(0), _) => Err(Failure::usage("--cuboids must be at least 1")),
    (Some(n), _) => Ok(n),
    (None, b) => {
      let b = b.unwrap_or(DEFAULT_BLOCK);
      if b == 0 {
        return Err(Failure::usage("--block-size must be at least 1"));
      }
      match cuboid_count_from_blocks(width, height, b) {
        0 => Err(Failure::usage(format!("block size {b} exceeds the {width}x{height} frame"))),
        n => Ok(n),
      }
    }
  }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Outcome {
  fs::write(path, bytes).context(format!("writing {}", path.display()))
}

fn write_frames(path: &Path, frames: &[Frame], format: RawFormat) -> Outcome {
  save_raw_video(path, frames, format).context(format!("writing {}", path.display()))
}

/// Writes `text` to `path`, or to standard output.
fn emit(path: Option<&Path>, text: &str) -> Outcome {
  match path {
    Some(p) => write_file(p, text),
    None => io::stdout().lock().write_all(text.as_bytes()).map_err(Failure::from),
  }
}

/// Within-cuboid error on the planes the partition was computed from.
fn partition_planes(frame: &Frame, policy: ChannelPolicy) -> Vec<usize> {
  match policy {
    ChannelPolicy::LumaOnly => vec![0],
    ChannelPolicy::AllChannels => {
      (0..frame.channels()).filter(|&c| frame.channel_shifts(c) == (0, 0)).collect()
    }
  }
}

pub fn partition(a: &PartitionArgs) -> Outcome {
  let frames = load(&a.input)?;
  let frame = pick(&frames, a.frame, "--frame")?;
  let (w, h) = (frame.width(), frame.height());
  let n = cuboid_count(&a.count, w, h)?;
  let p = partition_with(frame, n, a.channels.into())?;
  let bits = encode_tree(p.tree());
  let dump = dump_partition(&p);
  if let Some(path) = &a.out_tree {
    write_file(path, write_tree_file(p.tree())?)?;
  }
  if let Some(path) = &a.out_dump {
    write_file(path, &dump)?;
  }
  println!("cuboids {}", p.len());
  println!("total_sse {:.4}", p.total_sse());
  println!("tree_bits {}", bits.len());
  if a.verify {
    let text = match &a.out_dump {
      Some(path) => fs::read_to_string(path).context(format!("reading {}", path.display()))?,
      None => dump,
    };
    let (_, cuboids) = parse_partition_dump(&text)?;
    check_tiling(&cuboids, w, h).context("dump does not tile the frame")?;
    let tree = match &a.out_tree {
      Some(path) => {
        read_tree_file(&fs::read(path).context(format!("reading {}", path.display()))?)?
      }
      None => decode_tree(&bits, w, h)?,
    };
    if tree != *p.tree() || tree.leaves() != cuboids {
      return Err(Failure::data("decoded tree does not reproduce the partition"));
    }
    println!("verify ok");
  }
  Ok(())
}

pub fn coarsen(a: &CoarsenArgs) -> Outcome {
  let frames = load(&a.input)?;
  let frame = pick(&frames, a.frame, "--frame")?;
  let n = cuboid_count(&a.count, frame.width(), frame.height())?;
  let policy = a.channels.into();
  let p = partition_with(frame, n, policy)?;
  let coarse = cuboid_core::coarsen(frame, &p)?;
  let mut coarse_sse = 0u64;
  for c in partition_planes(frame, policy) {
    coarse_sse += sse_region(frame, &coarse, Cuboid::full(frame.width(), frame.height()), c)?;
  }
  println!("cuboids {}", p.len());
  println!("internal_sse {:.4}", p.total_sse());
  println!("coarse_sse {coarse_sse}");
  println!("psnr {}", psnr(frame, &coarse, ChannelPolicy::LumaOnly)?);
  if let Some(path) = &a.output {
    write_frames(path, &[coarse], a.input.format.into())?;
  }
  Ok(())
}

pub fn estimate(a: &EstimateArgs) -> Outcome {
  let frames = load(&a.input)?;
  let reference = pick(&frames, a.reference, "--reference")?;
  let current = pick(&frames, a.current, "--current")?;
  let (w, h) = (reference.width(), reference.height());
  let regions = match a.scheme {
    SchemeArg::Cuboid => {
      let n = cuboid_count(&a.count, w, h)?;
      partition_with(reference, n, a.channels.into())?.cuboids().to_vec()
    }
    SchemeArg::FixedBlock => {
      if a.count.cuboids.is_some() {
        return Err(Failure::usage("fixed_block takes --block-size, not --cuboids"));
      }
      let b = a.count.block_size.unwrap_or(DEFAULT_BLOCK);
      if b == 0 {
        return Err(Failure::usage("--block-size must be at least 1"));
      }
      fixed_block_grid(w, h, b)
    }
    SchemeArg::Coarse => {
      return Err(Failure::usage("the coarse scheme has no motion; use `coarsen`"));
    }
  };
  let search = SearchConfig { range: a.range, metric: a.metric.into(), ..Default::default() };
  let field = estimate_motion(current, reference, &regions, &search)?;
  let predicted = compensate(reference, &field)?;
  println!("regions {}", field.len());
  println!("total_cost {}", field.total_cost());
  println!("motion_bits {}", motion_bit_cost(&field, &search));
  println!("psnr {}", psnr(current, &predicted, ChannelPolicy::LumaOnly)?);
  if let Some(path) = &a.out_field {
    write_file(path, dump_motion_field(&field))?;
  }
  if let Some(path) = &a.out_predicted {
    write_frames(path, &[predicted], a.input.format.into())?;
  }
  Ok(())
}

/// Config file settings overridden by any flags given.
fn pipeline_config(p: &PipelineArgs) -> Outcome<PipelineConfig> {
  let mut cfg = match &p.config {
    Some(path) => {
      let text = fs::read_to_string(path).context(format!("reading {}", path.display()))?;
      serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))?
    }
    None => PipelineConfig::default(),
  };
  if let Some(v) = p.gop_size {
    cfg.gop_size = v;
  }
  if let Some(v) = p.partition_source {
    cfg.partition_source = v.into();
  }
  if let Some(v) = p.reference_mode {
    cfg.reference_mode = v.into();
  }
  if let Some(v) = p.range {
    cfg.search.range = v;
  }
  if let Some(v) = p.metric {
    cfg.search.metric = v.into();
  }
  if let Some(v) = p.channels {
    cfg.channels = v.into();
  }
  if let Some(n) = p.count.cuboids {
    cfg.n_cuboids = Some(n);
  }
  if let Some(b) = p.count.block_size {
    cfg.block_size = b;
    cfg.n_cuboids = None;
  }
  Ok(cfg)
}

fn check_config(cfg: &PipelineConfig, frames: &[Frame]) -> Outcome {
  cfg.validate()?;
  if cfg.scheme != Scheme::FixedBlock {
    cfg.cuboid_count(frames[0].width(), frames[0].height())?;
  }
  if frames.len() < cfg.gop_size {
    return Err(Failure::usage(format!(
      "input has {} frames, fewer than the gop size {}",
      frames.len(),
      cfg.gop_size
    )));
  }
  Ok(())
}

fn scheme_label(s: Scheme) -> &'static str {
  match s {
    Scheme::Cuboid => "cuboid",
    Scheme::FixedBlock => "fixed_block",
    Scheme::Coarse => "coarse",
  }
}

fn frame_report(results: &[GopResult], gop_size: usize) -> Outcome<String> {
  let mut w = csv::Writer::from_writer(Vec::new());
  let csv_err = |e: csv::Error| Failure::data(e);
  w.write_record([
    "gop",
    "frame",
    "role",
    "psnr",
    "recon_psnr",
    "tree_bits",
    "motion_bits",
    "side_info_bits",
    "residual_bits",
    "total_bits",
    "residual_estimate",
  ])
  .map_err(csv_err)?;
  for (g, r) in results.iter().enumerate() {
    let method = format!("entropy_step{}", r.quant_step);
    for f in &r.frames {
      let side = f.side_info_bits();
      w.write_record([
        g.to_string(),
        (g * gop_size + f.index).to_string(),
        f.role.as_str().to_string(),
        f.psnr.to_string(),
        f.recon_psnr.to_string(),
        f.tree_bits.to_string(),
        f.motion_bits.to_string(),
        side.to_string(),
        f.residual_bits.to_string(),
        (side + f.residual_bits).to_string(),
        method.clone(),
      ])
      .map_err(csv_err)?;
    }
  }
  let bytes = w.into_inner().map_err(|e| Failure::data(e.to_string()))?;
  Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn predict_gop(a: &PredictArgs) -> Outcome {
  let frames = load(&a.input)?;
  let mut cfg = pipeline_config(&a.pipeline)?;
  if let Some(s) = a.scheme {
    cfg.scheme = s.into();
  }
  if let Some(q) = a.quant_step {
    cfg.quant_step = q;
  }
  check_config(&cfg, &frames)?;
  let results = run_sequence(&frames, &cfg)?;
  emit(a.report.as_deref(), &frame_report(&results, cfg.gop_size)?)?;

  let side: u64 = results.iter().map(GopResult::side_info_bits).sum();
  let total: u64 = results.iter().map(|r| total_bits(r, ResidualBits::Estimated).total).sum();
  let mean = pooled(results.iter().flat_map(|r| r.scored().map(|f| (f, f.sse))));
  eprintln!(
    "{} frames, scheme {}, prediction psnr {}, side_info_bits {side}, total_bits {total}",
    frames.len(),
    scheme_label(cfg.scheme),
    mean.map_or("n/a".to_string(), |p| p.to_string())
  );

  if let Some(path) = &a.out_predicted {
    let predicted: Vec<Frame> =
      results.iter().flat_map(|r| r.frames.iter().map(|f| f.predicted.clone())).collect();
    write_frames(path, &predicted, a.input.format.into())?;
  }
  Ok(())
}

pub fn compare(a: &CompareArgs) -> Outcome {
  let frames = load(&a.input)?;
  let base = pipeline_config(&a.pipeline)?;
  if a.schemes.is_empty() || a.quant_steps.is_empty() {
    return Err(Failure::usage("need at least one scheme and one quant step"));
  }
  let mut curves = Vec::new();
  for &s in &a.schemes {
    let mut cfg = base.clone();
    cfg.scheme = s.into();
    cfg.partition_source = match cfg.scheme {
      Scheme::Cuboid => base.partition_source,
      Scheme::FixedBlock => PartitionSource::AnchorOnly,
      Scheme::Coarse => PartitionSource::PerFrame,
    };
    let mut points = Vec::new();
    for &q in &a.quant_steps {
      cfg.quant_step = q;
      check_config(&cfg, &frames)?;
      let results = run_sequence(&frames, &cfg)?;
      let rate: u64 = results.iter().map(|r| total_bits(r, ResidualBits::Estimated).total).sum();
      let quality = match pooled(results.iter().flat_map(|r| r.scored().map(|f| (f, f.recon_sse))))
      {
        Some(Psnr::Finite(v)) => v,
        _ => {
          return Err(Failure::data(format!(
            "{} at quant step {q} has no finite reconstruction psnr",
            scheme_label(cfg.scheme)
          )))
        }
      };
      points.push(RdPoint::new(rate as f64, quality));
    }
    points.sort_by(|p, q| p.rate.total_cmp(&q.rate));
    curves.push(RdCurve::new(scheme_label(cfg.scheme), points));
  }
  emit(a.report.as_deref(), &emit_report(&curves)?)
}

fn read_curve(path: &Path) -> Outcome<Vec<RdPoint>> {
  let text = fs::read_to_string(path).context(format!("reading {}", path.display()))?;
  let bad = |msg: String| Failure::data(format!("{}: {msg}", path.display()));
  let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
  let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
  let column = |name: &str| {
    headers.iter().position(|h| h == name).ok_or_else(|| bad(format!("no `{name}` column")))
  };
  let (rc, pc) = (column("rate")?, column("psnr")?);
  let mut points = Vec::new();
  for (i, rec) in r.records().enumerate() {
    let rec = rec.map_err(|e| bad(e.to_string()))?;
    let num = |c: usize| {
      rec
        .get(c)
        .and_then(|v| v.parse::<f64>().ok())
        .ok_or_else(|| bad(format!("row {}: bad number", i + 2)))
    };
    points.push(RdPoint::new(num(rc)?, num(pc)?));
  }
  if points.len() < cuboid_core::bd::MIN_POINTS {
    return Err(Failure::usage(format!(
      "{} has {} (rate, psnr) points; bd-rate needs at least {} per curve",
      path.display(),
      points.len(),
      cuboid_core::bd::MIN_POINTS
    )));
  }
  Ok(points)
}

pub fn bdrate(a: &BdrateArgs) -> Outcome {
  let [reference, test] = &a.curve[..] else {
    return Err(Failure::usage(format!(
      "--curve must be given exactly twice, got {}",
      a.curve.len()
    )));
  };
  let r = bd_delta(&read_curve(reference)?, &read_curve(test)?)?;
  println!("delta_rate_percent,delta_psnr_db");
  println!("{:.4},{:.4}", r.delta_rate, r.delta_psnr);
  Ok(())
}
