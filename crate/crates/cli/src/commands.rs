use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chanimg_core::codec::Codec;
use chanimg_core::formats::reports::{self, ReportWriter};
use chanimg_core::formats::{self, CodecFile, DatasetHeader, Model};
use chanimg_core::genmodel::{train_wgan_gp, EmpiricalResampler, GenerativeBackend, TrainingSet};
use chanimg_core::rng::derive_seed;
use chanimg_core::stats::{self, Bins, ZenithKind};
use chanimg_core::{generate_dataset, ChannelImage, CodecParams, ConditionVector, LinkRecord, LinkState};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Kind};
use crate::{Backend, Cli, Command};

struct Ctx {
    cfg: ExperimentConfig,
    seed: u64,
}

impl Ctx {
    fn path(&self, flag: &Option<PathBuf>, fallback: &Option<PathBuf>, name: &str) -> Result<PathBuf, CliError> {
        flag.clone()
            .or_else(|| fallback.clone())
            .ok_or_else(|| CliError::usage(format!("missing --{name} (or paths.{name} in the config)")))
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let ctx = Ctx { cfg, seed };
    match cli.command {
        Command::GenData(a) => gen_data(&ctx, a),
        Command::FitCodec(a) => fit_codec(&ctx, a),
        Command::Encode(a) => encode(&ctx, a),
        Command::Decode(a) => decode(&ctx, a),
        Command::Train(a) => train(&ctx, a),
        Command::Sample(a) => sample(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::Report(a) => report(&ctx, a),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Runs a core call, tagging failures with the file involved.
fn with_path<T>(path: &Path, r: chanimg_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::from(e).at(path))
}

fn load_links(path: &Path) -> Result<(DatasetHeader, Vec<LinkRecord>), CliError> {
    with_path(path, formats::read_dataset(open(path)?))
}

fn load_codec(path: &Path) -> Result<CodecFile, CliError> {
    with_path(path, formats::read_codec(open(path)?))
}

fn load_images(path: &Path) -> Result<formats::ImageTensor, CliError> {
    with_path(path, formats::read_images(open(path)?))
}

fn conditions(links: &[LinkRecord]) -> Result<Vec<ConditionVector>, CliError> {
    links.iter().map(|l| l.condition().map_err(CliError::from)).collect()
}

fn gen_data(ctx: &Ctx, a: crate::GenData) -> Result<(), CliError> {
    let out = ctx.path(&a.out, &ctx.cfg.paths.data, "out")?;
    let mut surrogate = ctx.cfg.surrogate.clone();
    surrogate.seed = ctx.seed;
    if let Some(n) = a.links {
        if n == 0 {
            return Err(CliError::new(Kind::Domain, "--links must be positive"));
        }
        let per_site = surrogate.num_tx.max(1) * surrogate.heights.len().max(1);
        surrogate.num_rx_per_height = n.div_ceil(per_site);
    }
    let mut links = generate_dataset(&surrogate)?;
    if let Some(n) = a.links {
        links.truncate(n);
    }
    let mut header = DatasetHeader::new(ctx.seed, links.len());
    header.source = Some(serde_json::json!({ "generator": "surrogate", "config": surrogate }));
    with_path(&out, formats::write_dataset(create(&out)?, &header, &links))?;
    eprintln!("wrote {} links to {}", links.len(), out.display());
    Ok(())
}

fn fit_codec(ctx: &Ctx, a: crate::FitCodec) -> Result<(), CliError> {
    let data = ctx.path(&a.data, &ctx.cfg.paths.data, "data")?;
    let out = ctx.path(&a.out, &ctx.cfg.paths.codec, "out")?;
    let (_, links) = load_links(&data)?;
    let codec = Codec::fit(&links, CodecParams::default(), ctx.seed)?;
    with_path(
        &out,
        formats::write_codec(create(&out)?, &CodecFile::new(codec, ctx.seed)),
    )?;
    eprintln!("fitted codec on {} links", links.len());
    Ok(())
}

fn encode(ctx: &Ctx, a: crate::Encode) -> Result<(), CliError> {
    let data = ctx.path(&a.data, &ctx.cfg.paths.data, "data")?;
    let codec_path = ctx.path(&a.codec, &ctx.cfg.paths.codec, "codec")?;
    let out = ctx.path(&a.out, &ctx.cfg.paths.images, "out")?;
    let (_, links) = load_links(&data)?;
    let codec = load_codec(&codec_path)?.codec;
    let (images, clamped) = codec.encode_dataset(&links, ctx.seed)?;
    let conds = conditions(&links)?;
    with_path(&out, formats::write_images(create(&out)?, &images, &conds))?;
    eprintln!("encoded {} links, {} entries clamped", images.len(), clamped);
    Ok(())
}

/// Largest per-path differences between two links with equal path counts.
#[derive(Default)]
struct PathErrors {
    pathloss: f64,
    delay: f64,
    angle: f64,
    phase: f64,
}

fn circular_diff(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

fn path_errors(a: &LinkRecord, b: &LinkRecord) -> Option<PathErrors> {
    if a.paths.len() != b.paths.len() {
        return None;
    }
    let mut e = PathErrors::default();
    for (p, q) in a.paths.iter().zip(&b.paths) {
        e.pathloss = e.pathloss.max((p.pathloss - q.pathloss).abs());
        e.delay = e.delay.max((p.delay - q.delay).abs());
        e.angle = e
            .angle
            .max(circular_diff(p.aod, q.aod, 360.0))
            .max(circular_diff(p.aoa, q.aoa, 360.0))
            .max((p.zod - q.zod).abs())
            .max((p.zoa - q.zoa).abs());
        e.phase = e.phase.max(circular_diff(p.phase, q.phase, 360.0));
    }
    Some(e)
}

fn decode(ctx: &Ctx, a: crate::Decode) -> Result<(), CliError> {
    let images_path = ctx.path(&a.images, &ctx.cfg.paths.images, "images")?;
    let codec_path = ctx.path(&a.codec, &ctx.cfg.paths.codec, "codec")?;
    let data = ctx.path(&a.data, &ctx.cfg.paths.data, "data")?;
    if a.repeat == 0 {
        return Err(CliError::usage("--repeat must be positive"));
    }
    let tensor = load_images(&images_path)?;
    let codec = load_codec(&codec_path)?.codec;
    let (_, links) = load_links(&data)?;
    if tensor.images.len() != links.len() * a.repeat {
        return Err(CliError::malformed(format!(
            "{} images do not pair with {} links x {}",
            tensor.images.len(),
            links.len(),
            a.repeat
        )));
    }
    let decoded = tensor
        .images
        .iter()
        .enumerate()
        .map(|(i, img)| with_path(&images_path, codec.decode(img, &links[i / a.repeat].geometry())))
        .collect::<Result<Vec<_>, _>>()?;
    let header = DatasetHeader::new(ctx.seed, decoded.len());
    with_path(&a.out, formats::write_dataset(create(&a.out)?, &header, &decoded))?;

    if let Some(report) = &a.report {
        let mut w = ReportWriter::new(
            create(report)?,
            "round-trip",
            ctx.seed,
            &[],
            &[
                "image",
                "link",
                "state_match",
                "paths_source",
                "paths_decoded",
                "max_pathloss_err_db",
                "max_delay_err_s",
                "max_angle_err_deg",
                "max_phase_err_deg",
            ],
        )?;
        let mut worst = PathErrors::default();
        let mut mismatched = 0;
        for (i, d) in decoded.iter().enumerate() {
            let src = &links[i / a.repeat];
            let errs = path_errors(src, d);
            let state_match = src.link_state == d.link_state;
            if !state_match || errs.is_none() {
                mismatched += 1;
            }
            let cell = |f: fn(&PathErrors) -> f64| errs.as_ref().map(|e| f(e).to_string()).unwrap_or_default();
            w.row([
                i.to_string(),
                (i / a.repeat).to_string(),
                state_match.to_string(),
                src.paths.len().to_string(),
                d.paths.len().to_string(),
                cell(|e| e.pathloss),
                cell(|e| e.delay),
                cell(|e| e.angle),
                cell(|e| e.phase),
            ])?;
            if let Some(e) = errs {
                worst.pathloss = worst.pathloss.max(e.pathloss);
                worst.delay = worst.delay.max(e.delay);
                worst.angle = worst.angle.max(e.angle);
                worst.phase = worst.phase.max(e.phase);
            }
        }
        w.finish()?;
        println!(
            "links={} mismatched={} max_pathloss_err_db={:e} max_delay_err_s={:e} max_angle_err_deg={:e} max_phase_err_deg={:e}",
            decoded.len(),
            mismatched,
            worst.pathloss,
            worst.delay,
            worst.angle,
            worst.phase
        );
    }
    eprintln!("decoded {} images", decoded.len());
    Ok(())
}

fn train(ctx: &Ctx, a: crate::Train) -> Result<(), CliError> {
    let images_path = ctx.path(&a.images, &ctx.cfg.paths.images, "images")?;
    let out = ctx.path(&a.out, &ctx.cfg.paths.checkpoint, "out")?;
    let tensor = load_images(&images_path)?;
    let set = TrainingSet::from_images(&tensor.images, tensor.conditions)?;
    let model = match a.backend {
        Backend::WganGp => {
            let mut hyper = ctx.cfg.wgan.clone();
            if let Some(e) = a.epochs {
                hyper.epochs = e;
            }
            let (model, log) = train_wgan_gp(&set, &hyper, ctx.seed)?;
            if let Some(p) = &a.log {
                with_path(p, reports::write_training_log(create(p)?, &log, ctx.seed))?;
            }
            eprintln!(
                "trained {} generator steps; generator {} and critic {} parameters",
                log.entries.len(),
                log.generator_params,
                log.critic_params
            );
            Model::WganGp(model)
        }
        Backend::Resampler => {
            let mut config = ctx.cfg.resampler;
            if let Some(k) = a.k {
                config.k = k;
            }
            Model::Resampler(EmpiricalResampler::fit(set, config)?)
        }
    };
    with_path(&out, formats::write_checkpoint(create(&out)?, &model, ctx.seed))?;
    Ok(())
}

fn sample(ctx: &Ctx, a: crate::Sample) -> Result<(), CliError> {
    let ckpt = ctx.path(&a.checkpoint, &ctx.cfg.paths.checkpoint, "checkpoint")?;
    let data = ctx.path(&a.data, &ctx.cfg.paths.data, "data")?;
    let per_link = a.per_link.unwrap_or(ctx.cfg.eval.samples_per_link);
    let (model, _) = with_path(&ckpt, formats::read_checkpoint(open(&ckpt)?))?;
    let (_, links) = load_links(&data)?;
    let mut images: Vec<ChannelImage> = Vec::with_capacity(links.len() * per_link);
    let mut conds = Vec::with_capacity(images.capacity());
    for (j, link) in links.iter().enumerate() {
        let c = link.condition()?;
        images.extend(model.sample(&c, per_link, derive_seed(ctx.seed, j as u64))?);
        conds.extend(std::iter::repeat_n(c, per_link));
    }
    with_path(&a.out, formats::write_images(create(&a.out)?, &images, &conds))?;
    eprintln!("sampled {} images from {}", images.len(), model.name());
    Ok(())
}

/// Configured heights, or every distinct receiver height in the data.
fn heights(ctx: &Ctx, links: &[LinkRecord]) -> Vec<f64> {
    if !ctx.cfg.eval.heights.is_empty() {
        return ctx.cfg.eval.heights.clone();
    }
    let mut hs: Vec<f64> = Vec::new();
    for l in links {
        if !hs.iter().any(|&h| stats::at_height(l, h)) {
            hs.push(l.height());
        }
    }
    hs.sort_by(f64::total_cmp);
    hs
}

fn distance_bins(links: &[LinkRecord], width: f64) -> Result<Bins, CliError> {
    let max = links
        .iter()
        .filter_map(|l| l.geometry().distances().ok())
        .map(|d| d.dist2d)
        .fold(0.0, f64::max);
    Ok(Bins::uniform(0.0, max.max(width) + width * 1e-9, width)?)
}

fn eval(ctx: &Ctx, a: crate::Eval) -> Result<(), CliError> {
    let data = ctx.path(&a.data, &ctx.cfg.paths.data, "data")?;
    let out_dir = ctx.path(&a.out_dir, &ctx.cfg.paths.reports, "out-dir")?;
    let (_, model) = load_links(&a.model)?;
    let (_, reference) = load_links(&data)?;
    let hs = heights(ctx, &reference);
    let bins = distance_bins(&reference, ctx.cfg.eval.link_state_bin_m)?;
    let report = stats::evaluate(&model, &reference, &hs, &bins)?;
    create_dir(&out_dir)?;
    let p = out_dir.join("feature_ks.csv");
    with_path(&p, reports::write_feature_ks(create(&p)?, &report.features, ctx.seed))?;
    let p = out_dir.join("link_state.csv");
    with_path(
        &p,
        reports::write_link_states(create(&p)?, &report.link_states, ctx.seed),
    )?;
    let p = out_dir.join("uniformity.csv");
    with_path(&p, reports::write_uniformity(create(&p)?, &report.uniformity, ctx.seed))?;
    for f in &report.features {
        if let Some(ks) = f.ks {
            println!("height={} feature={} ks={:.4}", f.height, f.feature.name(), ks);
        }
    }
    Ok(())
}

fn report(ctx: &Ctx, a: crate::Report) -> Result<(), CliError> {
    let data = ctx.path(&a.data, &ctx.cfg.paths.data, "data")?;
    let out_dir = ctx.path(&a.out_dir, &ctx.cfg.paths.reports, "out-dir")?;
    let (_, links) = load_links(&data)?;
    let hs = heights(ctx, &links);
    create_dir(&out_dir)?;

    let bins = distance_bins(&links, ctx.cfg.eval.link_state_bin_m)?;
    let p = out_dir.join("link_state.csv");
    let mut w = ReportWriter::new(
        create(&p)?,
        "link-state",
        ctx.seed,
        &[],
        &["height_m", "dist_lo_m", "dist_hi_m", "count", "p_los", "p_outage"],
    )?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for &h in &hs {
        for b in stats::link_state_prob(&links, h, &bins) {
            w.row([
                h.to_string(),
                b.lower.to_string(),
                b.upper.to_string(),
                b.count.to_string(),
                opt(b.p_los),
                opt(b.p_outage),
            ])?;
        }
    }
    with_path(&p, w.finish())?;

    let heat_bins = distance_bins(&links, ctx.cfg.eval.heatmap_distance_bin_m)?;
    let angle_bins = stats::default_angle_bins();
    for &h in &hs {
        for kind in [ZenithKind::Zod, ZenithKind::Zoa] {
            let z = stats::relative_zenith_pdf(&links, h, kind, &heat_bins, &angle_bins)?;
            let p = out_dir.join(format!("relative_{}_h{}.csv", kind.name(), h));
            with_path(
                &p,
                reports::write_heatmap(create(&p)?, &z.pdf, kind.name(), h, ctx.seed),
            )?;
            if z.skipped_links > 0 {
                eprintln!("height {h}: skipped {} links with degenerate geometry", z.skipped_links);
            }
        }
    }

    let p = out_dir.join("rms_spread.csv");
    with_path(&p, reports::write_spreads(create(&p)?, &links, ctx.seed))?;
    let p = out_dir.join("uniformity.csv");
    let rows = stats::uniformity_report(&links, &hs)?;
    with_path(&p, reports::write_uniformity(create(&p)?, &rows, ctx.seed))?;

    let los = links.iter().filter(|l| l.link_state == LinkState::Los).count();
    let outage = links.iter().filter(|l| l.link_state == LinkState::Outage).count();
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "links={} los={} outage={} heights={:?}",
        links.len(),
        los,
        outage,
        hs
    )
    .map_err(|e| CliError::new(Kind::Io, e.to_string()))?;
    Ok(())
}
