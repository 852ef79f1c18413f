use std::path::{Path, PathBuf};

use gffperc::experiments::{
    calibrate_stretch_constant, capacity_growth_study, estimate_h_star, fit_decay_models, lower_bound_study,
    mc_estimate, stretch_samples, stretch_tail_curve, EventDescriptor, GrowthShape, McConfig, TubeStudyConfig,
};
use gffperc::field::{read_field, write_field, SpectralSampler};
use gffperc::io::{emit_results, read_csv_rows, write_results, OutputFormat, Record, RunConfig};
use gffperc::lattice::coarse_cover;
use gffperc::renorm::{census, classify_all, eta_ratio, quantile, write_classifications, ClassParams};
use gffperc::walk::{free_green, FreeGreenConfig};
use gffperc::{BoxRegion, Error, Result, Site};
use serde_json::json;

use crate::EventArg;

/// Quantile of sampled `η / L` used when calibrating `C₁`.
const C1_QUANTILE: f64 = 0.95;

pub struct Context {
    pub cfg: RunConfig,
    pub stdout_format: OutputFormat,
    /// `--kappa` as given on the command line.
    pub kappa_flag: Option<i64>,
}

fn missing(key: &str, reason: &str) -> Error {
    Error::Config {
        key: key.into(),
        reason: reason.into(),
    }
}

impl Context {
    fn sizes(&self) -> Vec<i64> {
        if self.cfg.ns.is_empty() {
            vec![self.cfg.n]
        } else {
            self.cfg.ns.clone()
        }
    }

    fn document(&self, derived: serde_json::Value) -> serde_json::Value {
        json!({ "run": self.cfg, "derived": derived })
    }

    fn emit<R: Record>(&self, records: &[R], derived: serde_json::Value) -> Result<()> {
        let config = self.document(derived);
        match &self.cfg.output {
            Some(p) => {
                emit_results(records, &config, OutputFormat::from_path(p), p)?;
                log::info!("wrote {} records to {}", records.len(), p.display());
                Ok(())
            }
            None => write_results(records, &config, self.stdout_format, &mut std::io::stdout().lock()),
        }
    }

    fn scale(&self) -> Result<i64> {
        self.cfg.l.ok_or_else(|| missing("L", "a coarse scale is required"))
    }

    fn params(&self) -> ClassParams {
        ClassParams {
            epsilon: self.cfg.epsilon,
            h1: self.cfg.h1(),
            h2: self.cfg.h2(),
            c1: self.cfg.c1,
        }
    }
}

pub fn green(ctx: &Context, tol: f64, y: Option<Vec<i64>>) -> Result<()> {
    let d = ctx.cfg.d;
    let y = match y {
        Some(v) if v.len() != d => return Err(Error::invalid("y", format!("expected {d} coordinates"))),
        Some(v) => Site::new(v),
        None => Site::origin(d),
    };
    let est = free_green(&Site::origin(d), &y, &FreeGreenConfig::with_tol(tol))?;
    log::info!("g(0, {y}) = {} (M = {})", est.value, est.m);
    ctx.emit(
        &est.trace,
        json!({ "y": y.coords(), "tol": tol, "value": est.value, "lower": est.lower, "M": est.m }),
    )
}

pub fn capacity(ctx: &Context, shape: GrowthShape, site_cap: usize, band: f64, tol: f64) -> Result<()> {
    let study = capacity_growth_study(
        ctx.cfg.d,
        shape,
        &ctx.sizes(),
        band,
        site_cap,
        &FreeGreenConfig::with_tol(tol),
    )?;
    if study.rows.iter().any(|r| r.cap_exceeded) {
        log::warn!("some sizes exceed the site cap of {site_cap}; their rows are marked");
    }
    if !study.bounded {
        log::warn!("normalized ratios spread {:?} exceeds the band {band}", study.spread);
    }
    ctx.emit(
        &study.rows,
        json!({ "shape": shape, "tol": tol, "site_cap": site_cap, "spread": study.spread, "bounded": study.bounded }),
    )
}

pub fn sample(ctx: &Context, half_width: i64, index: u64) -> Result<()> {
    let path = ctx
        .cfg
        .output
        .as_ref()
        .ok_or_else(|| missing("output", "sample needs --out"))?;
    if half_width < 0 {
        return Err(Error::invalid("box", "half-width must be >= 0"));
    }
    let sampler = match ctx.kappa_flag {
        Some(k) => SpectralSampler::padded(ctx.cfg.d, half_width, k)?,
        None => {
            let b = BoxRegion::centered(ctx.cfg.d, half_width);
            SpectralSampler::new(&b, &b)?
        }
    };
    write_field(&sampler.sample(ctx.cfg.seed, index), path)?;
    log::info!("wrote sample {index} of seed {} to {}", ctx.cfg.seed, path.display());
    Ok(())
}

pub fn classify(ctx: &Context, field: Option<PathBuf>, index: u64) -> Result<()> {
    let cfg = &ctx.cfg;
    let l = ctx.scale()?;
    let window = BoxRegion::centered(cfg.d, cfg.n);
    let cover = coarse_cover(&window, l, cfg.k)?;
    let field = match field {
        Some(p) => read_field(&p)?,
        None => {
            let mut lo = vec![i64::MAX; cfg.d];
            let mut hi = vec![i64::MIN; cfg.d];
            for z in &cover {
                let u = z.u_box().expand(1);
                for i in 0..cfg.d {
                    lo[i] = lo[i].min(u.lower().coords()[i]);
                    hi[i] = hi[i].max(u.upper().coords()[i]);
                }
            }
            let hull = BoxRegion::new(Site::new(lo), Site::new(hi))?;
            let pad = (cfg.kappa - 1) * hull.side(0) as i64 / 2;
            SpectralSampler::new(&hull.expand(pad), &hull)?.sample(cfg.seed, index)
        }
    };
    let mut params = ctx.params();
    if cfg.calibrate_c1 {
        let ratios: Vec<f64> = cover
            .iter()
            .map(|z| eta_ratio(&field, z, params.h1, params.h2))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        match quantile(&ratios, C1_QUANTILE) {
            Some(c1) => {
                log::info!("calibrated c1 = {c1} from {} boxes", ratios.len());
                params.c1 = c1;
            }
            None => log::warn!("no box with finite eta; keeping c1 = {}", params.c1),
        }
    }
    let classes = classify_all(&field, &cover, &params)?;
    let c = census(&window, l, cfg.k, &classes)?;
    if let Some(p) = &cfg.output {
        write_classifications(p, &classes)?;
    }
    let components: Vec<_> = c
        .map
        .components
        .iter()
        .map(|b| json!({ "size": b.sites.len(), "diameter": b.diameter, "sites": b.sites }))
        .collect();
    let summary = json!({
        "version": gffperc::experiments::CODE_VERSION,
        "config": ctx.document(json!({ "params": params })),
        "boxes": classes.len(),
        "bad_count": c.bad_count,
        "components": components,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

pub fn estimate_stretch(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    let ns = ctx.sizes();
    let c = match cfg.c {
        Some(c) => c,
        None => {
            let mc = McConfig::new(cfg.d, ns[0]).with_kappa(cfg.kappa);
            let samples = stretch_samples(&mc, cfg.h, cfg.n_samples, cfg.seed)?;
            let c = calibrate_stretch_constant(&samples, ns[0], 2.0)
                .ok_or_else(|| missing("C", "no sample has a large cluster pair to calibrate from"))?;
            log::info!("calibrated C = {c} at N = {}", ns[0]);
            c
        }
    };
    let curve = stretch_tail_curve(cfg.d, cfg.h, c, &ns, cfg.n_samples, cfg.seed, cfg.kappa)?;
    let derived = json!({ "C": c, "calibrated": cfg.c.is_none(), "fits": curve.fits, "pair_mode": "extremal" });
    ctx.emit(&curve.rows, derived.clone())?;
    if let Some(p) = &cfg.output {
        if OutputFormat::from_path(p) == OutputFormat::Csv {
            let side = p.with_extension("json");
            emit_results(&curve.rows, &ctx.document(derived), OutputFormat::Json, &side)?;
        }
    }
    Ok(())
}

pub fn estimate_bracket(ctx: &Context, hs: &[f64]) -> Result<()> {
    let cfg = &ctx.cfg;
    let est = estimate_h_star(cfg.d, &ctx.sizes(), hs, cfg.n_samples, cfg.seed, cfg.kappa)?;
    log::info!("h_* bracket [{}, {}] by {:?}", est.lo, est.hi, est.method);
    ctx.emit(
        &est.table,
        json!({ "h_grid": hs, "lo": est.lo, "hi": est.hi, "method": est.method }),
    )
}

pub fn estimate_event(ctx: &Context, event: EventArg, r: Option<i64>) -> Result<()> {
    let cfg = &ctx.cfg;
    let mut rows = Vec::new();
    for n in ctx.sizes() {
        let desc = match event {
            EventArg::Field => EventDescriptor::FieldAtLeast { h: cfg.h },
            EventArg::Arm => EventDescriptor::Arm {
                h: cfg.h,
                r: r.unwrap_or(n - 1),
            },
            EventArg::Crossing => EventDescriptor::Crossing { h: cfg.h },
            EventArg::LocUniq => EventDescriptor::LocUniq {
                h1: cfg.h1(),
                h2: cfg.h2(),
                l: ctx.scale()?,
            },
            EventArg::Bad => EventDescriptor::Bad {
                params: ctx.params(),
                l: ctx.scale()?,
                k: cfg.k,
            },
            EventArg::Stretch => unreachable!("handled by estimate_stretch"),
        };
        let mut mc = McConfig::new(cfg.d, n).with_kappa(cfg.kappa);
        mc.pair_mode = cfg.pair_mode;
        rows.push(mc_estimate(&desc, &mc, cfg.n_samples, cfg.seed)?);
    }
    ctx.emit(&rows, json!({}))
}

pub fn tube(ctx: &Context, planted: bool, margin: i64, pad: i64) -> Result<()> {
    let cfg = &ctx.cfg;
    let h_star = cfg
        .h_star
        .ok_or_else(|| missing("h_star", "the tube events need an h_* estimate"))?;
    let study = lower_bound_study(&TubeStudyConfig {
        d: cfg.d,
        n: cfg.n,
        alpha: cfg.alpha,
        epsilon: cfg.epsilon,
        h: cfg.h,
        h_star,
        delta: cfg.delta,
        f_mode: cfg.f_mode,
        margin,
        pad,
        samples: cfg.n_samples,
        seed: cfg.seed,
        planted,
    })?;
    if study.df_stated_violations + study.df_confined_violations + study.g_violations > 0 {
        log::warn!("implication violations: {study:?}");
    }
    ctx.emit(std::slice::from_ref(&study), json!({ "delta": study.delta }))
}

pub fn fit(ctx: &Context, input: &Path) -> Result<()> {
    let (header, rows) = read_csv_rows(input)?;
    let col = |name: &str| header.iter().position(|h| h == name);
    let (ni, pi) = match (col("N"), col("p_hat")) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Format(format!("{} lacks N and p_hat columns", input.display()))),
    };
    let ci = col("censored");
    let parse = |s: &str, what: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Format(format!("bad {what} value `{s}`")))
    };
    let mut points = Vec::new();
    for r in &rows {
        if ci.is_some_and(|i| r[i] == "true") {
            continue;
        }
        points.push((parse(&r[ni], "N")?, parse(&r[pi], "p_hat")?));
    }
    let fits = fit_decay_models(&points, ctx.cfg.d);
    ctx.emit(&fits, json!({ "input": input, "points": points.len() }))
}
