use std::path::PathBuf;

use clap::{Args, ValueEnum};
use pansharp::features::{load_conv_stack, Extractor};
use pansharp::losses::{
    combined_loss, discriminator_loss, finite_difference_gradient, generator_loss,
    max_relative_error, DifferentiableLoss, DiscMode, LossId, LossSpec, SamMode,
};
use pansharp::raster::read_raster;
use pansharp::Raster;

use crate::{CmdResult, Failure, Format};

const GRAD_CHECK_SIDE: usize = 16;
const GRAD_CHECK_STEP: f64 = 1e-5;
const GRAD_CHECK_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Disc {
    AsPrinted,
    Bce,
}

#[derive(Args, Debug)]
pub struct LossArgs {
    #[arg(long)]
    name: LossId,
    /// Fused raster followed by the reference (or target) raster.
    #[arg(num_args = 0..=2)]
    inputs: Vec<PathBuf>,
    /// LRMS input for total-sam.
    #[arg(long)]
    lrms: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    ratio: usize,
    /// `identity` or a CSW weights file.
    #[arg(long, default_value = "identity")]
    extractor: String,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    eta1: f64,
    #[arg(long, default_value_t = 1.0)]
    eta2: f64,
    /// Discriminator scores of the fused images (gen-adv).
    #[arg(long, value_delimiter = ',')]
    d_score: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    d_fake: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    d_real: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Disc::AsPrinted)]
    disc_mode: Disc,
    /// Add a second raster loss, reported as eta1 * name + eta2 * regularizer.
    #[arg(long)]
    regularizer: Option<LossId>,
    /// Compare the analytic gradient with central differences on a center crop.
    #[arg(long)]
    grad_check: bool,
}

struct Context {
    fused: Raster,
    reference: Raster,
    lrms: Option<Raster>,
    extractor: Extractor,
}

impl LossArgs {
    fn spec(&self) -> LossSpec {
        LossSpec {
            alpha: self.alpha,
            beta: self.beta,
            eta1: self.eta1,
            eta2: self.eta2,
            sam_mode: SamMode::Cosine,
            disc_mode: match self.disc_mode {
                Disc::AsPrinted => DiscMode::AsPrinted,
                Disc::Bce => DiscMode::Bce,
            },
        }
    }

    fn needs_rasters(&self) -> bool {
        self.name != LossId::Disc || self.regularizer.is_some()
    }

    fn context(&self) -> CmdResult<Context> {
        let [f, r] = self.inputs.as_slice() else {
            return Err(Failure::usage(format!(
                "loss {} needs a fused and a reference raster",
                self.name
            )));
        };
        let wants_lrms = [Some(self.name), self.regularizer].contains(&Some(LossId::TotalSam));
        let lrms = match (&self.lrms, wants_lrms) {
            (Some(p), _) => Some(read_raster(p)?),
            (None, true) => return Err(Failure::usage("total-sam needs --lrms")),
            (None, false) => None,
        };
        let extractor = if self.extractor == "identity" {
            Extractor::Identity
        } else {
            Extractor::ConvStack(load_conv_stack(&self.extractor)?)
        };
        Ok(Context {
            fused: read_raster(f)?,
            reference: read_raster(r)?,
            lrms,
            extractor,
        })
    }
}

fn differentiable<'a>(
    id: LossId,
    ctx: &'a Context,
    ratio: usize,
) -> Option<DifferentiableLoss<'a>> {
    let reference = &ctx.reference;
    Some(match id {
        LossId::L1 => DifferentiableLoss::L1 { reference },
        LossId::Mse => DifferentiableLoss::Mse { reference },
        LossId::Sam => DifferentiableLoss::Sam {
            target: reference,
            mode: SamMode::Cosine,
        },
        LossId::SamPrinted => DifferentiableLoss::Sam {
            target: reference,
            mode: SamMode::AsPrinted,
        },
        LossId::TotalSam => DifferentiableLoss::TotalSam {
            reference,
            lrms: ctx.lrms.as_ref()?,
            ratio,
            mode: SamMode::Cosine,
        },
        LossId::GmReconstruction => DifferentiableLoss::GmReconstruction { reference },
        LossId::Perceptual => DifferentiableLoss::Perceptual {
            reference,
            extractor: &ctx.extractor,
        },
        LossId::GmPerceptual => DifferentiableLoss::GmPerceptual {
            reference,
            extractor: &ctx.extractor,
        },
        LossId::GenAdv | LossId::Disc => return None,
    })
}

fn raster_loss(id: LossId, ctx: &Context, args: &LossArgs) -> CmdResult<f64> {
    if id == LossId::GenAdv {
        if args.d_score.is_empty() {
            return Err(Failure::usage("gen-adv needs --d-score"));
        }
        let n = args.d_score.len();
        let fused = vec![ctx.fused.clone(); n];
        let reference = vec![ctx.reference.clone(); n];
        return Ok(generator_loss(
            &args.d_score,
            &fused,
            &reference,
            &args.spec(),
        )?);
    }
    let loss = differentiable(id, ctx, args.ratio).expect("context checked");
    Ok(loss.value(&ctx.fused)?)
}

pub fn run(args: &LossArgs, format: Format) -> CmdResult {
    let spec = args.spec();
    spec.validate()?;
    if args
        .regularizer
        .is_some_and(|r| matches!(r, LossId::Disc | LossId::GenAdv))
    {
        return Err(Failure::usage("the regularizer must be a raster loss"));
    }
    let ctx = if args.needs_rasters() {
        Some(args.context()?)
    } else {
        None
    };
    let base = if args.name == LossId::Disc {
        if args.d_fake.is_empty() || args.d_real.is_empty() {
            return Err(Failure::usage("disc needs --d-fake and --d-real"));
        }
        discriminator_loss(&args.d_fake, &args.d_real, spec.disc_mode)?
    } else {
        raster_loss(args.name, ctx.as_ref().expect("rasters loaded"), args)?
    };
    let value = match (args.regularizer, &ctx) {
        (Some(reg), Some(ctx)) => combined_loss(base, raster_loss(reg, ctx, args)?, &spec),
        _ => base,
    };
    let check = if args.grad_check {
        let ctx = ctx
            .as_ref()
            .ok_or_else(|| Failure::usage("disc has no raster gradient"))?;
        Some(grad_check(args, ctx)?)
    } else {
        None
    };
    match format {
        Format::Csv => {
            println!("{}: {value:.6}", args.name);
            if let Some(err) = check {
                let verdict = if err < GRAD_CHECK_TOL { "PASS" } else { "FAIL" };
                println!("max_rel_err = {err:.3e}");
                println!("max_rel_err < 1e-4: {verdict}");
            }
        }
        Format::Json => {
            let mut obj = serde_json::json!({ "name": args.name.name(), "value": value });
            if let Some(err) = check {
                obj["max_rel_err"] = err.into();
                obj["grad_check_pass"] = (err < GRAD_CHECK_TOL).into();
            }
            println!("{obj}");
        }
    }
    match check {
        Some(err) if err >= GRAD_CHECK_TOL => Err(Failure {
            code: 1,
            message: format!("gradient check failed: max relative error {err:.3e}"),
        }),
        _ => Ok(()),
    }
}

/// Center crop of side at most 16, aligned to the ratio so the LRMS crop lines up.
fn crop_context(ctx: &Context, ratio: usize) -> CmdResult<Context> {
    let r = if ctx.lrms.is_some() { ratio.max(1) } else { 1 };
    let side = |n: usize| (n.min(GRAD_CHECK_SIDE) / r * r).max(r);
    let (w, h) = (side(ctx.fused.width()), side(ctx.fused.height()));
    let x0 = (ctx.fused.width() - w) / 2 / r * r;
    let y0 = (ctx.fused.height() - h) / 2 / r * r;
    let lrms = match &ctx.lrms {
        Some(l) => Some(l.crop(x0 / r, y0 / r, w / r, h / r)?),
        None => None,
    };
    Ok(Context {
        fused: ctx.fused.crop(x0, y0, w, h)?,
        reference: ctx.reference.crop(x0, y0, w, h)?,
        lrms,
        extractor: ctx.extractor.clone(),
    })
}

fn grad_check(args: &LossArgs, ctx: &Context) -> CmdResult<f64> {
    let crop = crop_context(ctx, args.ratio)?;
    let mut worst = 0.0f64;
    for id in std::iter::once(args.name).chain(args.regularizer) {
        let loss = differentiable(id, &crop, args.ratio)
            .ok_or_else(|| Failure::usage(format!("{id} has no analytic gradient")))?;
        let mut analytic = loss.gradient(&crop.fused)?;
        let mut numeric =
            finite_difference_gradient(|x| loss.value(x), &crop.fused, GRAD_CHECK_STEP)?;
        if id == LossId::L1 {
            // |f - r| is not smooth within one step of f == r; central
            // differences mean nothing there, so those entries are left out.
            let kinks: Vec<usize> = crop
                .fused
                .data()
                .iter()
                .zip(crop.reference.data())
                .enumerate()
                .filter(|(_, (f, r))| (*f - *r).abs() <= 2.0 * GRAD_CHECK_STEP)
                .map(|(i, _)| i)
                .collect();
            if !kinks.is_empty() {
                eprintln!(
                    "l1: {} entries within one step of the kink skipped",
                    kinks.len()
                );
                let zero_at = |r: &Raster| -> pansharp::Result<Raster> {
                    let mut v = r.data().to_vec();
                    for &i in &kinks {
                        v[i] = 0.0;
                    }
                    Raster::new(r.width(), r.height(), r.bands(), v)
                };
                analytic = zero_at(&analytic)?;
                numeric = zero_at(&numeric)?;
            }
        }
        worst = worst.max(max_relative_error(&analytic, &numeric));
    }
    Ok(worst)
}
