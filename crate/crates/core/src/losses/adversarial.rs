use super::pixel::{pixel_loss, PixelMode};
use super::{DiscMode, LossSpec};
use crate::error::{shape_err, Error, Result};
use crate::raster::Raster;

/// Batch mean of `−α·log d_i + β·‖reference_i − fused_i‖₁`, with the L1 term
/// taken as the mean absolute difference.
pub fn generator_loss(
    d_scores: &[f64],
    fused: &[Raster],
    reference: &[Raster],
    spec: &LossSpec,
) -> Result<f64> {
    let n = d_scores.len();
    if n == 0 || fused.len() != n || reference.len() != n {
        return Err(shape_err!(
            "batch sizes differ or are empty: {n} scores, {} fused, {} reference",
            fused.len(),
            reference.len()
        ));
    }
    spec.validate()?;
    let mut total = 0.0;
    for ((&d, f), r) in d_scores.iter().zip(fused).zip(reference) {
        if !(d > 0.0 && d <= 1.0) {
            return Err(Error::Domain(format!(
                "discriminator score {d} outside (0, 1]"
            )));
        }
        total += -spec.alpha * d.ln() + spec.beta * pixel_loss(f, r, PixelMode::L1)?;
    }
    Ok(total / n as f64)
}

pub fn discriminator_loss(d_fake: &[f64], d_real: &[f64], mode: DiscMode) -> Result<f64> {
    let n = d_fake.len();
    if n == 0 || d_real.len() != n {
        return Err(shape_err!(
            "score vectors differ or are empty: {n} fake, {} real",
            d_real.len()
        ));
    }
    let mut total = 0.0;
    for (&f, &r) in d_fake.iter().zip(d_real) {
        for s in [f, r] {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::Domain(format!(
                    "discriminator score {s} outside (0, 1)"
                )));
            }
        }
        total += match mode {
            DiscMode::AsPrinted => 1.0 - f.ln() + r.ln(),
            DiscMode::Bce => -(1.0 - f).ln() - r.ln(),
        };
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(v: f64) -> Raster {
        Raster::filled(4, 4, 2, v).unwrap()
    }

    #[test]
    fn generator_closed_forms() {
        let spec = LossSpec::default();
        assert_eq!(
            generator_loss(&[1.0], &[img(0.3)], &[img(0.3)], &spec).unwrap(),
            0.0
        );

        let adv_only = LossSpec {
            alpha: 1.0,
            beta: 0.0,
            ..spec
        };
        let v = generator_loss(&[(-1.0f64).exp()], &[img(0.3)], &[img(0.9)], &adv_only).unwrap();
        assert!((v - 1.0).abs() < 1e-12);

        let rec_only = LossSpec {
            alpha: 0.0,
            beta: 2.0,
            ..spec
        };
        let v = generator_loss(&[0.5], &[img(0.2)], &[img(0.7)], &rec_only).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generator_batch_mean() {
        let spec = LossSpec {
            alpha: 1.0,
            beta: 1.0,
            ..Default::default()
        };
        let v = generator_loss(
            &[1.0, 0.5],
            &[img(0.2), img(0.2)],
            &[img(0.4), img(0.2)],
            &spec,
        )
        .unwrap();
        let expected = (0.2 + (-(0.5f64.ln()))) / 2.0;
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn generator_errors() {
        let spec = LossSpec::default();
        assert!(matches!(
            generator_loss(&[0.0], &[img(0.1)], &[img(0.1)], &spec),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            generator_loss(&[0.5, 0.5], &[img(0.1)], &[img(0.1)], &spec),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn discriminator_closed_forms() {
        let v = discriminator_loss(&[0.5], &[0.5], DiscMode::AsPrinted).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let v = discriminator_loss(&[0.5], &[0.5], DiscMode::Bce).unwrap();
        assert!((v - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!((v - 1.386294).abs() < 1e-6);
        let v = discriminator_loss(&[1e-12], &[1.0 - 1e-12], DiscMode::Bce).unwrap();
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn discriminator_domain() {
        assert!(discriminator_loss(&[0.0], &[0.5], DiscMode::Bce).is_err());
        assert!(discriminator_loss(&[0.5], &[1.0], DiscMode::AsPrinted).is_err());
        assert!(discriminator_loss(&[0.5], &[], DiscMode::AsPrinted).is_err());
    }
}
