use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// Draw from Laplace(0, `scale`).
///
/// One 64-bit word per draw: the low bit picks the sign, the top 53 bits
/// give a uniform `U` in (0, 1) and the magnitude is `-scale * ln(U)`.
pub fn laplace_sample(source: &mut RandomSource, scale: f64) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::param(format!("Laplace scale must be positive, got {scale}")));
    }
    Ok(draw(source, scale))
}

#[inline]
pub(crate) fn draw(source: &mut RandomSource, scale: f64) -> f64 {
    loop {
        let word = source.next_u64();
        let bits = word >> 11;
        if bits == 0 {
            continue;
        }
        let u = bits as f64 * (1.0 / (1u64 << 53) as f64);
        let magnitude = -scale * u.ln();
        return if word & 1 == 0 { magnitude } else { -magnitude };
    }
}

/// P[X > t] for X ~ Laplace(0, scale).
pub fn laplace_tail(t: f64, scale: f64) -> f64 {
    if t >= 0.0 {
        0.5 * (-t / scale).exp()
    } else {
        1.0 - 0.5 * (t / scale).exp()
    }
}
