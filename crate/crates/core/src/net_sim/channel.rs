//! Log-distance path loss with log-normal shadowing.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{NetSimError, RadioParams};

/// Deterministic part of the path loss, dB.
pub fn mean_path_loss_db(d: f64, radio: &RadioParams) -> f64 {
    radio.ref_loss + 10.0 * radio.pl_exponent * (d / radio.ref_dist).log10()
}

/// `PL0 + 10·n·log10(d/d0) + X` with `X ~ Normal(0, σ²)`. One normal draw is
/// taken from `rng` when σ > 0, none otherwise.
pub fn path_loss_db<R: Rng + ?Sized>(d: f64, radio: &RadioParams, rng: &mut R) -> Result<f64, NetSimError> {
    if !(d > 0.0) {
        return Err(NetSimError::BadDistance(d));
    }
    let mean = mean_path_loss_db(d, radio);
    if radio.shadow_sigma > 0.0 {
        let normal = Normal::new(0.0, radio.shadow_sigma).map_err(|e| NetSimError::InvalidRadio(e.to_string()))?;
        Ok(mean + normal.sample(rng))
    } else {
        Ok(mean)
    }
}

/// Received power, dBm.
pub fn rx_power_dbm<R: Rng + ?Sized>(d: f64, radio: &RadioParams, rng: &mut R) -> Result<f64, NetSimError> {
    Ok(radio.tx_power - path_loss_db(d, radio, rng)?)
}

/// Distance at which the mean received power equals `threshold`.
pub fn range_for_threshold(radio: &RadioParams, threshold: f64) -> f64 {
    radio.ref_dist * 10f64.powf((radio.tx_power - threshold - radio.ref_loss) / (10.0 * radio.pl_exponent))
}

/// Reception range without shadowing.
pub fn nominal_range(radio: &RadioParams) -> f64 {
    range_for_threshold(radio, radio.rx_threshold)
}
