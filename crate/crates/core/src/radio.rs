//! Radio-link model: channel quality to spectral efficiency to resource
//! blocks.
//!
//! Downlink quality arrives as a CQI index (1..=15), uplink quality as an
//! SNR in dB that is bucketed to a CQI through standard BLER-10% switching
//! thresholds. A resource block carries 12 subcarriers x 14 symbols per 1 ms
//! subframe, so its rate is `efficiency * 0.168` Mbps; a 10 MHz carrier has
//! 50 resource blocks.

use crate::error::{CoreError, Result};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Resource blocks of a 10 MHz LTE carrier.
pub const PRB_10MHZ: u32 = 50;

/// Resource elements per resource block per second: 12 subcarriers x 14
/// symbols x 1000 subframes.
const RE_PER_PRB_PER_SEC: f64 = 168_000.0;

/// Spectral efficiency (bits per resource element) for CQI 1..=15.
const CQI_EFFICIENCY: [f64; 15] = [
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223, 3.9023,
    4.5234, 5.1152, 5.5547,
];

/// Minimum SNR (dB) at which each CQI sustains a 10% block error rate.
const CQI_SNR_THRESHOLD_DB: [f64; 15] = [
    -6.7, -4.7, -2.3, 0.2, 2.4, 4.3, 5.9, 8.1, 10.3, 11.7, 14.1, 16.3, 18.7, 21.0, 22.7,
];

pub const CQI_MIN: u8 = 1;
pub const CQI_MAX: u8 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Downlink,
    Uplink,
}

/// Spectral efficiency in bits per resource element for a CQI index.
pub fn spectral_efficiency<F: Real>(cqi: u8) -> Result<F> {
    if !(CQI_MIN..=CQI_MAX).contains(&cqi) {
        return Err(CoreError::InvalidContext(format!(
            "CQI {cqi} outside {CQI_MIN}..={CQI_MAX}"
        )));
    }
    Ok(F::of_f64(CQI_EFFICIENCY[(cqi - 1) as usize]))
}

/// Highest CQI whose SNR threshold the given SNR meets. SNR below the lowest
/// threshold degrades to CQI 1 (the link stays up at the most robust
/// modulation); non-finite SNR is rejected.
pub fn cqi_from_snr_db<F: Real>(snr_db: F) -> Result<u8> {
    let snr = snr_db.as_f64();
    if !snr.is_finite() {
        return Err(CoreError::InvalidContext(format!(
            "non-finite uplink SNR {snr}"
        )));
    }
    let mut cqi = CQI_MIN;
    for (i, &thr) in CQI_SNR_THRESHOLD_DB.iter().enumerate() {
        if snr >= thr {
            cqi = (i + 1) as u8;
        }
    }
    Ok(cqi)
}

/// Channel quality in the representation carried by a context: CQI index for
/// downlink, SNR dB for uplink.
pub fn efficiency_for<F: Real>(sigma: F, direction: Direction) -> Result<F> {
    let cqi = match direction {
        Direction::Downlink => {
            let raw = sigma.as_f64();
            if !raw.is_finite() || raw.fract() != 0.0 {
                return Err(CoreError::InvalidContext(format!(
                    "downlink channel quality {raw} is not an integer CQI"
                )));
            }
            if !(CQI_MIN as f64..=CQI_MAX as f64).contains(&raw) {
                return Err(CoreError::InvalidContext(format!(
                    "downlink CQI {raw} outside {CQI_MIN}..={CQI_MAX}"
                )));
            }
            raw as u8
        }
        Direction::Uplink => cqi_from_snr_db(sigma)?,
    };
    spectral_efficiency(cqi)
}

/// Rate of one resource block in Mbps at the given channel quality.
pub fn per_rb_mbps<F: Real>(sigma: F, direction: Direction) -> Result<F> {
    let eff = efficiency_for::<F>(sigma, direction)?;
    Ok(eff * F::of_f64(RE_PER_PRB_PER_SEC / 1.0e6))
}

/// Link capacity in Mbps over `prb_total` resource blocks.
pub fn link_capacity_mbps<F: Real>(sigma: F, direction: Direction, prb_total: u32) -> Result<F> {
    Ok(per_rb_mbps::<F>(sigma, direction)? * F::of_usize(prb_total as usize))
}

/// Resource blocks needed to carry `demand_mbps` at channel quality `sigma`,
/// saturating at `prb_total`. Nondecreasing in demand, nonincreasing in
/// channel quality.
pub fn estimate_rbs<F: Real>(
    demand_mbps: F,
    sigma: F,
    direction: Direction,
    prb_total: u32,
) -> Result<F> {
    if !demand_mbps.is_finite() || demand_mbps < F::zero() {
        return Err(CoreError::InvalidContext(format!(
            "demand {demand_mbps} Mbps must be finite and nonnegative"
        )));
    }
    let rb_rate = per_rb_mbps::<F>(sigma, direction)?;
    let rbs = demand_mbps / rb_rate;
    Ok(rbs.min(F::of_usize(prb_total as usize)))
}
