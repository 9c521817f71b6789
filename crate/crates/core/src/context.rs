//! Per-vBS context: the traffic and channel state one decision is based on.
//!
//! A context couples downlink/uplink demand with channel quality and the
//! resource blocks needed to carry that demand, recomputable through
//! [`crate::radio::estimate_rbs`]. The learning stack consumes contexts as
//! 4-feature vectors normalized to [0, 1].

use crate::error::Result;
use crate::radio::{self, Direction};
use crate::scalar::Real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VbsContext<F> {
    /// Downlink demand in Mbps.
    pub d_dl_mbps: F,
    /// Uplink demand in Mbps.
    pub d_ul_mbps: F,
    /// Downlink channel quality as a CQI index, 1..=15.
    pub cqi_dl: u8,
    /// Uplink SNR in dB.
    pub snr_ul_db: F,
    /// Resource blocks needed downlink.
    pub p_dl: F,
    /// Resource blocks needed uplink.
    pub p_ul: F,
}

impl<F: Real> VbsContext<F> {
    /// Builds a context, deriving the resource-block columns from demand and
    /// channel quality.
    pub fn from_demand(
        d_dl_mbps: F,
        cqi_dl: u8,
        d_ul_mbps: F,
        snr_ul_db: F,
        prb_total: u32,
    ) -> Result<Self> {
        let p_dl = radio::estimate_rbs(
            d_dl_mbps,
            F::of_usize(cqi_dl as usize),
            Direction::Downlink,
            prb_total,
        )?;
        let p_ul = radio::estimate_rbs(d_ul_mbps, snr_ul_db, Direction::Uplink, prb_total)?;
        Ok(Self {
            d_dl_mbps,
            d_ul_mbps,
            cqi_dl,
            snr_ul_db,
            p_dl,
            p_ul,
        })
    }
}

/// Normalization constants mapping a context onto [0, 1] features. Stored in
/// checkpoints so a trained model keeps seeing the scale it was trained on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScale<F> {
    pub prb_total: u32,
    pub d_dl_max_mbps: F,
    pub d_ul_max_mbps: F,
}

impl<F: Real> FeatureScale<F> {
    /// Feature order: (p_dl, d_dl, p_ul, d_ul), each scaled to [0, 1].
    pub fn features(&self, c: &VbsContext<F>) -> [F; 4] {
        let unit = |v: F| v.max(F::zero()).min(F::one());
        let prb = F::of_usize(self.prb_total as usize);
        [
            unit(c.p_dl / prb),
            unit(c.d_dl_mbps / self.d_dl_max_mbps),
            unit(c.p_ul / prb),
            unit(c.d_ul_mbps / self.d_ul_max_mbps),
        ]
    }
}

/// Draw ranges for random contexts. Defaults keep every draw radio-feasible:
/// the worst in-range channel still carries the maximum demand, so service
/// failures can only come from the compute side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextRanges<F> {
    pub d_dl_max_mbps: F,
    pub d_ul_max_mbps: F,
    pub cqi_dl_min: u8,
    pub cqi_dl_max: u8,
    pub snr_ul_min_db: F,
    pub snr_ul_max_db: F,
    pub prb_total: u32,
}

impl<F: Real> Default for ContextRanges<F> {
    fn default() -> Self {
        Self {
            d_dl_max_mbps: F::of_f64(12.0),
            d_ul_max_mbps: F::of_f64(10.0),
            cqi_dl_min: 7,
            cqi_dl_max: 15,
            snr_ul_min_db: F::of_f64(6.0),
            snr_ul_max_db: F::of_f64(23.0),
            prb_total: radio::PRB_10MHZ,
        }
    }
}

impl<F: Real> ContextRanges<F> {
    pub fn validate(&self) -> Result<()> {
        use crate::error::CoreError;
        if self.cqi_dl_min < radio::CQI_MIN
            || self.cqi_dl_max > radio::CQI_MAX
            || self.cqi_dl_min > self.cqi_dl_max
        {
            return Err(CoreError::InvalidContext(format!(
                "CQI range {}..={} invalid",
                self.cqi_dl_min, self.cqi_dl_max
            )));
        }
        if self.snr_ul_min_db > self.snr_ul_max_db
            || !self.snr_ul_min_db.is_finite()
            || !self.snr_ul_max_db.is_finite()
        {
            return Err(CoreError::InvalidContext("SNR range invalid".into()));
        }
        if self.d_dl_max_mbps <= F::zero() || self.d_ul_max_mbps <= F::zero() {
            return Err(CoreError::InvalidContext(
                "demand maxima must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn feature_scale(&self) -> FeatureScale<F> {
        FeatureScale {
            prb_total: self.prb_total,
            d_dl_max_mbps: self.d_dl_max_mbps,
            d_ul_max_mbps: self.d_ul_max_mbps,
        }
    }
}

/// Draws `n_vbs` independent contexts uniformly over the configured ranges.
/// Pure function of `(n_vbs, ranges, seed)`.
pub fn gen_random_context<F: Real>(
    n_vbs: usize,
    ranges: &ContextRanges<F>,
    seed: u64,
) -> Result<Vec<VbsContext<F>>> {
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_vbs);
    for _ in 0..n_vbs {
        let d_dl = F::of_f64(rng.gen_range(0.0..=ranges.d_dl_max_mbps.as_f64()));
        let cqi = rng.gen_range(ranges.cqi_dl_min..=ranges.cqi_dl_max);
        let d_ul = F::of_f64(rng.gen_range(0.0..=ranges.d_ul_max_mbps.as_f64()));
        let snr =
            F::of_f64(rng.gen_range(ranges.snr_ul_min_db.as_f64()..=ranges.snr_ul_max_db.as_f64()));
        out.push(VbsContext::from_demand(
            d_dl,
            cqi,
            d_ul,
            snr,
            ranges.prb_total,
        )?);
    }
    Ok(out)
}
