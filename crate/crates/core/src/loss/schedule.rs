//! Regularization weight β and power-of-ten scale s.

use std::fmt;

use super::LossMode;
use crate::error::{Error, Result};

/// 1-indexed epoch position within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingClock {
    current_epoch: usize,
    total_epochs: usize,
}

impl TrainingClock {
    pub fn new(current_epoch: usize, total_epochs: usize) -> Result<Self> {
        if current_epoch == 0 || current_epoch > total_epochs {
            return Err(Error::Validation(format!(
                "epoch {current_epoch} is outside 1..={total_epochs}"
            )));
        }
        Ok(Self {
            current_epoch,
            total_epochs,
        })
    }

    pub fn current_epoch(&self) -> usize {
        self.current_epoch
    }

    pub fn total_epochs(&self) -> usize {
        self.total_epochs
    }
}

/// Regularization weight for the given epoch.
///
/// With a decaying schedule this is `1 - current/total`, evaluated as the
/// single correctly rounded quotient `(total - current) / total`.
pub fn beta_at(clock: TrainingClock, mode: &LossMode) -> f64 {
    match mode.variant {
        super::LossVariant::Baseline => 0.0,
        _ if mode.use_decaying_beta => {
            (clock.total_epochs - clock.current_epoch) as f64 / clock.total_epochs as f64
        }
        _ => mode.constant_beta,
    }
}

/// An exact power of ten, `10^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scale {
    pub exponent: i32,
}

impl Scale {
    pub const ONE: Scale = Scale { exponent: 0 };

    /// The double nearest to `10^exponent`.
    pub fn value(self) -> f64 {
        // Decimal parsing is correctly rounded, unlike repeated multiplication.
        format!("1e{}", self.exponent).parse().expect("valid float literal")
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// `10^round(log10(loss))`, with exact half-decades rounding up in exponent,
/// so that `loss / s` always lies in `[10^-0.5, 10^0.5)`.
pub fn dynamic_scale(loss: f64) -> Result<Scale> {
    if !loss.is_finite() || loss <= 0.0 {
        return Err(Error::Domain(format!("scale needs a finite positive loss, got {loss}")));
    }
    let mut exponent = (loss.log10() + 0.5).floor() as i32;
    // log10 can be off by an ulp near half-decades; settle with the ratio.
    let sqrt10 = 10f64.sqrt();
    loop {
        let ratio = loss / Scale { exponent }.value();
        if ratio >= sqrt10 {
            exponent += 1;
        } else if ratio < 1.0 / sqrt10 {
            exponent -= 1;
        } else {
            break;
        }
    }
    Ok(Scale { exponent })
}

/// Lower bound on the loss estimate fed to [`dynamic_scale`]; a perfectly
/// fitted batch can drive DiceCE to zero or just below it.
pub const SCALE_FLOOR: f64 = 1e-12;

/// How the scale evolves across a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalePolicy {
    /// Recomputed every step from the current epoch's running mean loss.
    Dynamic,
    /// Dynamic during the first epoch, then frozen at the scale of the first
    /// epoch's mean loss.
    FirstEpoch,
}

/// Running estimate of the standard loss that drives the scale.
///
/// The estimate at a step is the mean of the completed steps of the current
/// epoch; before any step of an epoch completes it is the previous epoch's
/// mean, and on the very first step the current batch loss itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleState {
    policy: ScalePolicy,
    epoch: usize,
    sum: f64,
    count: usize,
    prev_mean: Option<f64>,
    frozen: Option<Scale>,
}

impl ScaleState {
    pub fn new(policy: ScalePolicy) -> Self {
        Self {
            policy,
            epoch: 0,
            sum: 0.0,
            count: 0,
            prev_mean: None,
            frozen: None,
        }
    }

    pub fn policy(&self) -> ScalePolicy {
        self.policy
    }

    /// Scale in effect for a step of `epoch` whose standard loss is
    /// `standard`; the loss is then folded into the running mean.
    pub fn observe(&mut self, epoch: usize, standard: f64) -> Result<Scale> {
        if !standard.is_finite() {
            return Err(Error::NonFinite(format!("standard loss {standard} in epoch {epoch}")));
        }
        if epoch != self.epoch {
            if self.count > 0 {
                let mean = self.sum / self.count as f64;
                self.prev_mean = Some(mean);
                if self.policy == ScalePolicy::FirstEpoch && self.frozen.is_none() {
                    self.frozen = Some(dynamic_scale(mean.max(SCALE_FLOOR))?);
                }
            }
            self.epoch = epoch;
            self.sum = 0.0;
            self.count = 0;
        }
        let scale = match self.frozen {
            Some(s) => s,
            None => {
                let estimate = if self.count > 0 {
                    self.sum / self.count as f64
                } else {
                    self.prev_mean.unwrap_or(standard)
                };
                dynamic_scale(estimate.max(SCALE_FLOOR))?
            }
        };
        self.sum += standard;
        self.count += 1;
        Ok(scale)
    }

    /// The frozen first-epoch scale, once known.
    pub fn frozen(&self) -> Option<Scale> {
        self.frozen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::LossVariant;

    #[test]
    fn scale_examples() {
        assert_eq!(dynamic_scale(13.0).unwrap().value(), 10.0);
        assert_eq!(dynamic_scale(1.0).unwrap().value(), 1.0);
        assert_eq!(dynamic_scale(0.05).unwrap().value(), 0.1);
        assert_eq!(dynamic_scale(3.2).unwrap().value(), 10.0);
        assert_eq!(dynamic_scale(3.1).unwrap().value(), 1.0);
        assert_eq!(dynamic_scale(1e-7).unwrap().exponent, -7);
    }

    #[test]
    fn scale_domain_errors() {
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(dynamic_scale(bad), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn half_decade_rounds_up() {
        let s = dynamic_scale(10f64.sqrt()).unwrap();
        let r = 10f64.sqrt() / s.value();
        assert!(r >= 1.0 / 10f64.sqrt() && r < 10f64.sqrt());
    }

    #[test]
    fn beta_examples() {
        let m = LossMode::dominopp();
        assert_eq!(beta_at(TrainingClock::new(1, 100).unwrap(), &m), 0.99);
        assert_eq!(beta_at(TrainingClock::new(100, 100).unwrap(), &m), 0.0);
        assert_eq!(beta_at(TrainingClock::new(25, 100).unwrap(), &m), 0.75);
        let constant = LossMode {
            use_decaying_beta: false,
            ..LossMode::dominopp()
        };
        assert_eq!(beta_at(TrainingClock::new(25, 100).unwrap(), &constant), 1.0);
        let base = LossMode::baseline();
        assert_eq!(base.variant, LossVariant::Baseline);
        assert_eq!(beta_at(TrainingClock::new(1, 100).unwrap(), &base), 0.0);
    }

    #[test]
    fn clock_bounds() {
        assert!(TrainingClock::new(0, 5).is_err());
        assert!(TrainingClock::new(6, 5).is_err());
    }

    #[test]
    fn dynamic_state_tracks_running_mean() {
        let mut st = ScaleState::new(ScalePolicy::Dynamic);
        // first step: its own value
        assert_eq!(st.observe(1, 13.0).unwrap().exponent, 1);
        // mean of completed steps {13} -> 10
        assert_eq!(st.observe(1, 0.01).unwrap().exponent, 1);
        // mean of {13, 0.01} = 6.505 -> 10
        assert_eq!(st.observe(1, 0.01).unwrap().exponent, 1);
        // new epoch seeded with previous mean 4.34 -> 1
        assert_eq!(st.observe(2, 0.02).unwrap().exponent, 1);
        // mean of {0.02}
        assert_eq!(st.observe(2, 0.02).unwrap().exponent, -2);
    }

    #[test]
    fn zero_loss_hits_the_floor() {
        let mut st = ScaleState::new(ScalePolicy::Dynamic);
        assert_eq!(st.observe(1, -1e-12).unwrap().exponent, -12);
        assert!(st.observe(1, f64::NAN).is_err());
    }

    #[test]
    fn first_epoch_state_freezes() {
        let mut st = ScaleState::new(ScalePolicy::FirstEpoch);
        st.observe(1, 2.0).unwrap();
        st.observe(1, 4.0).unwrap();
        assert_eq!(st.frozen(), None);
        let s = st.observe(2, 0.001).unwrap();
        assert_eq!(s.exponent, 0);
        assert_eq!(st.observe(3, 50.0).unwrap(), s);
        assert_eq!(st.frozen(), Some(s));
    }
}
