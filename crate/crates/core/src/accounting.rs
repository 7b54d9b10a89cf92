//! Privacy-parameter arithmetic for zCDP and approximate DP.
//!
//! Tree depths use base-2 logarithms ([`log2_levels`]); the zCDP to DP
//! conversion uses the natural logarithm.

use crate::error::{invalid, Result};
use crate::noise::padded_horizon;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PrivacyBudget {
    Zcdp { rho: f64 },
    ApproxDp { epsilon: f64, delta: f64 },
}

impl PrivacyBudget {
    pub fn zcdp(rho: f64) -> Result<Self> {
        check_positive("rho", rho)?;
        Ok(PrivacyBudget::Zcdp { rho })
    }

    pub fn approx_dp(epsilon: f64, delta: f64) -> Result<Self> {
        check_positive("epsilon", epsilon)?;
        if !(0.0..1.0).contains(&delta) {
            return Err(invalid("delta", format!("must lie in [0, 1), got {delta}")));
        }
        Ok(PrivacyBudget::ApproxDp { epsilon, delta })
    }

    /// Converts to (epsilon, delta) at the given target delta when in zCDP mode.
    pub fn to_approx_dp(self, delta: f64) -> Result<(f64, f64)> {
        match self {
            PrivacyBudget::Zcdp { rho } => zcdp_to_dp(rho, delta),
            PrivacyBudget::ApproxDp { epsilon, delta } => Ok((epsilon, delta)),
        }
    }

    /// The rho a zCDP mechanism should be run at to meet this budget.
    pub fn to_zcdp(self) -> Result<f64> {
        match self {
            PrivacyBudget::Zcdp { rho } => Ok(rho),
            PrivacyBudget::ApproxDp { epsilon, delta } => dp_to_zcdp_budget(epsilon, delta),
        }
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {v}")))
    }
}

fn check_open_unit(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must lie in (0, 1), got {v}")))
    }
}

/// `log2(T_pad) + 1`, the number of levels of the tree over `T` leaves.
pub fn log2_levels(horizon: usize) -> u32 {
    padded_horizon(horizon).trailing_zeros() + 1
}

/// Per-node parameter for the flippancy-bounded mechanism:
/// `rho / (4 w (log2 T_pad + 1))`.
pub fn calibrate_alg1_rho(rho: f64, w: u64, horizon: usize) -> Result<f64> {
    check_positive("rho", rho)?;
    if w == 0 {
        return Err(invalid("w", "flippancy bound must be at least 1"));
    }
    if horizon == 0 {
        return Err(invalid("horizon", "must be at least 1"));
    }
    Ok(rho / (4.0 * w as f64 * log2_levels(horizon) as f64))
}

/// `rho`-zCDP implies `(rho + 2 sqrt(rho ln(1/delta)), delta)`-DP.
///
/// `rho = 0` is accepted and gives `epsilon = 0`.
pub fn zcdp_to_dp(rho: f64, delta: f64) -> Result<(f64, f64)> {
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(invalid("rho", format!("must be nonnegative and finite, got {rho}")));
    }
    check_open_unit("delta", delta)?;
    Ok((rho + 2.0 * (rho * (1.0 / delta).ln()).sqrt(), delta))
}

/// `rho = epsilon^2 / (16 ln(1/delta))`.
pub fn dp_to_zcdp_budget(epsilon: f64, delta: f64) -> Result<f64> {
    check_positive("epsilon", epsilon)?;
    check_open_unit("delta", delta)?;
    Ok(epsilon * epsilon / (16.0 * (1.0 / delta).ln()))
}

/// Pure `epsilon`-DP implies `epsilon^2 / 2`-zCDP.
pub fn pure_dp_to_zcdp(epsilon: f64) -> Result<f64> {
    check_positive("epsilon", epsilon)?;
    Ok(epsilon * epsilon / 2.0)
}

/// Sequential composition: budgets add.
pub fn compose_zcdp(budgets: &[f64]) -> Result<f64> {
    budgets.iter().try_fold(0.0, |acc, &rho| {
        check_positive("rho", rho)?;
        Ok(acc + rho)
    })
}

/// `(epsilon, delta)`-DP gives `(l epsilon, delta (e^{l epsilon} - 1)/(e^epsilon - 1))`
/// for groups of size `l`.
pub fn group_privacy(epsilon: f64, delta: f64, group: u64) -> Result<(f64, f64)> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(invalid("epsilon", format!("must be nonnegative and finite, got {epsilon}")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(invalid("delta", format!("must lie in [0, 1), got {delta}")));
    }
    if group == 0 {
        return Err(invalid("group", "group size must be at least 1"));
    }
    let l = group as f64;
    // The geometric sum 1 + e^eps + ... + e^{(l-1) eps}; equals l at eps = 0.
    let factor = if epsilon == 0.0 {
        l
    } else {
        (l * epsilon).exp_m1() / epsilon.exp_m1()
    };
    Ok((l * epsilon, delta * factor))
}

/// Releasing `N(f(y), sigma^2)` for `f` of l2-sensitivity `sensitivity` is
/// `sensitivity^2 / (2 sigma^2)`-zCDP.
pub fn gaussian_mechanism_rho(sensitivity: f64, sigma: f64) -> Result<f64> {
    check_positive("sigma", sigma)?;
    Ok(sensitivity * sensitivity / (2.0 * sigma * sigma))
}

/// The sigma that makes the Gaussian mechanism exactly `rho`-zCDP.
pub fn gaussian_sigma_for_rho(sensitivity: f64, rho: f64) -> Result<f64> {
    check_positive("rho", rho)?;
    check_positive("sensitivity", sensitivity)?;
    Ok(sensitivity / (2.0 * rho).sqrt())
}

/// Bookkeeping for running a mechanism on a stream blown up by a factor
/// `l = floor(1/epsilon)`: the scaled mechanism must be
/// `(epsilon, delta epsilon / 10)`-DP for the original to be `(1, delta)`-DP.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonScaling {
    pub copies: usize,
    pub epsilon: f64,
    pub delta: f64,
}

pub fn epsilon_scaling(epsilon: f64, delta: f64) -> Result<EpsilonScaling> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid("epsilon", format!("must lie in (0, 1], got {epsilon}")));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(invalid("delta", format!("must lie in [0, 1], got {delta}")));
    }
    Ok(EpsilonScaling {
        copies: (1.0 / epsilon).floor() as usize,
        epsilon,
        delta: delta * epsilon / 10.0,
    })
}
