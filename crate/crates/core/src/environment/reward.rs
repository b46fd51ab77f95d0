use serde::{Deserialize, Serialize};

/// Reward components for one agent at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_e: f64,
    pub r_c: f64,
    /// Shared utilization reward, identical across agents.
    pub r_u: f64,
    pub r_total: f64,
    pub omega: f64,
}

impl RewardBreakdown {
    pub fn new(r_e: f64, r_c: f64, r_u: f64, omega: f64) -> Self {
        Self {
            r_e,
            r_c,
            r_u,
            r_total: r_e + r_c + r_u,
            omega,
        }
    }
}

/// Energy reward: normalized draw plus a flat charge for being airborne.
/// Never positive.
pub fn reward_energy(operating: bool, e_b: f64, e_c: f64, rho_e1: f64, rho_e2: f64, e_norm: f64) -> f64 {
    let flag = if operating { 1.0 } else { 0.0 };
    -rho_e1 * (e_b + e_c) / e_norm - rho_e2 * flag
}

/// Surveillance reward: `rho_c * ln(pixels) * assigned_users`.
pub fn reward_surveillance(pixels: u32, assigned_users: usize, rho_c: f64) -> f64 {
    if assigned_users == 0 {
        return 0.0;
    }
    rho_c * libm::log(f64::from(pixels)) * assigned_users as f64
}

/// Utilization reward over agent-assigned users, gated off once the overlap
/// ratio reaches the threshold.
pub fn reward_utilization(agent_assigned: usize, omega: f64, threshold: f64, rho_u: f64, users: usize) -> f64 {
    if omega < threshold && users > 0 {
        rho_u * agent_assigned as f64 / users as f64
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_examples() {
        assert_eq!(reward_energy(false, 0.0, 0.0, 1.0, 1.0, 175.32), 0.0);
        let r = reward_energy(true, 128.89, 5.0 / 3.0, 1.0, 1.0, 175.32 + 5.0);
        assert!((r - (-1.724)).abs() < 5e-4, "{r}");
        let r = reward_energy(true, 170.32, 5.0, 1.0, 1.0, 175.32);
        assert!((r + 2.0).abs() < 1e-12);
    }

    #[test]
    fn surveillance_examples() {
        assert_eq!(reward_surveillance(720, 0, 1.0), 0.0);
        assert!((reward_surveillance(720, 1, 1.0) - 6.579).abs() < 1e-3);
        assert!((reward_surveillance(2160, 6, 1.0) - 46.07).abs() < 1e-2);
    }

    #[test]
    fn utilization_examples() {
        assert_eq!(reward_utilization(25, 0.2, 0.5, 3.0, 25), 3.0);
        assert_eq!(reward_utilization(25, 0.5, 0.5, 3.0, 25), 0.0);
        assert_eq!(reward_utilization(10, 0.9, 0.5, 3.0, 25), 0.0);
        assert_eq!(reward_utilization(0, 0.0, 0.5, 3.0, 25), 0.0);
    }

    #[test]
    fn total_is_sum() {
        let b = RewardBreakdown::new(-1.7, 13.2, 0.36, 0.1);
        assert_eq!(b.r_total, b.r_e + b.r_c + b.r_u);
    }
}
