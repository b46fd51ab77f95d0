//! Per-step forward-pass FLOPS for each scheme.

use std::fmt;

use acr_core::neural::flops::comm_mix_flops;
use acr_core::policy::PolicyArchitecture;
use acr_core::{DenseLayer, Network, ScenarioConfig, Scheme, SchemeFlops};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopsReport {
    pub agents: usize,
    /// One CommNet policy forward pass.
    pub commnet: u64,
    /// One DNN policy forward pass.
    pub dnn: u64,
    /// `(scheme, total)` for every scheme.
    pub totals: Vec<(Scheme, u64)>,
}

impl FlopsReport {
    /// Report from given per-policy costs.
    pub fn from_costs(commnet: u64, dnn: u64, agents: usize) -> Self {
        let f = SchemeFlops::from_costs(commnet, dnn, agents);
        Self {
            agents,
            commnet,
            dnn,
            totals: Scheme::ALL.iter().map(|&s| (s, f.total(s))).collect(),
        }
    }

    pub fn total(&self, scheme: Scheme) -> u64 {
        self.totals
            .iter()
            .find(|(s, _)| *s == scheme)
            .map(|(_, t)| *t)
            .expect("every scheme is reported")
    }
}

/// Policy network of the scenario with zero weights; FLOPS only depend on
/// the shapes.
fn policy_network(scenario: &ScenarioConfig) -> (PolicyArchitecture, Network) {
    let arch = PolicyArchitecture::new(scenario.observation_len());
    let layers = arch
        .shapes()
        .into_iter()
        .map(|s| DenseLayer::zeros(s.inputs, s.outputs, s.activation))
        .collect();
    let net = Network::new(layers, arch.width).expect("policy shapes chain");
    (arch, net)
}

/// Costs computed from the scenario's policy networks.
pub fn flops_report(scenario: &ScenarioConfig) -> Result<FlopsReport, HarnessError> {
    scenario.validate()?;
    let (arch, net) = policy_network(scenario);
    let f = SchemeFlops::from_network(&net, arch.comm_layers(), scenario.agents);
    if f.commnet <= f.dnn {
        return Err(HarnessError::Config("CommNet must cost more than DNN".into()));
    }
    debug_assert_eq!(
        f.commnet - f.dnn,
        arch.comm_layers() as u64 * comm_mix_flops(arch.width, scenario.agents)
    );
    Ok(FlopsReport::from_costs(f.commnet, f.dnn, scenario.agents))
}

impl fmt::Display for FlopsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.agents;
        writeln!(f, "policy    flops")?;
        writeln!(f, "commnet   {}", self.commnet)?;
        writeln!(f, "dnn       {}", self.dnn)?;
        writeln!(f)?;
        writeln!(f, "scheme    composition      total")?;
        for (scheme, total) in &self.totals {
            let composition = match scheme {
                Scheme::Proposed => format!("1*C + {}*D", m.saturating_sub(1)),
                Scheme::Comp1 => format!("{m}*C"),
                Scheme::Comp2 => format!("{m}*D"),
            };
            writeln!(f, "{:<9} {:<16} {}", scheme.name(), composition, total)?;
        }
        Ok(())
    }
}
