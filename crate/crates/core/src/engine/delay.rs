use crate::channel::SPEED_OF_LIGHT;

/// One-way delay of a delivery, split by cause. All values in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DelayBudget {
    pub propagation: f64,
    /// Forwarding nodes between the fixed network and the train.
    pub relay_processing: f64,
    pub hst_processing: f64,
    /// Latency of a station-local network, when the traffic uses one.
    pub network: f64,
    pub queuing: f64,
    pub total: f64,
}

/// Where a delivery's bytes came from, hop by hop.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayPath {
    /// Slant range of each radio hop, meters.
    pub hops: Vec<f64>,
    pub forwarding_nodes: u32,
    pub network_latency: f64,
}

impl DelayPath {
    pub fn range(&self) -> f64 {
        self.hops.iter().sum()
    }
}

pub fn compute_delay(
    path: &DelayPath,
    node_processing: f64,
    hst_processing: f64,
    queuing: f64,
) -> DelayBudget {
    let propagation = path.range() / SPEED_OF_LIGHT;
    let relay_processing = node_processing * f64::from(path.forwarding_nodes);
    let total = propagation + relay_processing + hst_processing + path.network_latency + queuing;
    DelayBudget {
        propagation,
        relay_processing,
        hst_processing,
        network: path.network_latency,
        queuing,
        total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn direct(a2g: f64, a2t: f64) -> DelayPath {
        DelayPath {
            hops: vec![a2g, a2t],
            forwarding_nodes: 1,
            network_latency: 0.0,
        }
    }

    #[test]
    fn fifty_km_path() {
        let d = compute_delay(&direct(50_000.0, 500.0), 0.020, 0.040, 0.0);
        assert_relative_eq!(d.propagation, 50_500.0 / 299_792_458.0);
        assert!((d.propagation * 1e3 - 0.1684).abs() < 1e-4);
        assert!((d.total * 1e3 - 60.17).abs() < 0.01);
        assert!(d.total < 0.061);
    }

    #[test]
    fn zero_length_hops_leave_processing() {
        let d = compute_delay(&direct(0.0, 0.0), 0.020, 0.040, 0.0);
        assert_eq!(d.propagation, 0.0);
        assert_relative_eq!(d.total, 0.060, epsilon = 1e-15);
    }

    #[test]
    fn relay_adds_a_hop_and_a_node() {
        let a = compute_delay(&direct(20_000.0, 300.0), 0.020, 0.040, 0.0);
        let relayed = DelayPath {
            hops: vec![20_000.0, 5_000.0, 300.0],
            forwarding_nodes: 2,
            network_latency: 0.0,
        };
        let b = compute_delay(&relayed, 0.020, 0.040, 0.0);
        assert_relative_eq!((b.total - a.total) * 1e3, 20.0 + 5.0 / 299.792458, epsilon = 1e-9);
    }

    #[test]
    fn total_is_the_sum() {
        let d = compute_delay(&direct(12_345.0, 678.0), 0.020, 0.040, 0.3);
        assert_eq!(
            d.total,
            d.propagation + d.relay_processing + d.hst_processing + d.network + d.queuing
        );
    }
}
