use serde::Serialize;

/// Lower bound kept on every average rate so weights stay finite.
pub const RATE_FLOOR: f64 = 1e-12;

/// Proportional-fair state: moving-average throughput `R_u` per UE.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PfState {
    avg_rate: Vec<f64>,
    window: f64,
}

impl PfState {
    pub fn new(num_ues: usize, initial_rate: f64, window: usize) -> Self {
        assert!(window >= 1, "PF window must be at least one slot");
        Self {
            avg_rate: vec![initial_rate.max(RATE_FLOOR); num_ues],
            window: window as f64,
        }
    }

    pub fn avg_rates(&self) -> &[f64] {
        &self.avg_rate
    }

    /// `w_u = 1 / R_u`.
    pub fn weights(&self) -> Vec<f64> {
        self.avg_rate.iter().map(|r| 1.0 / r).collect()
    }

    /// `R_u <- (1 - 1/W) R_u + lambda_u / W`.
    pub fn update(&mut self, throughput: &[f64]) {
        debug_assert_eq!(throughput.len(), self.avg_rate.len());
        let keep = 1.0 - 1.0 / self.window;
        for (r, &lambda) in self.avg_rate.iter_mut().zip(throughput) {
            debug_assert!(lambda >= 0.0);
            *r = (keep * *r + lambda / self.window).max(RATE_FLOOR);
        }
    }
}
