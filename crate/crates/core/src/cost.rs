//! Power, latency and weighted-cost evaluation for one task.
//!
//! Every function here is pure. Power terms are reported in watts-cost
//! (cycles x watts/cycle, plus transmit watts), latency in seconds, and the
//! scalar cost is `power + beta * latency` with no further normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts a level in dBm to watts.
pub fn dbm_to_watts(level_dbm: f64) -> f64 {
    10f64.powf((level_dbm - 30.0) / 10.0)
}

/// Thermal noise power in dBm for a receiver of the given bandwidth.
pub fn noise_dbm(density_dbm_per_hz: f64, bandwidth_hz: f64) -> f64 {
    density_dbm_per_hz + 10.0 * bandwidth_hz.log10()
}

/// End-device compute model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    /// CPU cycles needed per input bit.
    pub cycles_per_bit: f64,
    /// Watts drawn per CPU cycle.
    pub power_per_cycle: f64,
    /// Cycles per second.
    pub compute_capacity: f64,
    /// Cycles available for local execution over one episode.
    pub total_cycle_budget: f64,
}

impl DeviceProfile {
    /// Cycles consumed by executing `task` locally.
    pub fn cycles_for(&self, task: TaskSpec) -> f64 {
        self.cycles_per_bit * task.size_bits
    }

    pub fn validate(&self, max_task_bits: f64) -> Result<()> {
        positive("device_cycles_per_bit", self.cycles_per_bit)?;
        positive("device_power_per_cycle", self.power_per_cycle)?;
        positive("device_capacity", self.compute_capacity)?;
        positive("device_cycle_budget", self.total_cycle_budget)?;
        if self.total_cycle_budget < self.cycles_per_bit * max_task_bits {
            return Err(Error::config(
                "device_cycle_budget",
                format!(
                    "{} cycles cannot cover one local execution of the largest task ({} cycles)",
                    self.total_cycle_budget,
                    self.cycles_per_bit * max_task_bits
                ),
            ));
        }
        Ok(())
    }
}

/// Edge-server compute share allocated to the device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeProfile {
    pub cycles_per_bit: f64,
    pub power_per_cycle: f64,
    pub allocated_capacity: f64,
}

impl EdgeProfile {
    pub fn validate(&self) -> Result<()> {
        positive("edge_cycles_per_bit", self.cycles_per_bit)?;
        positive("edge_power_per_cycle", self.power_per_cycle)?;
        positive("edge_capacity", self.allocated_capacity)
    }
}

/// Uplink radio parameters and the failure model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioProfile {
    /// Hertz.
    pub bandwidth: f64,
    /// Watts.
    pub noise_power: f64,
    /// Transmit power levels in watts, strictly increasing.
    pub power_levels: Vec<f64>,
    /// Cost charged for a failed transmission.
    pub penalty: f64,
    /// Outage probability for each channel-gain state.
    pub outage_probs: Vec<f64>,
}

impl RadioProfile {
    pub fn validate(&self, gain_states: usize) -> Result<()> {
        positive("bandwidth", self.bandwidth)?;
        positive("noise_power", self.noise_power)?;
        if self.power_levels.is_empty() {
            return Err(Error::config("power_levels", "must not be empty"));
        }
        for &p in &self.power_levels {
            positive("power_levels", p)?;
        }
        if self.power_levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("power_levels", "must be strictly increasing"));
        }
        if !(self.penalty >= 0.0 && self.penalty.is_finite()) {
            return Err(Error::config("penalty", "must be finite and >= 0"));
        }
        if self.outage_probs.len() != gain_states {
            return Err(Error::config(
                "outage_probs",
                format!(
                    "expected {gain_states} entries (one per gain state), got {}",
                    self.outage_probs.len()
                ),
            ));
        }
        if self.outage_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::config("outage_probs", "each entry must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Latency weight of the scalar cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub beta: f64,
}

impl CostWeights {
    pub fn new(beta: f64) -> Result<Self> {
        let w = CostWeights { beta };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::config("beta", format!("{} is outside [0, 1]", self.beta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub size_bits: f64,
}

impl TaskSpec {
    pub fn new(size_bits: f64) -> Self {
        TaskSpec { size_bits }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub power: f64,
    pub latency: f64,
    pub cost: f64,
}

impl CostBreakdown {
    fn weighted(power: f64, latency: f64, w: CostWeights) -> Self {
        CostBreakdown {
            power,
            latency,
            cost: power + w.beta * latency,
        }
    }
}

pub fn local_cost(task: TaskSpec, dev: &DeviceProfile, w: CostWeights) -> CostBreakdown {
    let power = dev.cycles_per_bit * dev.power_per_cycle * task.size_bits;
    let latency = dev.cycles_per_bit * task.size_bits / dev.compute_capacity;
    CostBreakdown::weighted(power, latency, w)
}

/// Shannon rate in bits per second; zero when nothing is transmitted.
pub fn transmission_rate(power: f64, gain: f64, radio: &RadioProfile) -> f64 {
    radio.bandwidth * (1.0 + power * gain / radio.noise_power).log2()
}

pub fn offload_cost(
    task: TaskSpec,
    power: f64,
    gain: f64,
    edge: &EdgeProfile,
    radio: &RadioProfile,
    w: CostWeights,
) -> Result<CostBreakdown> {
    let rate = transmission_rate(power, gain, radio);
    if rate.is_nan() || rate <= 0.0 {
        return Err(Error::ZeroRate { power, gain });
    }
    let compute_power = edge.cycles_per_bit * edge.power_per_cycle * task.size_bits;
    let compute_latency = edge.cycles_per_bit * task.size_bits / edge.allocated_capacity;
    let transmit_latency = task.size_bits / rate;
    Ok(CostBreakdown::weighted(
        compute_power + power,
        compute_latency + transmit_latency,
        w,
    ))
}

/// What happened to the task (if any) handled in one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeKind {
    LocalSuccess,
    OffloadSuccess,
    OffloadFailure,
    Idle,
}

impl OutcomeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::LocalSuccess => "local-success",
            OutcomeKind::OffloadSuccess => "offload-success",
            OutcomeKind::OffloadFailure => "offload-failure",
            OutcomeKind::Idle => "idle",
        }
    }
}

/// Per-epoch cost of an outcome. `success` carries the breakdown of the
/// executed mode and is ignored for failure and idle epochs.
pub fn step_cost(kind: OutcomeKind, success: CostBreakdown, radio: &RadioProfile) -> f64 {
    match kind {
        OutcomeKind::LocalSuccess | OutcomeKind::OffloadSuccess => success.cost,
        OutcomeKind::OffloadFailure => radio.penalty,
        OutcomeKind::Idle => 0.0,
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("{v} must be finite and > 0")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn device() -> DeviceProfile {
        DeviceProfile {
            cycles_per_bit: 500.0,
            power_per_cycle: 1e-8,
            compute_capacity: 5e8,
            total_cycle_budget: 5e7,
        }
    }

    fn edge() -> EdgeProfile {
        EdgeProfile {
            cycles_per_bit: 500.0,
            power_per_cycle: 1e-8,
            allocated_capacity: 4e9,
        }
    }

    fn radio() -> RadioProfile {
        RadioProfile {
            bandwidth: 1e5,
            noise_power: dbm_to_watts(-124.0),
            power_levels: vec![0.025, 0.1],
            penalty: 1.0,
            outage_probs: vec![0.2, 0.1, 0.05],
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn dbm_conversions() {
        assert_eq!(dbm_to_watts(30.0), 1.0);
        assert!(rel(dbm_to_watts(0.0), 1e-3) < 1e-15);
        assert!(rel(dbm_to_watts(-124.0), 3.98107e-16) < 1e-5);
        assert!(rel(dbm_to_watts(noise_dbm(-174.0, 1e5)), 3.98107e-16) < 1e-5);
    }

    #[test]
    fn local_cost_table_values() {
        let w = CostWeights::new(0.5).unwrap();
        let c = local_cost(TaskSpec::new(1e4), &device(), w);
        assert!(rel(c.power, 0.05) < 1e-12);
        assert!(rel(c.latency, 0.01) < 1e-12);
        assert!(rel(c.cost, 0.055) < 1e-12);

        let c0 = local_cost(TaskSpec::new(1e4), &device(), CostWeights::new(0.0).unwrap());
        assert_eq!(c0.cost, c0.power);

        let big = local_cost(TaskSpec::new(25e3), &device(), w);
        assert!(rel(big.power, 0.125) < 1e-12);
        assert!(rel(big.latency, 0.025) < 1e-12);
        assert!(rel(big.cost, 0.1375) < 1e-12);
    }

    #[test]
    fn rate_and_offload_cost() {
        let r = radio();
        assert!(rel(transmission_rate(0.1, 1e-5, &r), 3.1226e6) < 1e-4);
        assert_eq!(transmission_rate(0.0, 1e-5, &r), 0.0);
        assert!(transmission_rate(0.1, 2e-5, &r) > transmission_rate(0.1, 1e-5, &r));

        let w = CostWeights::new(0.5).unwrap();
        let c = offload_cost(TaskSpec::new(1e4), 0.1, 1e-5, &edge(), &r, w).unwrap();
        assert!(rel(c.power, 0.15) < 1e-12);
        assert!(rel(c.latency, 4.4525e-3) < 1e-4);
        assert!(rel(c.cost, 0.152226) < 1e-4);

        let c0 = offload_cost(
            TaskSpec::new(1e4),
            0.1,
            1e-5,
            &edge(),
            &r,
            CostWeights::new(0.0).unwrap(),
        )
        .unwrap();
        assert_eq!(c0.cost, 500.0 * 1e-8 * 1e4 + 0.1);
    }

    #[test]
    fn zero_power_offload_is_rejected() {
        let err = offload_cost(
            TaskSpec::new(1e4),
            0.0,
            1e-5,
            &edge(),
            &radio(),
            CostWeights::new(0.5).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ZeroRate { .. }));
    }

    #[test]
    fn step_cost_branches() {
        let r = radio();
        let local = local_cost(TaskSpec::new(1e4), &device(), CostWeights::new(0.5).unwrap());
        assert_eq!(step_cost(OutcomeKind::Idle, local, &r), 0.0);
        assert_eq!(step_cost(OutcomeKind::OffloadFailure, local, &r), 1.0);
        assert!(rel(step_cost(OutcomeKind::LocalSuccess, local, &r), 0.055) < 1e-12);
    }

    #[test]
    fn default_penalty_exceeds_every_success_cost() {
        // Brute force over the reference grid at the most latency-heavy weight.
        let r = radio();
        let w = CostWeights::new(1.0).unwrap();
        let mut worst: f64 = 0.0;
        for kbits in 10..=25 {
            let task = TaskSpec::new(kbits as f64 * 1e3);
            worst = worst.max(local_cost(task, &device(), w).cost);
            for &p in &r.power_levels {
                for g in [0.5e-5, 1e-5, 1.5e-5] {
                    worst = worst.max(offload_cost(task, p, g, &edge(), &r, w).unwrap().cost);
                }
            }
        }
        assert!(worst < r.penalty, "worst success cost {worst}");
    }

    #[test]
    fn edge_compute_is_faster_than_local_for_every_size() {
        let (d, e) = (device(), edge());
        for kbits in 10..=25 {
            let m = kbits as f64 * 1e3;
            assert!(d.cycles_per_bit * m / d.compute_capacity > e.cycles_per_bit * m / e.allocated_capacity);
        }
    }

    #[test]
    fn validation_rejects_bad_profiles() {
        assert!(CostWeights::new(1.5).is_err());
        assert!(CostWeights::new(-0.1).is_err());
        let mut d = device();
        d.total_cycle_budget = 1e6;
        assert!(d.validate(25e3).is_err());
        let mut r = radio();
        r.power_levels = vec![0.1, 0.025];
        assert!(r.validate(3).is_err());
        let mut r = radio();
        r.outage_probs = vec![0.2, 1.2, 0.0];
        assert!(r.validate(3).is_err());
        assert!(radio().validate(2).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rate_increases_in_power_and_gain(p in 1e-4f64..1.0, g in 1e-7f64..1e-4, k in 1.01f64..4.0) {
                let r = radio();
                prop_assert!(transmission_rate(p * k, g, &r) > transmission_rate(p, g, &r));
                prop_assert!(transmission_rate(p, g * k, &r) > transmission_rate(p, g, &r));
            }

            #[test]
            fn cost_is_affine_in_beta(m in 1e3f64..5e4, b1 in 0.0f64..=1.0, b2 in 0.0f64..=1.0,
                                      p in 0.01f64..0.2, g in 1e-6f64..2e-5) {
                let (w1, w2) = (CostWeights { beta: b1 }, CostWeights { beta: b2 });
                let t = TaskSpec::new(m);
                let (l1, l2) = (local_cost(t, &device(), w1), local_cost(t, &device(), w2));
                prop_assert!(((l2.cost - l1.cost) - (b2 - b1) * l1.latency).abs() < 1e-12);
                let o1 = offload_cost(t, p, g, &edge(), &radio(), w1).unwrap();
                let o2 = offload_cost(t, p, g, &edge(), &radio(), w2).unwrap();
                prop_assert!(((o2.cost - o1.cost) - (b2 - b1) * o1.latency).abs() < 1e-12);
            }

            #[test]
            fn costs_are_deterministic(m in 1e3f64..5e4, p in 0.01f64..0.2, g in 1e-6f64..2e-5, b in 0.0f64..=1.0) {
                let w = CostWeights { beta: b };
                let t = TaskSpec::new(m);
                prop_assert_eq!(local_cost(t, &device(), w), local_cost(t, &device(), w));
                let a = offload_cost(t, p, g, &edge(), &radio(), w).unwrap();
                let b = offload_cost(t, p, g, &edge(), &radio(), w).unwrap();
                prop_assert_eq!(a.cost.to_bits(), b.cost.to_bits());
            }
        }
    }
}
