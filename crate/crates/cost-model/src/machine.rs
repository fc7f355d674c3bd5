use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bandwidths, capacities and throughputs of one GPU.
///
/// Stored as TOML:
///
/// ```toml
/// name = "rtx5090"
/// l2_capacity = 98e6        # bytes
/// l2_bw = 6e12              # bytes/s, aggregate L2 <-> SM
/// l2_read_bw = 6e12
/// l2_write_bw = 4e12
/// dram_bw = 1.792e12
/// fma_tput = 2.6e13         # IMAD/s
/// alu_tput = 5.2e13         # simple integer ops/s
/// launch_overhead = 3e-6    # s per kernel
/// imad_per_butterfly = 1.0
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineModel {
    #[serde(default)]
    pub name: String,
    pub l2_capacity: f64,
    /// Aggregate ceiling over reads and writes together.
    pub l2_bw: f64,
    pub l2_read_bw: f64,
    pub l2_write_bw: f64,
    pub dram_bw: f64,
    pub fma_tput: f64,
    pub alu_tput: f64,
    pub launch_overhead: f64,
    #[serde(default = "one")]
    pub imad_per_butterfly: f64,
}

fn one() -> f64 {
    1.0
}

impl MachineModel {
    /// RTX-5090-class defaults. L2 capacity and aggregate L2 bandwidth are
    /// the published figures; the split read/write ceilings, DRAM rate and
    /// integer throughputs are round illustrative values.
    pub fn rtx5090() -> Self {
        MachineModel {
            name: "rtx5090".into(),
            l2_capacity: 98e6,
            l2_bw: 6e12,
            l2_read_bw: 6e12,
            l2_write_bw: 4e12,
            dram_bw: 1.792e12,
            fma_tput: 2.6e13,
            alu_tput: 5.2e13,
            launch_overhead: 3e-6,
            imad_per_butterfly: 1.0,
        }
    }

    /// All rates equal to one; handy for unit-less examples.
    pub fn unit() -> Self {
        MachineModel {
            name: "unit".into(),
            l2_capacity: 1.0,
            l2_bw: 1.0,
            l2_read_bw: 1.0,
            l2_write_bw: 1.0,
            dram_bw: 1.0,
            fma_tput: 1.0,
            alu_tput: 1.0,
            launch_overhead: 1.0,
            imad_per_butterfly: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("l2_capacity", self.l2_capacity),
            ("l2_bw", self.l2_bw),
            ("l2_read_bw", self.l2_read_bw),
            ("l2_write_bw", self.l2_write_bw),
            ("dram_bw", self.dram_bw),
            ("fma_tput", self.fma_tput),
            ("alu_tput", self.alu_tput),
            ("launch_overhead", self.launch_overhead),
            ("imad_per_butterfly", self.imad_per_butterfly),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Machine(format!("{name} must be positive, got {v}")));
            }
        }
        if self.l2_write_bw > self.l2_read_bw {
            return Err(Error::Machine(format!(
                "l2_write_bw ({}) exceeds l2_read_bw ({})",
                self.l2_write_bw, self.l2_read_bw
            )));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let m: MachineModel = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("machine model serializes")
    }
}

impl Default for MachineModel {
    fn default() -> Self {
        Self::rtx5090()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_validation() {
        let m = MachineModel::rtx5090();
        assert_eq!(MachineModel::from_toml(&m.to_toml()).unwrap(), m);
        let bad = m.to_toml().replace("l2_write_bw = 4000000000000.0", "l2_write_bw = 7000000000000.0");
        assert!(MachineModel::from_toml(&bad).is_err());
        let mut z = m.clone();
        z.dram_bw = 0.0;
        assert!(z.validate().is_err());
    }
}
