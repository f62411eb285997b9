//! Simulation configuration. Angles in degrees, powers in dBm/dB, distances
//! in meters, array spacing and placement offsets in wavelengths.

use std::path::Path;

use fdhbf::array::UraGeometry;
use fdhbf::channel::{AngleSpread, ClusterSpec, DuplexPlacement};
use fdhbf::metrics::NoiseModel;
use fdhbf::rf::SelectionRule;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, SimError, SimResult};

/// Which RF/BB pipeline a realization runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Full duplex, SI-aware RF selection, semi-blind MMSE combiner.
    #[default]
    AbjhpcSmmse,
    /// Full duplex, SI-aware RF selection, SVD combiner.
    AbjhpcSvd,
    /// Half-duplex hybrid benchmark: RF selection without SI exclusion, SVD.
    AbhpcHd,
    /// Half-duplex fully digital.
    FdpcHd,
    /// Full-duplex fully digital.
    FdpcFd,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::AbjhpcSmmse,
        Mode::AbjhpcSvd,
        Mode::AbhpcHd,
        Mode::FdpcHd,
        Mode::FdpcFd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::AbjhpcSmmse => "abjhpc_smmse",
            Mode::AbjhpcSvd => "abjhpc_svd",
            Mode::AbhpcHd => "abhpc_hd",
            Mode::FdpcHd => "fdpc_hd",
            Mode::FdpcFd => "fdpc_fd",
        }
    }

    pub fn full_duplex(self) -> bool {
        matches!(self, Mode::AbjhpcSmmse | Mode::AbjhpcSvd | Mode::FdpcFd)
    }

    pub fn hybrid(self) -> bool {
        !matches!(self, Mode::FdpcHd | Mode::FdpcFd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    #[default]
    Strict,
    Literal,
}

impl From<Rule> for SelectionRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Strict => SelectionRule::Strict,
            Rule::Literal => SelectionRule::Literal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            rows: 16,
            cols: 16,
            spacing: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpreadConfig {
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    #[serde(default = "ten")]
    pub elevation_spread_deg: f64,
    #[serde(default = "ten")]
    pub azimuth_spread_deg: f64,
}

fn ten() -> f64 {
    10.0
}

impl SpreadConfig {
    fn new(elevation_deg: f64, azimuth_deg: f64) -> Self {
        Self {
            elevation_deg,
            azimuth_deg,
            elevation_spread_deg: 10.0,
            azimuth_spread_deg: 10.0,
        }
    }

    fn to_model(self) -> AngleSpread<f64> {
        AngleSpread::new(
            self.elevation_deg,
            self.azimuth_deg,
            self.elevation_spread_deg,
            self.azimuth_spread_deg,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub departure: SpreadConfig,
    pub arrival: SpreadConfig,
    pub paths: usize,
    pub distance_m: [f64; 2],
}

impl ClusterConfig {
    pub fn to_model(self) -> ClusterSpec<f64> {
        ClusterSpec {
            departure: self.departure.to_model(),
            arrival: self.arrival.to_model(),
            paths: self.paths,
            distance: (self.distance_m[0], self.distance_m[1]),
        }
    }
}

/// One node. `intended` clusters describe the channel from this node to the
/// other one; `self_interference` the reflected path back into itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    #[serde(default)]
    pub tx_array: ArrayConfig,
    #[serde(default)]
    pub rx_array: ArrayConfig,
    pub intended: Vec<ClusterConfig>,
    pub self_interference: Vec<ClusterConfig>,
}

impl NodeConfig {
    fn table(tx_azimuth: f64, remote_rx_azimuth: f64) -> Self {
        Self {
            tx_array: ArrayConfig::default(),
            rx_array: ArrayConfig::default(),
            intended: vec![ClusterConfig {
                departure: SpreadConfig::new(40.0, tx_azimuth),
                arrival: SpreadConfig::new(40.0, remote_rx_azimuth),
                paths: 20,
                distance_m: [35.0, 50.0],
            }],
            self_interference: vec![ClusterConfig {
                departure: SpreadConfig::new(40.0, 150.0),
                arrival: SpreadConfig::new(40.0, 75.0),
                paths: 20,
                distance_m: [5.0, 15.0],
            }],
        }
    }

    pub fn intended_clusters(&self) -> Vec<ClusterSpec<f64>> {
        self.intended.iter().map(|c| c.to_model()).collect()
    }

    pub fn si_clusters(&self) -> Vec<ClusterSpec<f64>> {
        self.self_interference
            .iter()
            .map(|c| c.to_model())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub psd_dbm_per_hz: f64,
    pub bandwidth_hz: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            psd_dbm_per_hz: -174.0,
            bandwidth_hz: 10e6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardwareConfig {
    pub p_rf_w: f64,
    pub p_ps_w: f64,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        Self {
            p_rf_w: 0.25,
            p_ps_w: 0.001,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementConfig {
    pub d1: f64,
    pub d2: f64,
    pub theta_rot_deg: f64,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        let p = DuplexPlacement::<f64>::default();
        Self {
            d1: p.d1,
            d2: p.d2,
            theta_rot_deg: p.theta_rot,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub master_seed: u64,
    pub realizations: usize,
    pub mode: Mode,
    pub transfer_block: bool,
    pub imperfect_angles: bool,
    pub selection_rule: Rule,
    pub p_t_dbm: f64,
    pub p_is_db: f64,
    pub path_loss_exponent: f64,
    /// Streams sent by node 1 and node 2.
    pub streams: [usize; 2],
    /// Synthetic SI path count used by the semi-blind covariance estimate.
    pub si_estimate_paths: usize,
    /// Assumed SI path distance for the same estimate.
    pub si_estimate_distance_m: f64,
    pub noise: NoiseConfig,
    pub hardware: HardwareConfig,
    pub placement: PlacementConfig,
    pub nodes: [NodeConfig; 2],
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            master_seed: 1,
            realizations: 2000,
            mode: Mode::default(),
            transfer_block: false,
            imperfect_angles: false,
            selection_rule: Rule::default(),
            p_t_dbm: 30.0,
            p_is_db: 0.0,
            path_loss_exponent: 3.76,
            streams: [4, 4],
            si_estimate_paths: 100,
            si_estimate_distance_m: 10.0,
            noise: NoiseConfig::default(),
            hardware: HardwareConfig::default(),
            placement: PlacementConfig::default(),
            nodes: [
                NodeConfig::table(315.0, 245.0),
                NodeConfig::table(355.0, 205.0),
            ],
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> SimResult<Self> {
        let cfg: SimConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> SimResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn p_t_mw(&self) -> f64 {
        10f64.powf(self.p_t_dbm / 10.0)
    }

    pub fn noise_model(&self) -> NoiseModel<f64> {
        NoiseModel {
            psd_dbm_per_hz: self.noise.psd_dbm_per_hz,
            bandwidth_hz: self.noise.bandwidth_hz,
        }
    }

    pub fn placement_model(&self) -> DuplexPlacement<f64> {
        DuplexPlacement {
            d1: self.placement.d1,
            d2: self.placement.d2,
            theta_rot: self.placement.theta_rot_deg,
        }
    }

    /// Sets every array of both nodes to `n x n`.
    pub fn set_square_arrays(&mut self, n: usize) {
        for node in &mut self.nodes {
            for a in [&mut node.tx_array, &mut node.rx_array] {
                a.rows = n;
                a.cols = n;
            }
        }
    }

    pub fn validate(&self) -> SimResult<()> {
        let finite = |field: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(config_err(field, "must be finite"))
            }
        };
        finite("p_t_dbm", self.p_t_dbm)?;
        finite("p_is_db", self.p_is_db)?;
        finite("path_loss_exponent", self.path_loss_exponent)?;
        finite("noise.psd_dbm_per_hz", self.noise.psd_dbm_per_hz)?;
        if !(self.noise.bandwidth_hz > 0.0 && self.noise.bandwidth_hz.is_finite()) {
            return Err(config_err("noise.bandwidth_hz", "must be positive"));
        }
        if self.path_loss_exponent < 0.0 {
            return Err(config_err("path_loss_exponent", "must be nonnegative"));
        }
        for (i, s) in self.streams.iter().enumerate() {
            if *s == 0 {
                return Err(config_err(format!("streams[{i}]"), "must be at least 1"));
            }
        }
        if self.si_estimate_paths == 0 {
            return Err(config_err("si_estimate_paths", "must be at least 1"));
        }
        if !(self.si_estimate_distance_m > 0.0 && self.si_estimate_distance_m.is_finite()) {
            return Err(config_err("si_estimate_distance_m", "must be positive"));
        }
        for (name, x) in [
            ("hardware.p_rf_w", self.hardware.p_rf_w),
            ("hardware.p_ps_w", self.hardware.p_ps_w),
        ] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(config_err(name, "must be nonnegative"));
            }
        }
        if self.placement.d1 < 0.0 || self.placement.d2 < 0.0 {
            return Err(config_err("placement", "offsets must be nonnegative"));
        }
        finite("placement.theta_rot_deg", self.placement.theta_rot_deg)?;
        for (i, node) in self.nodes.iter().enumerate() {
            for (side, a) in [("tx_array", &node.tx_array), ("rx_array", &node.rx_array)] {
                UraGeometry::new(a.rows, a.cols, a.spacing)
                    .map_err(|e| config_err(format!("nodes[{i}].{side}"), e.to_string()))?;
            }
            for (list, clusters) in [
                ("intended", &node.intended),
                ("self_interference", &node.self_interference),
            ] {
                if clusters.is_empty() {
                    return Err(config_err(
                        format!("nodes[{i}].{list}"),
                        "needs at least one cluster",
                    ));
                }
                for (c, cl) in clusters.iter().enumerate() {
                    cl.to_model().validate().map_err(|e| {
                        config_err(format!("nodes[{i}].{list}[{c}]"), e.to_string())
                    })?;
                }
            }
        }
        Ok(())
    }

    pub(crate) fn geometry(a: &ArrayConfig) -> SimResult<UraGeometry<f64>> {
        Ok(UraGeometry::new(a.rows, a.cols, a.spacing)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_table() {
        let c = SimConfig::default();
        c.validate().unwrap();
        assert_eq!(c.realizations, 2000);
        assert_eq!(c.streams, [4, 4]);
        assert!((c.noise_model().noise_dbm() + 104.0).abs() < 1e-9);
        assert_eq!(c.nodes[0].intended[0].departure.azimuth_deg, 315.0);
        assert_eq!(c.nodes[1].intended[0].arrival.azimuth_deg, 205.0);
        assert_eq!(c.nodes[1].self_interference[0].arrival.azimuth_deg, 75.0);
    }

    #[test]
    fn toml_round_trip() {
        let c = SimConfig::default();
        let back = SimConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = SimConfig::from_toml_str(
            "p_is_db = 60.0\nmode = \"abjhpc_svd\"\n[noise]\nbandwidth_hz = 2e7\n",
        )
        .unwrap();
        assert_eq!(c.p_is_db, 60.0);
        assert_eq!(c.mode, Mode::AbjhpcSvd);
        assert_eq!(c.noise.psd_dbm_per_hz, -174.0);
        assert_eq!(c.nodes, SimConfig::default().nodes);
    }

    #[test]
    fn errors_name_the_field() {
        let e = SimConfig::from_toml_str("streams = [4, 0]").unwrap_err();
        assert!(e.to_string().contains("streams[1]"), "{e}");
        let e = SimConfig::from_toml_str("bogus = 1").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        let mut c = SimConfig::default();
        c.nodes[1].self_interference[0].departure.elevation_deg = 120.0;
        let e = c.validate().unwrap_err();
        assert!(
            e.to_string().contains("nodes[1].self_interference[0]"),
            "{e}"
        );
    }
}
