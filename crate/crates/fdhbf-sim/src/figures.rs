//! Sweep plans behind each figure-style experiment.

use std::fmt;
use std::str::FromStr;

use crate::config::{Mode, SimConfig};
use crate::error::SimError;
use crate::sweep::{Sweep, SweepParam};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureKind {
    /// SI channel power with no, transmit-only, receive-only and joint RF
    /// beamforming versus antenna isolation.
    SicRf,
    /// First-stream signal, SI and noise power versus antenna isolation.
    SicStream,
    /// Same powers versus square array size.
    SicArray,
    /// Total rate versus transmit power, full duplex against half duplex.
    Rate,
    /// Full/half-duplex ratio inputs over array size and stream count.
    GainRatio,
    /// Energy efficiency versus transmit power and versus isolation.
    Energy,
    /// Rate with perfect and perturbed angular supports.
    AngleError,
}

impl FigureKind {
    pub const ALL: [FigureKind; 7] = [
        FigureKind::SicRf,
        FigureKind::SicStream,
        FigureKind::SicArray,
        FigureKind::Rate,
        FigureKind::GainRatio,
        FigureKind::Energy,
        FigureKind::AngleError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureKind::SicRf => "sic-rf",
            FigureKind::SicStream => "sic-stream",
            FigureKind::SicArray => "sic-array",
            FigureKind::Rate => "rate",
            FigureKind::GainRatio => "gain-ratio",
            FigureKind::Energy => "energy",
            FigureKind::AngleError => "angle-error",
        }
    }
}

impl fmt::Display for FigureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| SimError::UnknownParameter(s.to_string()))
    }
}

pub const ISOLATION_DB: [f64; 13] = [
    0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0, 110.0, 120.0,
];
pub const TRANSMIT_DBM: [f64; 9] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0];
pub const ARRAY_SIZES: [f64; 7] = [64.0, 144.0, 256.0, 400.0, 576.0, 784.0, 1024.0];
pub const RATE_ISOLATION_DB: [f64; 4] = [40.0, 60.0, 80.0, 100.0];

fn with_mode(base: &SimConfig, mode: Mode) -> SimConfig {
    SimConfig {
        mode,
        ..base.clone()
    }
}

fn id(mode: Mode, tag: &str) -> String {
    if tag.is_empty() {
        mode.as_str().to_string()
    } else {
        format!("{}@{tag}", mode.as_str())
    }
}

/// Sweeps for `kind`, starting from `base` (realizations, seed, geometry
/// and everything not on the x-axis come from it).
pub fn figure_sweeps(kind: FigureKind, base: &SimConfig) -> Vec<Sweep> {
    let both = [Mode::AbjhpcSmmse, Mode::AbjhpcSvd];
    match kind {
        FigureKind::SicRf => vec![Sweep::new(
            id(Mode::AbjhpcSmmse, ""),
            with_mode(base, Mode::AbjhpcSmmse),
            SweepParam::PIsDb,
            ISOLATION_DB.to_vec(),
        )],
        FigureKind::SicStream => both
            .iter()
            .map(|&m| {
                Sweep::new(
                    id(m, ""),
                    with_mode(base, m),
                    SweepParam::PIsDb,
                    ISOLATION_DB.to_vec(),
                )
            })
            .collect(),
        FigureKind::SicArray => both
            .iter()
            .map(|&m| {
                let cfg = SimConfig {
                    p_is_db: 60.0,
                    ..with_mode(base, m)
                };
                Sweep::new(
                    id(m, "pis60"),
                    cfg,
                    SweepParam::ArraySize,
                    ARRAY_SIZES.to_vec(),
                )
            })
            .collect(),
        FigureKind::Rate => {
            let mut out = Vec::new();
            for p_is in RATE_ISOLATION_DB {
                for m in both {
                    let cfg = SimConfig {
                        p_is_db: p_is,
                        ..with_mode(base, m)
                    };
                    out.push(Sweep::new(
                        id(m, &format!("pis{p_is}")),
                        cfg,
                        SweepParam::PTdBm,
                        TRANSMIT_DBM.to_vec(),
                    ));
                }
            }
            for m in [Mode::AbhpcHd, Mode::FdpcHd] {
                out.push(Sweep::new(
                    id(m, ""),
                    with_mode(base, m),
                    SweepParam::PTdBm,
                    TRANSMIT_DBM.to_vec(),
                ));
            }
            out
        }
        FigureKind::GainRatio => {
            let mut out = Vec::new();
            for s in 1..=6usize {
                for m in [Mode::AbjhpcSmmse, Mode::AbjhpcSvd, Mode::AbhpcHd] {
                    let cfg = SimConfig {
                        p_t_dbm: 30.0,
                        p_is_db: 74.0,
                        streams: [s, s],
                        ..with_mode(base, m)
                    };
                    out.push(Sweep::new(
                        id(m, &format!("s{s}")),
                        cfg,
                        SweepParam::ArraySize,
                        ARRAY_SIZES.to_vec(),
                    ));
                }
            }
            out
        }
        FigureKind::Energy => {
            let mut out = Vec::new();
            for m in [Mode::AbjhpcSmmse, Mode::AbhpcHd, Mode::FdpcHd] {
                let cfg = SimConfig {
                    transfer_block: m == Mode::AbjhpcSmmse,
                    ..with_mode(base, m)
                };
                out.push(Sweep::new(
                    id(m, "pis60"),
                    SimConfig {
                        p_is_db: 60.0,
                        ..cfg.clone()
                    },
                    SweepParam::PTdBm,
                    TRANSMIT_DBM.to_vec(),
                ));
                out.push(Sweep::new(
                    id(m, "pt30"),
                    SimConfig {
                        p_t_dbm: 30.0,
                        ..cfg
                    },
                    SweepParam::PIsDb,
                    ISOLATION_DB.to_vec(),
                ));
            }
            out
        }
        FigureKind::AngleError => [false, true]
            .iter()
            .map(|&imperfect| {
                let cfg = SimConfig {
                    p_is_db: 74.0,
                    imperfect_angles: imperfect,
                    ..with_mode(base, Mode::AbjhpcSmmse)
                };
                let tag = if imperfect { "imperfect" } else { "perfect" };
                Sweep::new(
                    id(Mode::AbjhpcSmmse, tag),
                    cfg,
                    SweepParam::PTdBm,
                    TRANSMIT_DBM.to_vec(),
                )
            })
            .collect(),
    }
}
