//! One Monte Carlo realization: channels for both directions, RF and
//! baseband design for the configured mode, and every reported metric.

use fdhbf::array::UraGeometry;
use fdhbf::baseband::{
    estimate_si_covariance, normalize_combiner_rows, smmse_combiner, svd_design_from, BbCombiner,
};
use fdhbf::channel::{
    arrival_support, departure_support, far_field_si_channel, geometric_factors,
    near_field_si_channel, sample_paths, ClusterSpec,
};
use fdhbf::linalg::Svd;
use fdhbf::metrics::{
    achievable_rate_factored, energy_efficiency, hardware_budget, interference_noise_factor,
    per_stream_powers, Architecture, NodeDims, StreamPowers,
};
use fdhbf::rf::{build_rf_beamformers, identity_beamformers, perturb_support, RfBeamformerPair};
use fdhbf::support::AngularSupport;
use fdhbf::transfer::{decompose_combiner, decompose_precoder};
use fdhbf::CMat64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Mode, SimConfig};
use crate::error::SimResult;

/// Stable 64-bit mix of the master seed and the realization index.
pub fn realization_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationOutput {
    pub seed: u64,
    pub metrics: Vec<Metric>,
}

impl RealizationOutput {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics
            .iter()
            .find(|m| m.name == name)
            .map(|m| m.value)
    }
}

#[derive(Debug)]
pub struct RealizationFailure {
    pub seed: u64,
    pub error: fdhbf::Error,
}

/// Angular supports of one node, from the true cluster statistics.
#[derive(Debug, Clone)]
pub struct NodeSupports {
    /// Departure of this node's intended channel.
    pub tx_cover: AngularSupport<f64>,
    /// Arrival of the remote node's intended channel.
    pub rx_cover: AngularSupport<f64>,
    pub si_aod: AngularSupport<f64>,
    pub si_aoa: AngularSupport<f64>,
}

/// Everything that does not depend on the realization index.
#[derive(Debug, Clone)]
pub struct Prepared {
    cfg: SimConfig,
    tx: [UraGeometry<f64>; 2],
    rx: [UraGeometry<f64>; 2],
    intended: [Vec<ClusterSpec<f64>>; 2],
    si: [Vec<ClusterSpec<f64>>; 2],
    near: [CMat64; 2],
    supports: [NodeSupports; 2],
    /// RF design from true supports; reused unless angles are perturbed.
    rf: Option<[RfBeamformerPair<f64>; 2]>,
    noise_var: f64,
    p_t: f64,
}

impl Prepared {
    pub fn new(cfg: &SimConfig) -> SimResult<Self> {
        cfg.validate()?;
        let geom = |i: usize| -> SimResult<(UraGeometry<f64>, UraGeometry<f64>)> {
            Ok((
                SimConfig::geometry(&cfg.nodes[i].tx_array)?,
                SimConfig::geometry(&cfg.nodes[i].rx_array)?,
            ))
        };
        let (t0, r0) = geom(0)?;
        let (t1, r1) = geom(1)?;
        let intended = [
            cfg.nodes[0].intended_clusters(),
            cfg.nodes[1].intended_clusters(),
        ];
        let si = [cfg.nodes[0].si_clusters(), cfg.nodes[1].si_clusters()];
        let placement = cfg.placement_model();
        let near = [
            near_field_si_channel(&t0, &r0, &placement, cfg.p_is_db)?.matrix,
            near_field_si_channel(&t1, &r1, &placement, cfg.p_is_db)?.matrix,
        ];
        let supports = [0, 1].map(|i| NodeSupports {
            tx_cover: departure_support(&intended[i]),
            rx_cover: arrival_support(&intended[1 - i]),
            si_aod: departure_support(&si[i]),
            si_aoa: arrival_support(&si[i]),
        });
        let mut p = Self {
            cfg: cfg.clone(),
            tx: [t0, t1],
            rx: [r0, r1],
            intended,
            si,
            near,
            supports,
            rf: None,
            noise_var: cfg.noise_model().noise_var_mw(),
            p_t: cfg.p_t_mw(),
        };
        if cfg.mode.hybrid() && !cfg.imperfect_angles {
            // infeasible selection is reported per realization, not here
            if let Ok(a) = p.design_rf(0, &p.supports[0]) {
                if let Ok(b) = p.design_rf(1, &p.supports[1]) {
                    p.rf = Some([a, b]);
                }
            }
        }
        Ok(p)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// True supports of `node` (0 or 1).
    pub fn supports(&self, node: usize) -> &NodeSupports {
        &self.supports[node]
    }

    pub fn arrays(&self, node: usize) -> (&UraGeometry<f64>, &UraGeometry<f64>) {
        (&self.tx[node], &self.rx[node])
    }

    /// Whether RF selection avoids the SI supports in this mode.
    pub fn excludes_si(&self) -> bool {
        self.cfg.mode != Mode::AbhpcHd
    }

    fn design_rf(&self, node: usize, s: &NodeSupports) -> fdhbf::Result<RfBeamformerPair<f64>> {
        let empty = AngularSupport::empty();
        let (ex_t, ex_r) = if self.excludes_si() {
            (&s.si_aod, &s.si_aoa)
        } else {
            (&empty, &empty)
        };
        build_rf_beamformers(
            &self.tx[node],
            &self.rx[node],
            &s.tx_cover,
            &s.rx_cover,
            ex_t,
            ex_r,
            self.cfg.selection_rule.into(),
        )
    }

    /// RF beamformers for a node, selected from the true supports.
    pub fn rf_design(&self, node: usize) -> fdhbf::Result<RfBeamformerPair<f64>> {
        self.design_rf(node, &self.supports[node])
    }

    pub fn run(&self, index: u64) -> Result<RealizationOutput, RealizationFailure> {
        let seed = realization_seed(self.cfg.master_seed, index);
        self.run_seeded(seed)
            .map(|metrics| RealizationOutput { seed, metrics })
            .map_err(|error| RealizationFailure { seed, error })
    }

    fn run_seeded(&self, seed: u64) -> fdhbf::Result<Vec<Metric>> {
        let cfg = &self.cfg;
        let eta = cfg.path_loss_exponent;
        let mode = cfg.mode;
        // channels and design randomness on separate streams so that every
        // mode and sweep point sees the same channels for a given index
        let mut ch_rng = ChaCha8Rng::seed_from_u64(seed);
        let mut design_rng = ChaCha8Rng::seed_from_u64(seed);
        design_rng.set_stream(1);

        let mut h = Vec::with_capacity(2);
        let mut factors = Vec::with_capacity(2);
        let mut nlos = Vec::with_capacity(2);
        for i in 0..2 {
            let paths = sample_paths(&self.intended[i], &mut ch_rng)?;
            let (left, right) = geometric_factors(&self.tx[i], &self.rx[1 - i], &paths, eta)?;
            h.push(&left * &right);
            factors.push((left, right));
            let si_paths = sample_paths(&self.si[i], &mut ch_rng)?;
            nlos.push(far_field_si_channel(&self.tx[i], &self.rx[i], &si_paths, eta)?.matrix);
        }
        let h_si: Vec<CMat64> = (0..2).map(|i| &self.near[i] + &nlos[i]).collect();

        // design-side supports
        let design: [NodeSupports; 2] = if cfg.imperfect_angles {
            let mut out = Vec::with_capacity(2);
            for i in 0..2 {
                let s = &self.supports[i];
                out.push(NodeSupports {
                    tx_cover: perturb_support(&s.tx_cover, &self.tx[i], &mut design_rng),
                    rx_cover: perturb_support(&s.rx_cover, &self.rx[i], &mut design_rng),
                    si_aod: perturb_support(&s.si_aod, &self.tx[i], &mut design_rng),
                    si_aoa: perturb_support(&s.si_aoa, &self.rx[i], &mut design_rng),
                });
            }
            let b = out.pop().unwrap();
            let a = out.pop().unwrap();
            [a, b]
        } else {
            self.supports.clone()
        };

        let rf: [RfBeamformerPair<f64>; 2] = if !mode.hybrid() {
            [0, 1].map(|i| identity_beamformers(&self.tx[i], &self.rx[i]))
        } else if let (Some(rf), false) = (&self.rf, cfg.imperfect_angles) {
            rf.clone()
        } else {
            [
                self.design_rf(0, &design[0])?,
                self.design_rf(1, &design[1])?,
            ]
        };
        let hybrid = mode.hybrid();
        let reduce = |f_r: &CMat64, m: &CMat64, f_t: &CMat64| -> CMat64 {
            if hybrid {
                f_r * (m * f_t)
            } else {
                m.clone()
            }
        };
        // eff[i]: node i -> node 1-i; eff_si[i]: node i into itself
        let eff: Vec<CMat64> = (0..2)
            .map(|i| reduce(&rf[1 - i].f_r, &h[i], &rf[i].f_t))
            .collect();
        let eff_si: Vec<CMat64> = (0..2)
            .map(|i| reduce(&rf[i].f_r, &h_si[i], &rf[i].f_t))
            .collect();

        let n_t = [rf[0].f_t.ncols(), rf[1].f_t.ncols()];
        let n_r = [rf[0].f_r.nrows(), rf[1].f_r.nrows()];
        let streams = [0, 1].map(|i| cfg.streams[i].min(n_t[i]).min(n_r[1 - i]));
        let clamped = streams != cfg.streams;

        let mut b_t = Vec::with_capacity(2);
        let mut svd_comb = Vec::with_capacity(2);
        for i in 0..2 {
            // fully digital: eff = H has rank <= L, factor it cheaply
            let svd = if hybrid {
                Svd::new(&eff[i])?
            } else {
                Svd::of_product(&factors[i].0, &factors[i].1)?
            };
            let (p, c) = svd_design_from(&svd, self.p_t, self.noise_var, streams[i])?;
            b_t.push(p.b_t);
            svd_comb.push(c);
        }
        // b_r[j] combines the streams sent by node 1-j
        let mut b_r: Vec<CMat64> = Vec::with_capacity(2);
        for j in 0..2 {
            let i = 1 - j;
            let comb: BbCombiner<f64> = if mode == Mode::AbjhpcSmmse {
                let w = estimate_si_covariance(
                    &rf[j].f_t,
                    &rf[j].f_r,
                    &b_t[j],
                    &self.tx[j],
                    &self.rx[j],
                    &design[j].si_aod,
                    &design[j].si_aoa,
                    cfg.si_estimate_paths,
                    cfg.si_estimate_distance_m,
                    eta,
                    &mut design_rng,
                )?;
                smmse_combiner(&eff[i], &b_t[i], &w.w_hat, self.noise_var)?
            } else {
                svd_comb[i].clone()
            };
            b_r.push(normalize_combiner_rows(&comb.b_r)?);
        }

        let full_duplex = mode.full_duplex();
        let rate_into = |j: usize, b_t: &[CMat64], b_r: &CMat64| -> fdhbf::Result<f64> {
            let i = 1 - j;
            let si = full_duplex.then_some((&eff_si[j], &b_t[j]));
            let f = interference_noise_factor(b_r, si, &rf[j].f_r, self.noise_var)?;
            achievable_rate_factored(&eff[i], &b_t[i], b_r, &f)
        };
        let mut rates = [rate_into(0, &b_t, &b_r[0])?, rate_into(1, &b_t, &b_r[1])?];

        let mut out = Vec::with_capacity(64);
        let mut push = |name: &'static str, value: f64| out.push(Metric { name, value });

        if cfg.transfer_block && hybrid {
            let mut b_t_tb = Vec::with_capacity(2);
            let mut b_r_tb = Vec::with_capacity(2);
            for i in 0..2 {
                let d = decompose_precoder(&b_t[i])?;
                b_t_tb.push(&d.t * &d.b_red);
                let d = decompose_combiner(&b_r[i])?;
                b_r_tb.push(&d.b_red * &d.t);
            }
            let tb = [
                rate_into(0, &b_t_tb, &b_r_tb[0])?,
                rate_into(1, &b_t_tb, &b_r_tb[1])?,
            ];
            push(
                "transfer_rate_gap",
                (tb[0] - rates[0]).abs().max((tb[1] - rates[1]).abs()),
            );
            rates = tb;
        }

        let rate_total = if full_duplex {
            rates[0] + rates[1]
        } else {
            0.5 * (rates[0] + rates[1])
        };
        push("rate_node1", rates[0]);
        push("rate_node2", rates[1]);
        push("rate_total", rate_total);
        push("streams_node1", streams[0] as f64);
        push("streams_node2", streams[1] as f64);
        push("stream_clamped", if clamped { 1.0 } else { 0.0 });
        push("beams_tx_node1", n_t[0] as f64);
        push("beams_rx_node1", n_r[0] as f64);
        push("beams_tx_node2", n_t[1] as f64);
        push("beams_rx_node2", n_r[1] as f64);

        let dims = [0, 1].map(|i| NodeDims {
            m_t: self.tx[i].len(),
            m_r: self.rx[i].len(),
            n_t: n_t[i],
            n_r: n_r[i],
            s_tx: streams[i],
            s_rx: streams[1 - i],
        });
        let p_t_w = self.p_t / 1000.0;
        let hw = |arch| hardware_budget(arch, &dims, cfg.hardware.p_rf_w, cfg.hardware.p_ps_w);
        let arch = match mode {
            Mode::FdpcHd | Mode::FdpcFd => Architecture::Fdpc,
            Mode::AbjhpcSmmse | Mode::AbjhpcSvd if cfg.transfer_block => {
                Architecture::AbjhpcTransfer
            }
            _ => Architecture::AbjhpcPlain,
        };
        let budget = hw(arch);
        push("n_rf", budget.n_rf as f64);
        push("n_ps", budget.n_ps as f64);
        push(
            "energy_efficiency",
            energy_efficiency(rate_total, p_t_w, &budget)?,
        );
        if matches!(mode, Mode::AbjhpcSmmse | Mode::AbjhpcSvd) {
            let plain = hw(Architecture::AbjhpcPlain);
            let tb = hw(Architecture::AbjhpcTransfer);
            push("n_rf_plain", plain.n_rf as f64);
            push("n_rf_transfer", tb.n_rf as f64);
            push("ee_plain", energy_efficiency(rate_total, p_t_w, &plain)?);
            push("ee_transfer", energy_efficiency(rate_total, p_t_w, &tb)?);
        }

        // stream-level powers at node 2 for the stream sent by node 1
        let powers: Vec<StreamPowers<f64>> = per_stream_powers(
            &eff[0],
            &eff_si[1],
            &b_t[0],
            &b_t[1],
            &b_r[1],
            self.noise_var,
        )?;
        let first = powers[0];
        let h1 = h[0].norm_squared();
        let hsi2 = h_si[1].norm_squared();
        push("s1_intended_mw", first.intended);
        push("s1_isi_mw", first.isi);
        push("s1_noise_mw", first.noise);
        push(
            "intended_streams_mw",
            powers.iter().map(|p| p.intended).sum(),
        );
        if full_duplex {
            push("s1_si_mw", first.si);
            push("si_streams_mw", powers.iter().map(|p| p.si).sum());
            push("sic_total_db", 10.0 * (self.p_t / first.si).log10());
            push(
                "sic_channel_db",
                10.0 * (self.p_t * hsi2 / first.si).log10(),
            );
        }
        push("ref_intended_stream_mw", self.p_t / streams[0] as f64 * h1);
        push("ref_intended_total_mw", self.p_t * h1);
        push("ref_si_mw", self.p_t * hsi2);

        if hybrid {
            let (f_t, f_r) = (&rf[1].f_t, &rf[1].f_r);
            let mut four = |m: &CMat64, names: [&'static str; 4]| {
                let tx = m * f_t;
                push(names[0], m.norm_squared());
                push(names[1], tx.norm_squared());
                push(names[2], (f_r * m).norm_squared());
                push(names[3], (f_r * tx).norm_squared());
            };
            four(
                &nlos[1],
                ["si_nlos_none", "si_nlos_tx", "si_nlos_rx", "si_nlos_joint"],
            );
            four(
                &self.near[1],
                ["si_los_none", "si_los_tx", "si_los_rx", "si_los_joint"],
            );
            four(
                &h_si[1],
                [
                    "si_total_none",
                    "si_total_tx",
                    "si_total_rx",
                    "si_total_joint",
                ],
            );
            push("intended_before", h1);
            push("intended_after", eff[0].norm_squared());
        }
        Ok(out)
    }
}

/// Convenience wrapper that prepares the configuration for a single index.
pub fn run_realization(
    cfg: &SimConfig,
    index: u64,
) -> SimResult<Result<RealizationOutput, RealizationFailure>> {
    Ok(Prepared::new(cfg)?.run(index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SpreadConfig;

    fn small(mode: Mode) -> SimConfig {
        let mut c = SimConfig::default();
        c.set_square_arrays(8);
        c.mode = mode;
        c
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..1000).map(|i| realization_seed(7, i)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 1000);
        assert_eq!(realization_seed(7, 3), a[3]);
        assert_ne!(realization_seed(8, 3), a[3]);
    }

    #[test]
    fn table_defaults_select_figure_beams() {
        let p = Prepared::new(&SimConfig::default()).unwrap();
        let rf = p.rf_design(0).unwrap();
        assert_eq!((rf.n_t(), rf.n_r()), (11, 8));
        let rf2 = p.rf_design(1).unwrap();
        assert_eq!(rf2.n_t() + rf2.n_r(), 20);
    }

    #[test]
    fn same_index_same_metrics() {
        let cfg = small(Mode::AbjhpcSmmse);
        let p = Prepared::new(&cfg).unwrap();
        let a = p.run(5).unwrap();
        let b = p.run(5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, p.run(6).unwrap());
    }

    #[test]
    fn every_mode_runs() {
        for mode in Mode::ALL {
            let mut cfg = small(mode);
            cfg.transfer_block = true;
            let out = Prepared::new(&cfg).unwrap().run(0).unwrap();
            let r = out.get("rate_total").unwrap();
            assert!(r.is_finite() && r > 0.0, "{mode:?}: {r}");
            assert_eq!(out.get("s1_si_mw").is_some(), mode.full_duplex());
            assert_eq!(out.get("si_nlos_joint").is_some(), mode.hybrid());
            if mode.hybrid() {
                let gap = out.get("transfer_rate_gap").unwrap();
                assert!(gap < 1e-9, "{mode:?} gap {gap:e} rate {r}");
            }
        }
    }

    #[test]
    fn channels_shared_across_modes() {
        let a = Prepared::new(&small(Mode::AbjhpcSmmse))
            .unwrap()
            .run(2)
            .unwrap();
        let b = Prepared::new(&small(Mode::AbjhpcSvd))
            .unwrap()
            .run(2)
            .unwrap();
        assert_eq!(a.get("ref_si_mw"), b.get("ref_si_mw"));
        assert_eq!(a.get("si_nlos_joint"), b.get("si_nlos_joint"));
    }

    #[test]
    fn overlapping_supports_fail_cleanly() {
        let mut cfg = small(Mode::AbjhpcSmmse);
        for node in &mut cfg.nodes {
            let d = node.intended[0].departure;
            node.self_interference[0].departure = SpreadConfig {
                elevation_spread_deg: 30.0,
                azimuth_spread_deg: 40.0,
                ..d
            };
        }
        let err = Prepared::new(&cfg).unwrap().run(0).unwrap_err();
        assert!(
            matches!(err.error, fdhbf::Error::NoFeasibleBeams),
            "{:?}",
            err.error
        );
    }

    #[test]
    fn hd_rate_is_half_sum() {
        let out = Prepared::new(&small(Mode::AbhpcHd))
            .unwrap()
            .run(1)
            .unwrap();
        let (r1, r2, t) = (
            out.get("rate_node1").unwrap(),
            out.get("rate_node2").unwrap(),
            out.get("rate_total").unwrap(),
        );
        assert!((t - 0.5 * (r1 + r2)).abs() < 1e-12);
    }

    #[test]
    fn streams_clamped_to_selection() {
        let mut cfg = small(Mode::AbjhpcSvd);
        cfg.streams = [40, 1];
        let out = Prepared::new(&cfg).unwrap().run(0).unwrap();
        assert_eq!(out.get("stream_clamped"), Some(1.0));
        let s = out.get("streams_node1").unwrap();
        assert!(s <= out.get("beams_tx_node1").unwrap() && s <= out.get("beams_rx_node2").unwrap());
        assert_eq!(out.get("streams_node2"), Some(1.0));
    }

    #[test]
    fn imperfect_angles_change_design_not_channels() {
        let mut cfg = small(Mode::AbjhpcSmmse);
        let a = Prepared::new(&cfg).unwrap().run(4).unwrap();
        cfg.imperfect_angles = true;
        let b = Prepared::new(&cfg).unwrap().run(4).unwrap();
        assert_eq!(
            a.get("ref_intended_total_mw"),
            b.get("ref_intended_total_mw")
        );
        assert_eq!(a.get("si_nlos_none"), b.get("si_nlos_none"));
    }
}
