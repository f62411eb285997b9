//! Grid, support and selected-beam dump for inspecting the RF stage.

use std::path::Path;

use fdhbf::array::{AnglePair, UraGeometry};
use fdhbf::rf::select_angle_pairs;
use fdhbf::support::AngularSupport;

use crate::config::SimConfig;
use crate::error::{SimError, SimResult};
use crate::realization::Prepared;

/// One grid beam of one array.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamRow {
    /// 1 or 2.
    pub node: usize,
    pub side: &'static str,
    pub k: usize,
    pub n: usize,
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub cover: bool,
    pub exclude: bool,
    pub selected: bool,
}

/// A vertex of a support rectangle outline in coefficient space.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlinePoint {
    pub node: usize,
    pub side: &'static str,
    /// `intended` or `si`.
    pub role: &'static str,
    pub rect: usize,
    pub point: usize,
    pub gamma_x: f64,
    pub gamma_y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamReport {
    pub beams: Vec<BeamRow>,
    pub outlines: Vec<OutlinePoint>,
    /// Selected (transmit, receive) beam counts per node.
    pub counts: [(usize, usize); 2],
}

const EDGE_SAMPLES: usize = 16;

fn outline(
    support: &AngularSupport<f64>,
    node: usize,
    side: &'static str,
    role: &'static str,
) -> Vec<OutlinePoint> {
    let mut out = Vec::new();
    for (ri, r) in support.rects.iter().enumerate() {
        let (e0, e1) = r.elevation;
        let (a0, a1) = r.azimuth;
        let lerp = |a: f64, b: f64, t: usize| a + (b - a) * t as f64 / EDGE_SAMPLES as f64;
        let mut pts = Vec::with_capacity(4 * EDGE_SAMPLES + 1);
        for t in 0..EDGE_SAMPLES {
            pts.push((e0, lerp(a0, a1, t)));
        }
        for t in 0..EDGE_SAMPLES {
            pts.push((lerp(e0, e1, t), a1));
        }
        for t in 0..EDGE_SAMPLES {
            pts.push((e1, lerp(a1, a0, t)));
        }
        for t in 0..=EDGE_SAMPLES {
            pts.push((lerp(e1, e0, t), a0));
        }
        for (pi, (theta, psi)) in pts.into_iter().enumerate() {
            let p = AnglePair::from_degrees(theta, psi);
            out.push(OutlinePoint {
                node,
                side,
                role,
                rect: ri,
                point: pi,
                gamma_x: p.gamma_x + r.shift.gamma_x,
                gamma_y: p.gamma_y + r.shift.gamma_y,
            });
        }
    }
    out
}

fn side_rows(
    geom: &UraGeometry<f64>,
    cover: &AngularSupport<f64>,
    exclude: &AngularSupport<f64>,
    cfg: &SimConfig,
    node: usize,
    side: &'static str,
) -> (Vec<BeamRow>, usize) {
    let grid = geom.angle_grid();
    let picked =
        select_angle_pairs(&grid, cover, exclude, cfg.selection_rule.into()).unwrap_or_default();
    let rows = grid
        .iter()
        .map(|c| BeamRow {
            node,
            side,
            k: c.k,
            n: c.n,
            gamma_x: c.pair.gamma_x,
            gamma_y: c.pair.gamma_y,
            cover: cover.intersects_cell(c),
            exclude: exclude.intersects_cell(c),
            selected: picked.iter().any(|p| p.k == c.k && p.n == c.n),
        })
        .collect();
    (rows, picked.len())
}

pub fn beam_report(cfg: &SimConfig) -> SimResult<BeamReport> {
    let prepared = Prepared::new(cfg)?;
    let empty = AngularSupport::empty();
    let mut beams = Vec::new();
    let mut outlines = Vec::new();
    let mut counts = [(0, 0); 2];
    for (i, count) in counts.iter_mut().enumerate() {
        let s = prepared.supports(i);
        let (tx, rx) = prepared.arrays(i);
        let (ex_t, ex_r) = if prepared.excludes_si() {
            (&s.si_aod, &s.si_aoa)
        } else {
            (&empty, &empty)
        };
        let node = i + 1;
        let (rows_t, n_t) = side_rows(tx, &s.tx_cover, ex_t, cfg, node, "tx");
        let (rows_r, n_r) = side_rows(rx, &s.rx_cover, ex_r, cfg, node, "rx");
        beams.extend(rows_t);
        beams.extend(rows_r);
        *count = (n_t, n_r);
        outlines.extend(outline(&s.tx_cover, node, "tx", "intended"));
        outlines.extend(outline(&s.si_aod, node, "tx", "si"));
        outlines.extend(outline(&s.rx_cover, node, "rx", "intended"));
        outlines.extend(outline(&s.si_aoa, node, "rx", "si"));
    }
    Ok(BeamReport {
        beams,
        outlines,
        counts,
    })
}

fn csv_writer(path: &Path) -> SimResult<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|source| SimError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

impl BeamReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (i, (t, r)) in self.counts.iter().enumerate() {
            s.push_str(&format!(
                "node {}: N_t={t} N_r={r} RF chains={}\n",
                i + 1,
                t + r
            ));
        }
        s
    }

    /// Writes `beams.csv` and `supports.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> SimResult<()> {
        let bool01 = |b: bool| if b { "1" } else { "0" }.to_string();
        let path = dir.join("beams.csv");
        let err = |source| SimError::Csv {
            path: path.clone(),
            source,
        };
        let mut w = csv_writer(&path)?;
        w.write_record([
            "node", "side", "k", "n", "gamma_x", "gamma_y", "cover", "exclude", "selected",
        ])
        .map_err(err)?;
        for b in &self.beams {
            w.write_record([
                b.node.to_string(),
                b.side.to_string(),
                b.k.to_string(),
                b.n.to_string(),
                b.gamma_x.to_string(),
                b.gamma_y.to_string(),
                bool01(b.cover),
                bool01(b.exclude),
                bool01(b.selected),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|source| SimError::Io {
            path: path.clone(),
            source,
        })?;

        let path = dir.join("supports.csv");
        let err = |source| SimError::Csv {
            path: path.clone(),
            source,
        };
        let mut w = csv_writer(&path)?;
        w.write_record([
            "node", "side", "role", "rect", "point", "gamma_x", "gamma_y",
        ])
        .map_err(err)?;
        for p in &self.outlines {
            w.write_record([
                p.node.to_string(),
                p.side.to_string(),
                p.role.to_string(),
                p.rect.to_string(),
                p.point.to_string(),
                p.gamma_x.to_string(),
                p.gamma_y.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|source| SimError::Io { path, source })
    }
}
