//! Maps of the control square `(alpha1, alpha2)` onto the `(Q_ext, Q_R)` plane.

use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::chain::{coupling_profile, spectral_decomposition, ChainSpec, SpectralDecomposition};
use crate::correlations::{receiver_from_block, sender_state, DiscordPair, SenderState};
use crate::error::{Error, Result};
use crate::optimizer::{find_first_maximum_default, TimeOptimum};

pub const DEFAULT_STEP: f64 = 0.05;
pub const DEFAULT_CELL_SIZE: f64 = 0.02;
/// Sampling step of the dense sweep that feeds coverage accounting.
pub const DEFAULT_COVERAGE_STEP: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SubDomain {
    D1,
    D2,
    D3,
    D4,
    #[serde(rename = "FULL")]
    Full,
}

impl SubDomain {
    pub const QUADRANTS: [SubDomain; 4] =
        [SubDomain::D1, SubDomain::D2, SubDomain::D3, SubDomain::D4];

    /// `((alpha1_lo, alpha1_hi), (alpha2_lo, alpha2_hi))`, closed.
    pub fn bounds(self) -> ((f64, f64), (f64, f64)) {
        match self {
            SubDomain::D1 => ((0.0, 0.5), (0.0, 0.5)),
            SubDomain::D2 => ((0.5, 1.0), (0.0, 0.5)),
            SubDomain::D3 => ((0.0, 0.5), (0.5, 1.0)),
            SubDomain::D4 => ((0.5, 1.0), (0.5, 1.0)),
            SubDomain::Full => ((0.0, 1.0), (0.0, 1.0)),
        }
    }

    pub fn contains(self, alpha1: f64, alpha2: f64) -> bool {
        let ((a1, b1), (a2, b2)) = self.bounds();
        (a1..=b1).contains(&alpha1) && (a2..=b2).contains(&alpha2)
    }
}

impl fmt::Display for SubDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SubDomain::D1 => "D1",
            SubDomain::D2 => "D2",
            SubDomain::D3 => "D3",
            SubDomain::D4 => "D4",
            SubDomain::Full => "FULL",
        };
        f.write_str(name)
    }
}

impl FromStr for SubDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "D1" => Ok(SubDomain::D1),
            "D2" => Ok(SubDomain::D2),
            "D3" => Ok(SubDomain::D3),
            "D4" => Ok(SubDomain::D4),
            "FULL" => Ok(SubDomain::Full),
            _ => Err(Error::InvalidInput(format!(
                "unknown sub-domain '{s}' (expected D1, D2, D3, D4 or FULL)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub alpha1: f64,
    pub alpha2: f64,
    pub q_ext: f64,
    pub q_r: f64,
    pub rsq: f64,
    pub rsq_nm1: f64,
}

/// Grid nodes `lo, lo + step, ..., hi`; `step` must divide `hi - lo`.
fn axis_nodes(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "step must be positive, got {step}"
        )));
    }
    let ratio = (hi - lo) / step;
    let count = ratio.round();
    if (ratio - count).abs() > 1e-9 || count < 1.0 {
        return Err(Error::InvalidInput(format!(
            "step {step} does not divide the sub-domain edge {}",
            hi - lo
        )));
    }
    let count = count as usize;
    Ok((0..=count)
        .map(|i| if i == count { hi } else { lo + i as f64 * step })
        .collect())
}

/// Evaluate both discords on the `domain` grid at time `t`, control phases zero.
/// Rows are ordered lexicographically in `(alpha1, alpha2)`.
pub fn sweep(
    decomp: &SpectralDecomposition,
    t: f64,
    domain: SubDomain,
    step: f64,
) -> Result<Vec<SweepPoint>> {
    sweep_with_phases(decomp, t, domain, step, 0.0, 0.0)
}

pub fn sweep_with_phases(
    decomp: &SpectralDecomposition,
    t: f64,
    domain: SubDomain,
    step: f64,
    varphi1: f64,
    varphi2: f64,
) -> Result<Vec<SweepPoint>> {
    let ((a1_lo, a1_hi), (a2_lo, a2_hi)) = domain.bounds();
    let alpha1 = axis_nodes(a1_lo, a1_hi, step)?;
    let alpha2 = axis_nodes(a2_lo, a2_hi, step)?;
    sender_state(0.0, 0.0, varphi1, varphi2)?;
    let block = decomp.receiver_block(t);

    let nodes: Vec<(f64, f64)> = alpha1
        .iter()
        .flat_map(|&a1| alpha2.iter().map(move |&a2| (a1, a2)))
        .collect();
    nodes
        .par_iter()
        .map(|&(a1, a2)| {
            let sender = sender_state(a1, a2, varphi1, varphi2)?;
            evaluate(&block, &sender)
        })
        .collect()
}

fn evaluate(block: &[[num_complex::Complex64; 3]; 2], sender: &SenderState) -> Result<SweepPoint> {
    let receiver = receiver_from_block(block, sender)?;
    let pair = DiscordPair::of(&receiver)?;
    Ok(SweepPoint {
        alpha1: sender.alpha1,
        alpha2: sender.alpha2,
        q_ext: pair.q_ext,
        q_r: pair.q_r,
        rsq: pair.rsq,
        rsq_nm1: pair.rsq_nm1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub cell_size: f64,
    pub occupied_cells: usize,
    /// `occupied_cells * cell_size^2`.
    pub area_estimate: f64,
    /// Area of occupied cells touching an empty neighbour (one-cell ring).
    pub area_uncertainty: f64,
    /// Entry `k` counts cells reached by exactly `k + 1` sub-domains.
    pub multiplicity_histogram: [usize; 4],
    /// D1 grid nodes sharing a cell with an earlier D1 node.
    pub d1_collisions: usize,
    /// `(q_r index, q_ext index, multiplicity)` for every occupied cell.
    #[serde(skip)]
    pub cells: Vec<(usize, usize, u8)>,
}

impl CoverageReport {
    /// Centre of a cell in the `(Q_R, Q_ext)` plane.
    pub fn cell_centre(&self, q_r_index: usize, q_ext_index: usize) -> (f64, f64) {
        (
            (q_r_index as f64 + 0.5) * self.cell_size,
            (q_ext_index as f64 + 0.5) * self.cell_size,
        )
    }
}

fn cell_of(point: &SweepPoint, cell_size: f64, cells_per_axis: usize) -> (usize, usize) {
    let index = |q: f64| ((q.max(0.0) / cell_size).floor() as usize).min(cells_per_axis - 1);
    (index(point.q_r), index(point.q_ext))
}

/// Rasterise the `(Q_R, Q_ext)` unit square and count how many of the four
/// quadrant sub-domains reach each cell.
pub fn coverage(
    points_by_subdomain: &BTreeMap<SubDomain, Vec<SweepPoint>>,
    cell_size: f64,
) -> Result<CoverageReport> {
    if !(cell_size > 0.0 && cell_size < 1.0) {
        return Err(Error::InvalidInput(format!(
            "cell size must lie in (0, 1), got {cell_size}"
        )));
    }
    let cells_per_axis = (1.0 / cell_size - 1e-9).ceil() as usize;

    let mut multiplicity: BTreeMap<(usize, usize), u8> = BTreeMap::new();
    let mut d1_collisions = 0;
    for domain in SubDomain::QUADRANTS {
        let points = points_by_subdomain
            .get(&domain)
            .ok_or_else(|| Error::MissingSubdomain(domain.to_string()))?;
        let cells: BTreeSet<(usize, usize)> = points
            .iter()
            .map(|p| cell_of(p, cell_size, cells_per_axis))
            .collect();
        if domain == SubDomain::D1 {
            d1_collisions = points.len() - cells.len();
        }
        for cell in cells {
            *multiplicity.entry(cell).or_insert(0) += 1;
        }
    }

    let mut histogram = [0usize; 4];
    for &m in multiplicity.values() {
        histogram[m as usize - 1] += 1;
    }
    let ring = multiplicity
        .keys()
        .filter(|&&(i, j)| {
            let neighbours = [
                (i.wrapping_sub(1), j),
                (i + 1, j),
                (i, j.wrapping_sub(1)),
                (i, j + 1),
            ];
            neighbours.iter().any(|&(a, b)| {
                a < cells_per_axis && b < cells_per_axis && !multiplicity.contains_key(&(a, b))
            })
        })
        .count();

    let area = cell_size * cell_size;
    Ok(CoverageReport {
        cell_size,
        occupied_cells: multiplicity.len(),
        area_estimate: multiplicity.len() as f64 * area,
        area_uncertainty: ring as f64 * area,
        multiplicity_histogram: histogram,
        d1_collisions,
        cells: multiplicity
            .into_iter()
            .map(|((i, j), m)| (i, j, m))
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapOptions {
    /// Grid step of the emitted sweeps.
    pub step: f64,
    pub cell_size: f64,
    /// Grid step of the dense sweeps used only for coverage.
    pub coverage_step: f64,
    pub varphi1: f64,
    pub varphi2: f64,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions {
            step: DEFAULT_STEP,
            cell_size: DEFAULT_CELL_SIZE,
            coverage_step: DEFAULT_COVERAGE_STEP,
            varphi1: 0.0,
            varphi2: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MapExperiment {
    pub optimum: TimeOptimum,
    /// Sweeps at `optimum.t0` for D1..D4 and FULL.
    pub sweeps: BTreeMap<SubDomain, Vec<SweepPoint>>,
    pub coverage: CoverageReport,
}

/// Optimise `t0` for the sender `|1>`, then map every sub-domain at `t0`.
pub fn run_map_experiment(n: usize, phi: f64, step: f64) -> Result<MapExperiment> {
    run_map_experiment_with(
        n,
        phi,
        &MapOptions {
            step,
            ..MapOptions::default()
        },
    )
}

pub fn run_map_experiment_with(n: usize, phi: f64, options: &MapOptions) -> Result<MapExperiment> {
    let decomp = spectral_decomposition(&coupling_profile(ChainSpec::new(n, phi)?)?)?;
    let optimum = find_first_maximum_default(&decomp, &SenderState::ground_site())?;
    let t0 = optimum.t0;
    let run = |domain: SubDomain, step: f64| {
        sweep_with_phases(&decomp, t0, domain, step, options.varphi1, options.varphi2)
    };

    let mut sweeps = BTreeMap::new();
    for domain in SubDomain::QUADRANTS.into_iter().chain([SubDomain::Full]) {
        sweeps.insert(domain, run(domain, options.step)?);
    }
    let dense = SubDomain::QUADRANTS
        .into_iter()
        .map(|domain| Ok((domain, run(domain, options.coverage_step)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let coverage = coverage(&dense, options.cell_size)?;

    Ok(MapExperiment {
        optimum,
        sweeps,
        coverage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn decomp(n: usize, phi: f64) -> SpectralDecomposition {
        spectral_decomposition(&coupling_profile(ChainSpec::new(n, phi).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn subdomain_bounds_and_parsing() {
        assert!(SubDomain::D1.contains(0.5, 0.5));
        assert!(SubDomain::D2.contains(0.5, 0.0));
        assert!(!SubDomain::D3.contains(0.6, 0.6));
        assert!(SubDomain::Full.contains(1.0, 1.0));
        for d in SubDomain::QUADRANTS.into_iter().chain([SubDomain::Full]) {
            assert_eq!(d.to_string().parse::<SubDomain>().unwrap(), d);
        }
        assert!("D5".parse::<SubDomain>().is_err());
    }

    #[test]
    fn axis_nodes_require_divisible_step() {
        let nodes = axis_nodes(0.5, 1.0, 0.05).unwrap();
        assert_eq!(nodes.len(), 11);
        assert_eq!(nodes[0], 0.5);
        assert_eq!(nodes[10], 1.0);
        assert!(axis_nodes(0.0, 0.5, 0.3).is_err());
        assert!(axis_nodes(0.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn ekert_d1_grid() {
        let d = decomp(20, 0.5);
        let pts = sweep(&d, PI * 19f64.sqrt(), SubDomain::D1, 0.05).unwrap();
        assert_eq!(pts.len(), 121);
        assert_eq!((pts[0].alpha1, pts[0].alpha2), (0.0, 0.0));
        assert_abs_diff_eq!(pts[0].q_ext, 0.0, epsilon = 1e-4);
        assert_eq!((pts[1].alpha1, pts[1].alpha2), (0.0, 0.05));
        for w in pts.windows(2) {
            assert!((w[0].alpha1, w[0].alpha2) < (w[1].alpha1, w[1].alpha2));
        }
    }

    #[test]
    fn alpha2_edge_collapses() {
        let d = decomp(12, 0.2);
        let pts = sweep(&d, 7.3, SubDomain::D3, 0.05).unwrap();
        let edge: Vec<_> = pts.iter().filter(|p| p.alpha2 == 1.0).collect();
        assert_eq!(edge.len(), 11);
        for p in &edge {
            assert_abs_diff_eq!(p.q_ext, edge[0].q_ext, epsilon = 1e-14);
            assert_abs_diff_eq!(p.q_r, edge[0].q_r, epsilon = 1e-14);
            assert_abs_diff_eq!(p.rsq, edge[0].rsq, epsilon = 1e-14);
        }
    }

    fn point(q_r: f64, q_ext: f64) -> SweepPoint {
        SweepPoint {
            alpha1: 0.0,
            alpha2: 0.0,
            q_ext,
            q_r,
            rsq: 0.0,
            rsq_nm1: 0.0,
        }
    }

    #[test]
    fn identical_subdomains_give_full_multiplicity() {
        let pts = vec![
            point(0.1, 0.2),
            point(0.5, 0.5),
            point(1.0, 1.0),
            point(0.101, 0.201),
        ];
        let map: BTreeMap<_, _> = SubDomain::QUADRANTS
            .into_iter()
            .map(|d| (d, pts.clone()))
            .collect();
        let report = coverage(&map, 0.05).unwrap();
        assert_eq!(report.occupied_cells, 3);
        assert_eq!(report.multiplicity_histogram, [0, 0, 0, 3]);
        assert_abs_diff_eq!(report.area_estimate, 3.0 * 0.0025, epsilon = 1e-15);
        assert_eq!(report.d1_collisions, 1);
        assert!(report.cells.iter().all(|c| c.2 == 4));
    }

    #[test]
    fn coverage_requires_all_quadrants() {
        let mut map = BTreeMap::new();
        map.insert(SubDomain::D1, vec![point(0.1, 0.1)]);
        assert!(matches!(
            coverage(&map, 0.02),
            Err(Error::MissingSubdomain(_))
        ));
        assert!(coverage(&map, 1.5).is_err());
    }
}
