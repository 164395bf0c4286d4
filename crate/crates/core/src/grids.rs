//! Spherical and limited-area grids, field containers and error norms.
//!
//! The Gaussian grid carries quadrature nodes `x_k` (co-latitude cosines,
//! roots of the ordinary Legendre polynomial `P_K`) and weights `w_k`
//! normalized to `sum w_k = 2`, ordered north to south. Longitude counts are
//! always even and factorizable as `2^a 3^b 5^c` so the transforms apply and
//! an across-pole shift by half a revolution lands on a grid column.

use crate::error::{DwarfError, Result};
use crate::util::{is_235, next_even_235, pairwise_sum_by};
use std::io::{Read, Write};

/// Spectral-grid relation between truncation and gridpoint counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Linear,
    Quadratic,
    Cubic,
}

/// Default desk-scale cap on the spectral truncation.
pub const DEFAULT_MAX_TRUNCATION: usize = 512;

/// Global Gaussian grid: `nlat` quadrature latitudes, per-latitude
/// longitude counts (equal on a full grid, shrinking poleward on reduced).
#[derive(Debug, Clone)]
pub struct GaussianGrid {
    pub truncation_n: usize,
    pub nlat: usize,
    /// co-latitude cosines, strictly decreasing (north -> south)
    pub latitudes: Vec<f64>,
    pub weights: Vec<f64>,
    pub nlon_per_lat: Vec<usize>,
    pub grid_kind: GridKind,
    /// start offset of each latitude row in a flattened horizontal field
    row_offsets: Vec<usize>,
    total_points: usize,
}

impl GaussianGrid {
    pub fn total_points(&self) -> usize {
        self.total_points
    }

    pub fn row_offset(&self, k: usize) -> usize {
        self.row_offsets[k]
    }

    /// Geographic latitude (radians) of row `k`.
    pub fn latitude_rad(&self, k: usize) -> f64 {
        self.latitudes[k].asin()
    }

    /// Co-latitude (radians) of row `k`.
    pub fn colatitude_rad(&self, k: usize) -> f64 {
        self.latitudes[k].acos()
    }

    /// Longitude (radians) of column `j` on row `k`.
    pub fn longitude_rad(&self, k: usize, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.nlon_per_lat[k] as f64
    }

    pub fn is_full(&self) -> bool {
        self.nlon_per_lat.iter().all(|&n| n == self.nlon_per_lat[0])
    }
}

/// Unnormalized Legendre polynomial `P_k(x)` and derivative, by the
/// three-term recurrence.
fn legendre_p_and_deriv(k: usize, x: f64) -> (f64, f64) {
    if k == 0 {
        return (1.0, 0.0);
    }
    let mut pm1 = 1.0;
    let mut p = x;
    for n in 2..=k {
        let nf = n as f64;
        let pn = ((2.0 * nf - 1.0) * x * p - (nf - 1.0) * pm1) / nf;
        pm1 = p;
        p = pn;
    }
    let dp = k as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, dp)
}

/// Gauss-Legendre nodes (decreasing) and weights for `k` points.
///
/// Newton iteration seeded by the Chebyshev-node approximation,
/// tolerance 1e-14, at most 100 iterations.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for i in 0..k {
        let mut x = (std::f64::consts::PI * (4 * i + 3) as f64 / (4 * k + 2) as f64).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_p_and_deriv(k, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-14 {
                break;
            }
        }
        let (_, dp) = legendre_p_and_deriv(k, x);
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

fn nlat_for(n: usize, kind: GridKind) -> usize {
    // K = (p*N + 1) / 2 rounded up, p = 2, 3, 4
    let p = match kind {
        GridKind::Linear => 2,
        GridKind::Quadratic => 3,
        GridKind::Cubic => 4,
    };
    (p * n + 1).div_ceil(2)
}

/// Build a Gaussian grid for truncation `n` with the default capacity cap.
pub fn make_gaussian_grid(n: usize, kind: GridKind, reduced: bool) -> Result<GaussianGrid> {
    make_gaussian_grid_capped(n, kind, reduced, DEFAULT_MAX_TRUNCATION)
}

/// Build a Gaussian grid with an explicit truncation cap.
pub fn make_gaussian_grid_capped(
    n: usize,
    kind: GridKind,
    reduced: bool,
    cap: usize,
) -> Result<GaussianGrid> {
    if n < 1 {
        return Err(DwarfError::Contract("truncation must satisfy N >= 1".into()));
    }
    if n > cap {
        return Err(DwarfError::Capacity(format!(
            "truncation N={n} exceeds the desk-scale cap {cap}"
        )));
    }
    let nlat = nlat_for(n, kind);
    let (latitudes, weights) = gauss_legendre(nlat);
    let full_nlon = next_even_235(2 * nlat);
    let mut nlon_per_lat = vec![full_nlon; nlat];
    if reduced {
        for k in 0..nlat {
            let coslat = (1.0 - latitudes[k] * latitudes[k]).sqrt();
            let target = (2.0 * nlat as f64 * coslat).round().max(8.0) as usize;
            nlon_per_lat[k] = next_even_235(target).min(full_nlon);
        }
        // poleward monotonicity after rounding
        let mid = nlat / 2;
        for k in (0..mid).rev() {
            nlon_per_lat[k] = nlon_per_lat[k].min(nlon_per_lat[k + 1]);
        }
        for k in mid + 1..nlat {
            nlon_per_lat[k] = nlon_per_lat[k].min(nlon_per_lat[k - 1]);
        }
    }
    let mut row_offsets = Vec::with_capacity(nlat);
    let mut total = 0usize;
    for &nl in &nlon_per_lat {
        row_offsets.push(total);
        total += nl;
    }
    Ok(GaussianGrid {
        truncation_n: n,
        nlat,
        latitudes,
        weights,
        nlon_per_lat,
        grid_kind: kind,
        row_offsets,
        total_points: total,
    })
}

/// Rectangular limited-area grid with an extension zone.
#[derive(Debug, Clone)]
pub struct LamGrid {
    pub nx: usize,
    pub ny: usize,
    pub ext_x: usize,
    pub ext_y: usize,
    pub dx: f64,
    pub dy: f64,
    pub kmax_x: usize,
    pub kmax_y: usize,
    pub grid_kind: GridKind,
}

impl LamGrid {
    pub fn new(
        nx: usize,
        ny: usize,
        ext_x: usize,
        ext_y: usize,
        dx: f64,
        dy: f64,
        kind: GridKind,
    ) -> Result<Self> {
        let (tx, ty) = (nx + ext_x, ny + ext_y);
        for (name, total) in [("x", tx), ("y", ty)] {
            if !is_235(total) {
                return Err(DwarfError::Contract(format!(
                    "extended {name}-size {total} is not of the form 2^a 3^b 5^c"
                )));
            }
        }
        let p = match kind {
            GridKind::Linear => 2,
            GridKind::Quadratic => 3,
            GridKind::Cubic => 4,
        };
        Ok(Self {
            nx,
            ny,
            ext_x,
            ext_y,
            dx,
            dy,
            kmax_x: tx / p,
            kmax_y: ty / p,
            grid_kind: kind,
        })
    }

    /// Extended sizes seen by the transforms.
    pub fn extended(&self) -> (usize, usize) {
        (self.nx + self.ext_x, self.ny + self.ext_y)
    }
}

/// Level-major array of point values; the I/O currency of every dwarf.
#[derive(Debug, Clone, PartialEq)]
pub struct Field3d {
    pub nlev: usize,
    pub points_per_level: usize,
    pub values: Vec<f64>,
    pub name: String,
}

impl Field3d {
    pub fn zeros(nlev: usize, points_per_level: usize, name: &str) -> Self {
        Self {
            nlev,
            points_per_level,
            values: vec![0.0; nlev * points_per_level],
            name: name.to_string(),
        }
    }

    pub fn level(&self, l: usize) -> &[f64] {
        let p = self.points_per_level;
        &self.values[l * p..(l + 1) * p]
    }

    pub fn level_mut(&mut self, l: usize) -> &mut [f64] {
        let p = self.points_per_level;
        &mut self.values[l * p..(l + 1) * p]
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// L2 / Linf / mean of a field difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
    pub mean: f64,
}

/// Difference norms between two fields of identical shape.
///
/// Summation order is fixed (index-ascending pairwise tree) so results are
/// bit-reproducible regardless of thread count.
pub fn field_norms(a: &Field3d, b: &Field3d) -> Result<Norms> {
    if a.nlev != b.nlev || a.points_per_level != b.points_per_level {
        return Err(DwarfError::Contract(format!(
            "shape mismatch: {}x{} vs {}x{}",
            a.nlev, a.points_per_level, b.nlev, b.points_per_level
        )));
    }
    let n = a.values.len();
    let count = n as f64;
    let sq = pairwise_sum_by(n, |i| {
        let d = a.values[i] - b.values[i];
        d * d
    });
    let sum = pairwise_sum_by(n, |i| a.values[i] - b.values[i]);
    let mut linf = 0.0f64;
    for i in 0..n {
        linf = linf.max((a.values[i] - b.values[i]).abs());
    }
    Ok(Norms {
        l2: (sq / count).sqrt(),
        linf,
        mean: sum / count,
    })
}

/// Gaussian-shaped hill evaluated pointwise:
///
/// ```text
/// s(x, y)   = 2 sqrt( sin^2((y - y_c)/2) + cos(y) cos(y_c) sin^2((x - x_c)/2) )
/// psi0(x,y) = kappa/2 [1 + cos(pi s / (2 pi / 9))]   for s < 2 pi / 9
///           = 0                                      otherwise
/// ```
///
/// `s` is the chord-length form of the great-circle separation from the
/// center, so the hill is a compact cap of angular radius `2 pi / 9` with
/// peak `kappa` at `(x_c, y_c)` and zero at the antipode. A negative
/// radicand (impossible here, kept as a guard) counts as outside support.
pub fn hill_value(lon: f64, lat: f64, center: (f64, f64), height: f64) -> f64 {
    let (xc, yc) = center;
    let sy = ((lat - yc) / 2.0).sin();
    let sx = ((lon - xc) / 2.0).sin();
    let r = sy * sy + lat.cos() * yc.cos() * sx * sx;
    if r < 0.0 {
        return 0.0;
    }
    let s = 2.0 * r.sqrt();
    let cap = 2.0 * std::f64::consts::PI / 9.0;
    if s < cap {
        height / 2.0 * (1.0 + (std::f64::consts::PI * s / cap).cos())
    } else {
        0.0
    }
}

/// Single-level field holding the Gaussian hill on a Gaussian grid.
pub fn gaussian_hill(grid: &GaussianGrid, center: (f64, f64), height: f64) -> Result<Field3d> {
    if height <= 0.0 {
        return Err(DwarfError::Contract("hill height must be positive".into()));
    }
    let mut f = Field3d::zeros(1, grid.total_points(), "hill");
    for k in 0..grid.nlat {
        let lat = grid.latitude_rad(k);
        let off = grid.row_offset(k);
        for j in 0..grid.nlon_per_lat[k] {
            f.values[off + j] = hill_value(grid.longitude_rad(k, j), lat, center, height);
        }
    }
    Ok(f)
}

const NWPF_MAGIC: [u8; 4] = *b"NWPF";

/// Write the little-endian NWPF binary dump: 16-byte header
/// (magic, u32 nlev, u32 npoints, u32 reserved) then level-major f64 values.
pub fn write_nwpf<W: Write>(field: &Field3d, w: &mut W) -> Result<()> {
    w.write_all(&NWPF_MAGIC)?;
    w.write_all(&(field.nlev as u32).to_le_bytes())?;
    w.write_all(&(field.points_per_level as u32).to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Read a field back from the NWPF dump format.
pub fn read_nwpf<R: Read>(r: &mut R, name: &str) -> Result<Field3d> {
    let mut head = [0u8; 16];
    r.read_exact(&mut head)?;
    if head[0..4] != NWPF_MAGIC {
        return Err(DwarfError::Contract("bad NWPF magic".into()));
    }
    let nlev = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    let npoints = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let mut values = vec![0.0f64; nlev * npoints];
    let mut buf = [0u8; 8];
    for v in values.iter_mut() {
        r.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    Ok(Field3d {
        nlev,
        points_per_level: npoints,
        values,
        name: name.to_string(),
    })
}

/// CSV writer (lon,lat,level,value) for plotting fields on a Gaussian grid.
pub fn write_csv<W: Write>(field: &Field3d, grid: &GaussianGrid, w: &mut W) -> Result<()> {
    if field.points_per_level != grid.total_points() {
        return Err(DwarfError::Contract(
            "field does not live on the given grid".into(),
        ));
    }
    writeln!(w, "lon,lat,level,value")?;
    for l in 0..field.nlev {
        let lev = field.level(l);
        for k in 0..grid.nlat {
            let lat = grid.latitude_rad(k);
            let off = grid.row_offset(k);
            for j in 0..grid.nlon_per_lat[k] {
                writeln!(
                    w,
                    "{},{},{},{}",
                    grid.longitude_rad(k, j),
                    lat,
                    l,
                    lev[off + j]
                )?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::pairwise_sum;

    #[test]
    fn n1_linear_full_is_two_point_gauss() {
        let g = make_gaussian_grid(1, GridKind::Linear, false).unwrap();
        assert_eq!(g.nlat, 2);
        let r = 1.0 / 3.0f64.sqrt();
        assert!((g.latitudes[0] - r).abs() < 1e-14);
        assert!((g.latitudes[1] + r).abs() < 1e-14);
        assert!((g.weights[0] - 1.0).abs() < 1e-14);
        assert!((g.weights[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_two() {
        let g = make_gaussian_grid(21, GridKind::Linear, false).unwrap();
        let sum: f64 = pairwise_sum(&g.weights);
        assert!((sum - 2.0).abs() < 1e-12);
    }

    /// Bisection oracle for the roots of P_32, independent of the Newton path.
    #[test]
    fn n31_nodes_match_bisection_oracle() {
        let g = make_gaussian_grid(31, GridKind::Linear, false).unwrap();
        let k = g.nlat;
        assert_eq!(k, 32);
        // bracket sign changes on a fine scan, then bisect
        let eval = |x: f64| legendre_p_and_deriv(k, x).0;
        let mut roots = Vec::new();
        let steps = 20_000;
        let mut prev_x = -1.0 + 1e-9;
        let mut prev_f = eval(prev_x);
        for i in 1..=steps {
            let x = -1.0 + 2.0 * i as f64 / steps as f64 - 1e-9;
            let f = eval(x);
            if prev_f * f < 0.0 {
                let (mut lo, mut hi) = (prev_x, x);
                let (mut flo, _) = (prev_f, f);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = eval(mid);
                    if flo * fm <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev_x = x;
            prev_f = f;
        }
        assert_eq!(roots.len(), k);
        roots.reverse(); // north -> south ordering
        for (i, r) in roots.iter().enumerate() {
            assert!(
                (g.latitudes[i] - r).abs() < 1e-12,
                "node {i}: {} vs oracle {r}",
                g.latitudes[i]
            );
            let (_, dp) = legendre_p_and_deriv(k, *r);
            let w = 2.0 / ((1.0 - r * r) * dp * dp);
            assert!((g.weights[i] - w).abs() < 1e-12);
        }
    }

    #[test]
    fn latitudes_strictly_decreasing_and_roots() {
        let g = make_gaussian_grid(42, GridKind::Linear, false).unwrap();
        for k in 1..g.nlat {
            assert!(g.latitudes[k] < g.latitudes[k - 1]);
        }
        for &x in &g.latitudes {
            let (p, _) = legendre_p_and_deriv(g.nlat, x);
            assert!(p.abs() < 1e-13, "P_K at node = {p}");
        }
    }

    #[test]
    fn linear_rule_and_fft_lengths() {
        for n in [1usize, 10, 21, 31, 42] {
            let g = make_gaussian_grid(n, GridKind::Linear, false).unwrap();
            assert_eq!(g.nlat, (2 * n + 1).div_ceil(2));
            for &nl in &g.nlon_per_lat {
                assert!(is_235(nl), "nlon {nl} not 2^a 3^b 5^c");
                assert_eq!(nl % 2, 0);
            }
        }
    }

    #[test]
    fn reduced_grid_monotone_toward_poles() {
        let g = make_gaussian_grid(31, GridKind::Linear, true).unwrap();
        let mid = g.nlat / 2;
        for k in 1..=mid {
            assert!(g.nlon_per_lat[k - 1] <= g.nlon_per_lat[k]);
        }
        for k in mid..g.nlat - 1 {
            assert!(g.nlon_per_lat[k + 1] <= g.nlon_per_lat[k]);
        }
        assert!(g.nlon_per_lat[0] < g.nlon_per_lat[mid]);
        for &nl in &g.nlon_per_lat {
            assert!(is_235(nl) && nl % 2 == 0);
        }
    }

    #[test]
    fn capacity_cap_enforced() {
        assert!(matches!(
            make_gaussian_grid(513, GridKind::Linear, false),
            Err(DwarfError::Capacity(_))
        ));
    }

    #[test]
    fn quadrature_exact_for_random_polynomials() {
        let g = make_gaussian_grid(10, GridKind::Linear, false).unwrap();
        let k = g.nlat;
        let maxdeg = 2 * k - 1;
        let mut state = 0xdeadbeefu64;
        let mut rnd = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..20 {
            let coeffs: Vec<f64> = (0..=maxdeg).map(|_| rnd()).collect();
            let horner = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
            let quad: f64 = (0..k).map(|i| g.weights[i] * horner(g.latitudes[i])).sum();
            let exact: f64 = coeffs
                .iter()
                .enumerate()
                .filter(|(j, _)| j % 2 == 0)
                .map(|(j, c)| c * 2.0 / (j as f64 + 1.0))
                .sum();
            assert!((quad - exact).abs() < 1e-11, "{quad} vs {exact}");
        }
    }

    #[test]
    fn norms_of_identical_fields_are_zero() {
        let a = Field3d::zeros(2, 10, "a");
        let n = field_norms(&a, &a).unwrap();
        assert_eq!(n.l2, 0.0);
        assert_eq!(n.linf, 0.0);
        assert_eq!(n.mean, 0.0);
    }

    #[test]
    fn norms_of_constant_offset() {
        let a = Field3d::zeros(1, 16, "a");
        let mut b = Field3d::zeros(1, 16, "b");
        for v in b.values.iter_mut() {
            *v = -0.75;
        }
        let n = field_norms(&a, &b).unwrap();
        assert!((n.mean - 0.75).abs() < 1e-15);
        assert!((n.linf - 0.75).abs() < 1e-15);
    }

    #[test]
    fn norms_match_sequential_oracle() {
        let mut a = Field3d::zeros(3, 101, "a");
        let mut b = Field3d::zeros(3, 101, "b");
        for (i, v) in a.values.iter_mut().enumerate() {
            *v = (i as f64 * 0.37).sin();
        }
        for (i, v) in b.values.iter_mut().enumerate() {
            *v = (i as f64 * 0.11).cos();
        }
        let n = field_norms(&a, &b).unwrap();
        let diffs: Vec<f64> = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| x - y)
            .collect();
        let count = diffs.len() as f64;
        let l2_seq = (diffs.iter().map(|d| d * d).sum::<f64>() / count).sqrt();
        let mean_seq = diffs.iter().sum::<f64>() / count;
        assert!((n.l2 - l2_seq).abs() / l2_seq.abs() < 1e-13);
        assert!((n.mean - mean_seq).abs() / mean_seq.abs().max(1e-30) < 1e-13);
    }

    #[test]
    fn norm_l2_sign_symmetric_bit_exact() {
        let mut a = Field3d::zeros(1, 64, "a");
        let mut b = Field3d::zeros(1, 64, "b");
        for i in 0..64 {
            a.values[i] = (i as f64).sin();
            b.values[i] = (i as f64 * 1.3).cos();
        }
        let ab = field_norms(&a, &b).unwrap();
        let ba = field_norms(&b, &a).unwrap();
        assert_eq!(ab.l2.to_bits(), ba.l2.to_bits());
        assert_eq!(ab.linf.to_bits(), ba.linf.to_bits());
    }

    #[test]
    fn norms_reject_shape_mismatch() {
        let a = Field3d::zeros(1, 10, "a");
        let b = Field3d::zeros(2, 10, "b");
        assert!(field_norms(&a, &b).is_err());
    }

    #[test]
    fn hill_center_and_antipode() {
        let c = (std::f64::consts::PI, 0.0);
        assert!((hill_value(c.0, c.1, c, 2.0) - 2.0).abs() < 1e-14);
        assert_eq!(hill_value(0.0, 0.0, c, 2.0), 0.0);
    }

    #[test]
    fn hill_max_at_nearest_gridpoint_matches_formula() {
        let grid = make_gaussian_grid(31, GridKind::Linear, false).unwrap();
        let center = (std::f64::consts::PI, 0.0);
        let f = gaussian_hill(&grid, center, 1.0).unwrap();
        // locate nearest gridpoint to the center
        let mut best = (0usize, 0usize, f64::INFINITY);
        for k in 0..grid.nlat {
            let lat = grid.latitude_rad(k);
            for j in 0..grid.nlon_per_lat[k] {
                let lon = grid.longitude_rad(k, j);
                let d = (lon - center.0).powi(2) + (lat - center.1).powi(2);
                if d < best.2 {
                    best = (k, j, d);
                }
            }
        }
        let idx = grid.row_offset(best.0) + best.1;
        let max = f.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(max, f.values[idx]);
        let direct = hill_value(
            grid.longitude_rad(best.0, best.1),
            grid.latitude_rad(best.0),
            center,
            1.0,
        );
        assert_eq!(f.values[idx], direct);
    }

    #[test]
    fn hill_bounded_and_continuous_across_support() {
        let grid = make_gaussian_grid(42, GridKind::Linear, false).unwrap();
        let kappa = 3.0;
        let f = gaussian_hill(&grid, (2.0, 0.3), kappa).unwrap();
        for &v in &f.values {
            assert!((0.0..=kappa).contains(&v));
        }
        // adjacent zonal jumps bounded by O(grid spacing)
        let dlam = 2.0 * std::f64::consts::PI / grid.nlon_per_lat[0] as f64;
        for k in 0..grid.nlat {
            let off = grid.row_offset(k);
            let nl = grid.nlon_per_lat[k];
            for j in 0..nl {
                let a = f.values[off + j];
                let b = f.values[off + (j + 1) % nl];
                assert!(
                    (a - b).abs() <= 5.0 * kappa * dlam,
                    "jump {} exceeds bound",
                    (a - b).abs()
                );
            }
        }
    }

    #[test]
    fn hill_rejects_nonpositive_height() {
        let grid = make_gaussian_grid(5, GridKind::Linear, false).unwrap();
        assert!(gaussian_hill(&grid, (0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn lam_grid_rules() {
        let g = LamGrid::new(54, 48, 6, 6, 1.0, 1.0, GridKind::Linear).unwrap();
        assert_eq!(g.extended(), (60, 54));
        assert_eq!(g.kmax_x, 30);
        assert_eq!(g.kmax_y, 27);
        let q = LamGrid::new(54, 48, 6, 6, 1.0, 1.0, GridKind::Quadratic).unwrap();
        assert_eq!(q.kmax_x, 20);
        assert_eq!(q.kmax_y, 18);
        let c = LamGrid::new(54, 48, 6, 6, 1.0, 1.0, GridKind::Cubic).unwrap();
        assert_eq!(c.kmax_x, 15);
        assert_eq!(c.kmax_y, 13);
        assert!(LamGrid::new(41, 48, 3, 6, 1.0, 1.0, GridKind::Linear).is_err());
    }

    #[test]
    fn csv_writer_emits_one_row_per_point() {
        let grid = make_gaussian_grid(3, GridKind::Linear, false).unwrap();
        let f = gaussian_hill(&grid, (1.0, 0.0), 1.0).unwrap();
        let mut buf = Vec::new();
        write_csv(&f, &grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("lon,lat,level,value"));
        assert_eq!(lines.count(), grid.total_points());
        let mismatched = Field3d::zeros(1, 3, "bad");
        assert!(write_csv(&mismatched, &grid, &mut Vec::new()).is_err());
    }

    #[test]
    fn nwpf_round_trip() {
        let mut f = Field3d::zeros(2, 7, "t");
        for (i, v) in f.values.iter_mut().enumerate() {
            *v = i as f64 * 0.5 - 3.0;
        }
        let mut buf = Vec::new();
        write_nwpf(&f, &mut buf).unwrap();
        assert_eq!(&buf[0..4], b"NWPF");
        assert_eq!(buf.len(), 16 + 2 * 7 * 8);
        let g = read_nwpf(&mut buf.as_slice(), "t").unwrap();
        assert_eq!(f, g);
    }
}
