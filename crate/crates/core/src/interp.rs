//! Semi-Lagrangian interpolation kernels: the 32-point quasi-tri-cubic
//! scheme, tri-linear and full tri-cubic variants, and the quasi-monotone
//! limiter.
//!
//! The cubic Lagrange basis over nodes at positions -1, 0, 1, 2 is used in
//! incremental form `X_A + f2 (X_B - X_A) + f3 (X_C - X_A) + f4 (X_D - X_A)`
//! with
//!
//! ```text
//! f2(a) =  (a + 1)(a - 2)(a - 1) / 2
//! f3(a) = -(a + 1)(a - 2) a / 2
//! f4(a) =   a (a - 1)(a + 1) / 6
//! ```
//!
//! so constant fields are reproduced bit-exactly by construction. Weights
//! are precomputed into [`InterpWeights`] before the kernel runs; the kernel
//! itself is pure arithmetic and safe for arbitrary parallel invocation.

use crate::util::BitChecksum;

/// Monotonicity treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Kqm {
    /// 0: non-monotonic
    NonMonotone,
    /// 1: horizontally quasi-monotonic (per-level envelope clipping plus a
    /// final clamp to the stencil extrema)
    HorizontalQuasiMonotone,
    /// 2: quasi-monotonic (per-level clipping plus a final clamp to the
    /// 2x2x2 inner envelope)
    QuasiMonotone,
}

impl Kqm {
    pub fn from_index(v: u8) -> Option<Self> {
        match v {
            0 => Some(Self::NonMonotone),
            1 => Some(Self::HorizontalQuasiMonotone),
            2 => Some(Self::QuasiMonotone),
            _ => None,
        }
    }
}

pub fn f2(a: f64) -> f64 {
    (a + 1.0) * (a - 2.0) * (a - 1.0) / 2.0
}

pub fn f3(a: f64) -> f64 {
    -(a + 1.0) * (a - 2.0) * a / 2.0
}

pub fn f4(a: f64) -> f64 {
    a * (a - 1.0) * (a + 1.0) / 6.0
}

/// `[f2, f3, f4]` at one fractional position.
pub fn cubic_basis(a: f64) -> [f64; 3] {
    [f2(a), f3(a), f4(a)]
}

/// Precomputed interpolation weights for one departure point.
#[derive(Debug, Clone, Copy)]
pub struct InterpWeights {
    /// zonal linear fractions for stencil rows 0..4
    pub pdlo: [f64; 4],
    /// zonal cubic weights (f2, f3, f4) for the two interior rows
    pub pclo: [[f64; 3]; 2],
    /// meridional linear fraction
    pub pdlat: f64,
    /// meridional cubic weights
    pub pcla: [f64; 3],
    /// vertical cubic weights
    pub pvintw: [f64; 3],
    pub kqm: Kqm,
}

/// Evaluate all weight polynomials from the fractional offsets
/// (`alpha_lon` per stencil row, relative to the B-row/B-level cell).
pub fn compute_weights(
    alpha_lon: [f64; 4],
    alpha_lat: f64,
    alpha_vert: f64,
    kqm: Kqm,
) -> InterpWeights {
    InterpWeights {
        pdlo: alpha_lon,
        pclo: [cubic_basis(alpha_lon[1]), cubic_basis(alpha_lon[2])],
        pdlat: alpha_lat,
        pcla: cubic_basis(alpha_lat),
        pvintw: cubic_basis(alpha_vert),
        kqm,
    }
}

/// Indices of the 32 source points.
///
/// Stencil levels 0 and 3 interpolate linearly over the four inner points
/// `[B1, C1, B2, C2]`; levels 1 and 2 use the full 12-point horizontal
/// stencil `[B0, C0, A1, B1, C1, D1, A2, B2, C2, D2, B3, C3]` (rows ordered
/// north to south, linear on the outer rows, cubic on the interior rows).
#[derive(Debug, Clone)]
pub struct Stencil32 {
    pub lin: [[usize; 4]; 2],
    pub cubic: [[usize; 12]; 2],
}

#[inline]
fn lin(a: f64, b: f64, alpha: f64) -> f64 {
    a + alpha * (b - a)
}

#[inline]
fn cubic(xa: f64, xb: f64, xc: f64, xd: f64, w: &[f64; 3]) -> f64 {
    xa + w[0] * (xb - xa) + w[1] * (xc - xa) + w[2] * (xd - xa)
}

/// Clamp to precomputed stencil bounds.
pub fn quasi_monotone_clip(value: f64, bounds: (f64, f64)) -> f64 {
    let (lo, hi) = bounds;
    if value < lo {
        lo
    } else if value > hi {
        hi
    } else {
        value
    }
}

/// The 32-point quasi-tri-cubic kernel over a flat value array.
pub fn laitri(field: &[f64], st: &Stencil32, w: &InterpWeights) -> f64 {
    let g = |i: usize| field[i];
    // zonal + meridional at stencil level 0 (linear)
    let z10 = lin(g(st.lin[0][0]), g(st.lin[0][1]), w.pdlo[1]);
    let z20 = lin(g(st.lin[0][2]), g(st.lin[0][3]), w.pdlo[2]);
    let z0 = lin(z10, z20, w.pdlat);
    // interior levels (12-point horizontal)
    let mut zc = [0.0f64; 2];
    let mut env_lo = [0.0f64; 2];
    let mut env_hi = [0.0f64; 2];
    for l in 0..2 {
        let c = &st.cubic[l];
        let zr0 = lin(g(c[0]), g(c[1]), w.pdlo[0]);
        let zr1 = cubic(g(c[2]), g(c[3]), g(c[4]), g(c[5]), &w.pclo[0]);
        let zr2 = cubic(g(c[6]), g(c[7]), g(c[8]), g(c[9]), &w.pclo[1]);
        let zr3 = lin(g(c[10]), g(c[11]), w.pdlo[3]);
        let mut z = zr0
            + w.pcla[0] * (zr1 - zr0)
            + w.pcla[1] * (zr2 - zr0)
            + w.pcla[2] * (zr3 - zr0);
        // 2x2 inner envelope of this level: B1, C1, B2, C2
        let (b1, c1, b2, c2) = (g(c[3]), g(c[4]), g(c[7]), g(c[8]));
        let lo = b1.min(c1).min(b2).min(c2);
        let hi = b1.max(c1).max(b2).max(c2);
        env_lo[l] = lo;
        env_hi[l] = hi;
        if w.kqm != Kqm::NonMonotone {
            z = quasi_monotone_clip(z, (lo, hi));
        }
        zc[l] = z;
    }
    // stencil level 3 (linear)
    let z13 = lin(g(st.lin[1][0]), g(st.lin[1][1]), w.pdlo[1]);
    let z23 = lin(g(st.lin[1][2]), g(st.lin[1][3]), w.pdlo[2]);
    let z3 = lin(z13, z23, w.pdlat);
    // vertical cubic combine
    let mut pxf = z0
        + w.pvintw[0] * (zc[0] - z0)
        + w.pvintw[1] * (zc[1] - z0)
        + w.pvintw[2] * (z3 - z0);
    match w.kqm {
        Kqm::NonMonotone => {}
        Kqm::HorizontalQuasiMonotone => {
            pxf = quasi_monotone_clip(pxf, stencil_extrema(field, st));
        }
        Kqm::QuasiMonotone => {
            let lo = env_lo[0].min(env_lo[1]);
            let hi = env_hi[0].max(env_hi[1]);
            pxf = quasi_monotone_clip(pxf, (lo, hi));
        }
    }
    pxf
}

/// Min/max over all 32 stencil values.
pub fn stencil_extrema(field: &[f64], st: &Stencil32) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for lvl in &st.lin {
        for &i in lvl {
            lo = lo.min(field[i]);
            hi = hi.max(field[i]);
        }
    }
    for lvl in &st.cubic {
        for &i in lvl {
            lo = lo.min(field[i]);
            hi = hi.max(field[i]);
        }
    }
    (lo, hi)
}

/// Tri-linear interpolation over an 8-point stencil laid out
/// `[lev0: (x0y0, x1y0, x0y1, x1y1), lev1: same]`.
pub fn trilinear(values: &[f64; 8], ax: f64, ay: f64, az: f64) -> f64 {
    let lower = lin(lin(values[0], values[1], ax), lin(values[2], values[3], ax), ay);
    let upper = lin(lin(values[4], values[5], ax), lin(values[6], values[7], ax), ay);
    lin(lower, upper, az)
}

/// Full tri-cubic Lagrange over a 64-point stencil:
/// `values[(lev * 4 + row) * 4 + col]`, cubic in all three directions.
pub fn tricubic64(values: &[f64; 64], wlon: &[f64; 3], wlat: &[f64; 3], wvert: &[f64; 3]) -> f64 {
    let mut zlev = [0.0f64; 4];
    for lev in 0..4 {
        let mut zrow = [0.0f64; 4];
        for row in 0..4 {
            let o = (lev * 4 + row) * 4;
            zrow[row] = cubic(values[o], values[o + 1], values[o + 2], values[o + 3], wlon);
        }
        zlev[lev] = cubic(zrow[0], zrow[1], zrow[2], zrow[3], wlat);
    }
    cubic(zlev[0], zlev[1], zlev[2], zlev[3], wvert)
}

/// Micro-benchmark report for the standalone kernel driver.
#[derive(Debug, Clone)]
pub struct LaitriBenchReport {
    pub npoints: usize,
    pub seconds: f64,
    pub points_per_second: f64,
    pub checksum: u64,
}

/// Standalone kernel micro-benchmark: random departure points over a
/// synthetic field; deterministic checksum over the interpolated values.
pub fn laitri_bench(npoints: usize, nlev: usize, kqm: Kqm, seed: u64) -> LaitriBenchReport {
    use rand::{Rng, SeedableRng};
    let (nx, ny) = (48usize, 40usize);
    let nlev = nlev.max(4);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let field: Vec<f64> = (0..nx * ny * nlev)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let at = |col: usize, row: usize, lev: usize| (lev * ny + row) * nx + col;
    let mut jobs = Vec::with_capacity(npoints);
    for _ in 0..npoints {
        let col = rng.gen_range(1..nx - 2);
        let row = rng.gen_range(1..ny - 2);
        let lev = rng.gen_range(1..nlev - 2);
        let ax = rng.gen_range(0.0..1.0);
        let ay = rng.gen_range(0.0..1.0);
        let az = rng.gen_range(0.0..1.0);
        let st = Stencil32 {
            lin: [
                [
                    at(col, row, lev - 1),
                    at(col + 1, row, lev - 1),
                    at(col, row + 1, lev - 1),
                    at(col + 1, row + 1, lev - 1),
                ],
                [
                    at(col, row, lev + 2),
                    at(col + 1, row, lev + 2),
                    at(col, row + 1, lev + 2),
                    at(col + 1, row + 1, lev + 2),
                ],
            ],
            cubic: [0, 1].map(|dl| {
                let l = lev + dl;
                [
                    at(col, row - 1, l),
                    at(col + 1, row - 1, l),
                    at(col - 1, row, l),
                    at(col, row, l),
                    at(col + 1, row, l),
                    at(col + 2, row, l),
                    at(col - 1, row + 1, l),
                    at(col, row + 1, l),
                    at(col + 1, row + 1, l),
                    at(col + 2, row + 1, l),
                    at(col, row + 2, l),
                    at(col + 1, row + 2, l),
                ]
            }),
        };
        let w = compute_weights([ax; 4], ay, az, kqm);
        jobs.push((st, w));
    }
    let t0 = std::time::Instant::now();
    let mut sum = BitChecksum::new();
    for (st, w) in &jobs {
        sum.push_f64(laitri(&field, st, w));
    }
    let seconds = t0.elapsed().as_secs_f64();
    LaitriBenchReport {
        npoints,
        seconds,
        points_per_second: npoints as f64 / seconds.max(1e-12),
        checksum: sum.finish(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn basis_at_nodes() {
        assert_eq!(f2(0.0), 1.0);
        assert_eq!(f3(0.0), 0.0);
        assert_eq!(f4(0.0), -0.0);
        assert_eq!(f2(1.0), 0.0);
        assert_eq!(f3(1.0), 1.0);
        assert_eq!(f4(1.0), 0.0);
    }

    #[test]
    fn basis_matches_printed_polynomials_at_fraction() {
        let a: f64 = 0.37;
        let w = cubic_basis(a);
        assert!((w[0] - (a + 1.0) * (a - 2.0) * (a - 1.0) / 2.0).abs() < 1e-15);
        assert!((w[1] - (-(a + 1.0) * (a - 2.0) * a / 2.0)).abs() < 1e-15);
        assert!((w[2] - a * (a - 1.0) * (a + 1.0) / 6.0).abs() < 1e-15);
    }

    /// Stencil centered at (col=2, row=1, lev=1) on a small box grid.
    fn test_stencil(nx: usize, ny: usize) -> Stencil32 {
        let at = |col: usize, row: usize, lev: usize| (lev * ny + row) * nx + col;
        let (col, row, lev) = (2usize, 1usize, 1usize);
        Stencil32 {
            lin: [
                [
                    at(col, row, lev - 1),
                    at(col + 1, row, lev - 1),
                    at(col, row + 1, lev - 1),
                    at(col + 1, row + 1, lev - 1),
                ],
                [
                    at(col, row, lev + 2),
                    at(col + 1, row, lev + 2),
                    at(col, row + 1, lev + 2),
                    at(col + 1, row + 1, lev + 2),
                ],
            ],
            cubic: [0usize, 1].map(|dl| {
                let l = lev + dl;
                [
                    at(col, row - 1, l),
                    at(col + 1, row - 1, l),
                    at(col - 1, row, l),
                    at(col, row, l),
                    at(col + 1, row, l),
                    at(col + 2, row, l),
                    at(col - 1, row + 1, l),
                    at(col, row + 1, l),
                    at(col + 1, row + 1, l),
                    at(col + 2, row + 1, l),
                    at(col, row + 2, l),
                    at(col + 1, row + 2, l),
                ]
            }),
        }
    }

    #[test]
    fn node_reproduction_bit_exact() {
        // same-binade values keep the incremental form exact to the bit
        let (nx, ny, nlev) = (6usize, 4usize, 4usize);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let field: Vec<f64> = (0..nx * ny * nlev).map(|_| 1.0 + rng.gen::<f64>()).collect();
        let st = test_stencil(nx, ny);
        for kqm in [
            Kqm::NonMonotone,
            Kqm::HorizontalQuasiMonotone,
            Kqm::QuasiMonotone,
        ] {
            let w = compute_weights([0.0; 4], 0.0, 0.0, kqm);
            let got = laitri(&field, &st, &w);
            let node = st.cubic[0][3]; // B1 of stencil level 1
            assert_eq!(got.to_bits(), field[node].to_bits());
        }
    }

    #[test]
    fn constant_field_bit_exact() {
        let (nx, ny, nlev) = (6usize, 4usize, 4usize);
        let field = vec![0.8125f64; nx * ny * nlev];
        let st = test_stencil(nx, ny);
        for kqm in [
            Kqm::NonMonotone,
            Kqm::HorizontalQuasiMonotone,
            Kqm::QuasiMonotone,
        ] {
            let w = compute_weights([0.3, 0.4, 0.5, 0.6], 0.7, 0.2, kqm);
            assert_eq!(laitri(&field, &st, &w).to_bits(), 0.8125f64.to_bits());
        }
    }

    #[test]
    fn linear_field_reproduced() {
        let (nx, ny, nlev) = (6usize, 4usize, 4usize);
        let mut field = vec![0.0; nx * ny * nlev];
        let plane = |col: usize, row: usize, lev: usize| {
            0.3 * col as f64 - 0.9 * row as f64 + 0.5 * lev as f64 + 2.0
        };
        for lev in 0..nlev {
            for row in 0..ny {
                for col in 0..nx {
                    field[(lev * ny + row) * nx + col] = plane(col, row, lev);
                }
            }
        }
        let st = test_stencil(nx, ny);
        let (ax, ay, az) = (0.37, 0.62, 0.18);
        let w = compute_weights([ax; 4], ay, az, Kqm::NonMonotone);
        let got = laitri(&field, &st, &w);
        // departure point sits at (col = 2 + ax, row = 1 + ay, lev = 1 + az)
        let want = plane(2, 1, 1) + 0.3 * ax - 0.9 * ay + 0.5 * az;
        assert!((got - want).abs() < 1e-13, "{got} vs {want}");
    }

    #[test]
    fn cubic_row_is_exact_for_cubics() {
        // interior cubic row reproduces lambda^3 exactly; outer linear rows
        // are intentionally inexact for the same data
        let vals = [-1.0f64, 0.0, 1.0, 8.0]; // lambda^3 at -1, 0, 1, 2
        for a in [0.1, 0.37, 0.77] {
            let got = cubic(vals[0], vals[1], vals[2], vals[3], &cubic_basis(a));
            assert!((got - a * a * a).abs() < 1e-12);
            let linear = lin(vals[1], vals[2], a);
            assert!((linear - a * a * a).abs() > 1e-3);
        }
    }

    #[test]
    fn full_kernel_cubic_row_exactness() {
        // alpha_lat = 0 and alpha_vert = 0 isolate the row-1 cubic of
        // stencil level 1
        let (nx, ny, nlev) = (6usize, 4usize, 4usize);
        let mut field = vec![0.0; nx * ny * nlev];
        let a = 0.43f64;
        let st = test_stencil(nx, ny);
        let rowvals = [-1.0, 0.0, 1.0, 8.0];
        for (i, &idx) in st.cubic[0][2..6].iter().enumerate() {
            field[idx] = rowvals[i];
        }
        let w = compute_weights([a; 4], 0.0, 0.0, Kqm::NonMonotone);
        let got = laitri(&field, &st, &w);
        assert!((got - a * a * a).abs() < 1e-12, "{got}");
    }

    #[test]
    fn trilinear_unit_corners_center() {
        let vals = [1.0f64; 8];
        assert_eq!(trilinear(&vals, 0.5, 0.5, 0.5), 1.0);
        let mut v2 = [0.0f64; 8];
        v2[3] = 1.0; // (x1, y1, lev0)
        assert!((trilinear(&v2, 0.5, 0.5, 0.0) - 0.25).abs() < 1e-15);
        assert_eq!(trilinear(&v2, 1.0, 1.0, 0.0), 1.0);
    }

    #[test]
    fn tricubic64_reproduces_triquadratics() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let cx: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let cy: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let cz: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let poly = |x: f64, y: f64, z: f64| {
                (cx[0] + cx[1] * x + cx[2] * x * x)
                    * (cy[0] + cy[1] * y + cy[2] * y * y)
                    * (cz[0] + cz[1] * z + cz[2] * z * z)
            };
            let mut vals = [0.0f64; 64];
            for lev in 0..4 {
                for row in 0..4 {
                    for col in 0..4 {
                        vals[(lev * 4 + row) * 4 + col] =
                            poly(col as f64 - 1.0, row as f64 - 1.0, lev as f64 - 1.0);
                    }
                }
            }
            let (ax, ay, az) = (
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
            );
            let got = tricubic64(&vals, &cubic_basis(ax), &cubic_basis(ay), &cubic_basis(az));
            assert!((got - poly(ax, ay, az)).abs() < 1e-11);
        }
    }

    #[test]
    fn clip_behaviour() {
        assert_eq!(quasi_monotone_clip(0.5, (0.0, 1.0)), 0.5);
        assert_eq!(quasi_monotone_clip(1.5, (0.0, 1.0)), 1.0);
        assert_eq!(quasi_monotone_clip(-0.5, (0.0, 1.0)), 0.0);
    }

    #[test]
    fn monotone_modes_never_exceed_stencil_extrema() {
        let (nx, ny, nlev) = (6usize, 4usize, 4usize);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let st = test_stencil(nx, ny);
        for _ in 0..10_000 {
            let field: Vec<f64> = (0..nx * ny * nlev)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let alon = [
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
            ];
            let alat = rng.gen_range(0.0..1.0);
            let avert = rng.gen_range(0.0..1.0);
            let (lo, hi) = stencil_extrema(&field, &st);
            for kqm in [Kqm::HorizontalQuasiMonotone, Kqm::QuasiMonotone] {
                let w = compute_weights(alon, alat, avert, kqm);
                let v = laitri(&field, &st, &w);
                assert!(v >= lo && v <= hi, "{v} outside [{lo}, {hi}] for {kqm:?}");
            }
        }
    }

    #[test]
    fn bench_is_deterministic() {
        let a = laitri_bench(500, 5, Kqm::QuasiMonotone, 42);
        let b = laitri_bench(500, 5, Kqm::QuasiMonotone, 42);
        assert_eq!(a.checksum, b.checksum);
        assert_eq!(a.npoints, 500);
    }
}
