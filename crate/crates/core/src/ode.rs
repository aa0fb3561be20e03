//! Radial Lane–Emden shooting with an adaptive Dormand–Prince 5(4) pair.
//!
//! Integrates `u″ + (N−1)/r u′ + [u]₊^q = 0` from the centre, carrying the
//! running integrals `∫ [u]₊^q dx` and `∫ [u]₊^{q+1} dx` over the ball of
//! radius `r` as extra state components.

use crate::error::{Error, Result};
use crate::grid::unit_ball_volume;

const STATE: usize = 4;
type State = [f64; STATE];

// Dormand–Prince tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Shooting problem `u(0) = center`, `u′(0) = 0`.
#[derive(Debug, Clone, Copy)]
pub struct LaneEmden {
    pub dim: usize,
    pub exponent: f64,
    pub center: f64,
    pub tol: f64,
    pub r_max: f64,
}

/// Outcome of shooting to the first zero.
#[derive(Debug, Clone)]
pub struct FirstZero {
    pub radius: f64,
    /// u′ at the zero.
    pub slope: f64,
    /// ∫_{B_r0} u^q dx.
    pub mass: f64,
    /// ∫_{B_r0} u^{q+1} dx.
    pub mass_next: f64,
    /// Samples of u at `radius·k/n`, `k = 0..=n` (only when requested).
    pub samples: Vec<f64>,
}

impl LaneEmden {
    pub const DEFAULT_R_MAX: f64 = 50.0;

    pub fn new(dim: usize, exponent: f64, center: f64, tol: f64) -> Self {
        Self {
            dim,
            exponent,
            center,
            tol,
            r_max: Self::DEFAULT_R_MAX,
        }
    }

    fn source(&self, u: f64) -> f64 {
        if u > 0.0 {
            u.powf(self.exponent)
        } else if self.exponent == 0.0 && u == 0.0 {
            1.0
        } else {
            0.0
        }
    }

    fn rhs(&self, r: f64, y: &State) -> State {
        let sphere = self.dim as f64 * unit_ball_volume(self.dim);
        let shell = sphere * r.powi(self.dim as i32 - 1);
        let s = self.source(y[0]);
        let pos = y[0].max(0.0);
        [
            y[1],
            -(self.dim as f64 - 1.0) / r * y[1] - s,
            shell * s,
            shell * s * pos,
        ]
    }

    /// Series start `u ≈ c + a r² + b r⁴` off the coordinate singularity.
    fn series(&self, r: f64) -> State {
        let n = self.dim as f64;
        let q = self.exponent;
        let c = self.center;
        let cq = c.powf(q);
        let a = -cq / (2.0 * n);
        let b = q * c.powf(2.0 * q - 1.0) / (8.0 * n * (n + 2.0));
        let omega = unit_ball_volume(self.dim);
        let rn = r.powi(self.dim as i32);
        // Leading terms of the two running integrals.
        let m1 = omega * cq * rn + self.dim as f64 * omega * q * c.powf(q - 1.0) * a * r.powi(self.dim as i32 + 2)
            / (n + 2.0);
        let m2 = omega * cq * c * rn
            + self.dim as f64 * omega * (q + 1.0) * cq * a * r.powi(self.dim as i32 + 2) / (n + 2.0);
        [
            c + a * r * r + b * r.powi(4),
            2.0 * a * r + 4.0 * b * r.powi(3),
            m1,
            m2,
        ]
    }

    fn step(&self, r: f64, y: &State, h: f64) -> (State, f64) {
        let mut k = [[0.0; STATE]; 7];
        k[0] = self.rhs(r, y);
        for s in 1..7 {
            let mut yt = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for c in 0..STATE {
                        yt[c] += h * a * kj[c];
                    }
                }
            }
            k[s] = self.rhs(r + C[s] * h, &yt);
        }
        let mut y5 = *y;
        let mut err = 0.0_f64;
        for c in 0..STATE {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][c];
                d4 += B4[s] * k[s][c];
            }
            y5[c] += h * d5;
            // Error control on (u, u′); the integrals follow passively.
            if c < 2 {
                let scale = self.tol * (1.0 + y[c].abs().max(y5[c].abs()));
                err = err.max((h * (d5 - d4)).abs() / scale);
            }
        }
        (y5, err)
    }

    fn start_radius(&self) -> f64 {
        // Series truncation error is O(r⁶); keep it far below tol.
        (self.tol.max(1e-14) * 1e-2).powf(1.0 / 6.0).min(1e-2)
            * (self.center.powf(self.exponent - 1.0)).max(1e-12).powf(-0.5).min(1.0)
    }

    /// Shoot to the first zero of `u`. When `samples > 0`, the profile is also
    /// recorded on `samples + 1` uniform points of `[0, r0]`.
    pub fn first_zero(&self, samples: usize) -> Result<FirstZero> {
        if !(self.center > 0.0) {
            return Err(Error::InvalidParameter("center value must be positive".into()));
        }
        let (r0, slope, mass, mass_next) = self.integrate_to_zero()?;
        let samples = if samples > 0 {
            self.sample(r0, samples)?
        } else {
            Vec::new()
        };
        Ok(FirstZero {
            radius: r0,
            slope,
            mass,
            mass_next,
            samples,
        })
    }

    fn integrate_to_zero(&self) -> Result<(f64, f64, f64, f64)> {
        let mut r = self.start_radius();
        let mut y = self.series(r);
        let mut h = r;
        let mut steps = 0usize;
        loop {
            if r >= self.r_max {
                return Err(Error::NoZeroFound {
                    r_max: self.r_max,
                    exponent: self.exponent,
                });
            }
            steps += 1;
            if steps > 5_000_000 {
                return Err(Error::Integrator {
                    r,
                    reason: "step budget exhausted".into(),
                });
            }
            let h_try = h.min(self.r_max - r).max(1e-14);
            let (y_new, err) = self.step(r, &y, h_try);
            if !y_new.iter().all(|v| v.is_finite()) {
                return Err(Error::Integrator {
                    r,
                    reason: "non-finite state".into(),
                });
            }
            if err <= 1.0 {
                if y_new[0] <= 0.0 {
                    let h_zero = self.locate_zero(r, &y, h_try)?;
                    let (yz, _) = self.step(r, &y, h_zero);
                    return Ok((r + h_zero, yz[1], yz[2], yz[3]));
                }
                r += h_try;
                y = y_new;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = h_try * factor;
        }
    }

    /// Step length from `r` that lands on `u = 0`, by safeguarded secant
    /// iteration on the one-step map.
    fn locate_zero(&self, r: f64, y: &State, h: f64) -> Result<f64> {
        let mut lo = 0.0;
        let mut f_lo = y[0];
        let mut hi = h;
        let mut f_hi = self.step(r, y, h).0[0];
        let mut side = 0i8;
        for _ in 0..200 {
            let mut x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
            if !(x > lo && x < hi) {
                x = 0.5 * (lo + hi);
            }
            let fx = self.step(r, y, x).0[0];
            if fx.abs() < 1e-15 * self.center || hi - lo < 1e-15 * (r + h) {
                return Ok(x);
            }
            if fx > 0.0 {
                lo = x;
                f_lo = fx;
                if side == 1 {
                    f_hi *= 0.5;
                }
                side = 1;
            } else {
                hi = x;
                f_hi = fx;
                if side == -1 {
                    f_lo *= 0.5;
                }
                side = -1;
            }
        }
        Err(Error::Integrator {
            r,
            reason: "zero location did not converge".into(),
        })
    }

    fn sample(&self, r0: f64, n: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; n + 1];
        let r_start = self.start_radius();
        let dr = r0 / n as f64;
        let mut r = r_start;
        let mut y = self.series(r);
        let mut h = r;
        out[0] = self.center;
        for (k, slot) in out.iter_mut().enumerate().take(n).skip(1) {
            let target = dr * k as f64;
            if target <= r_start {
                *slot = self.series(target)[0];
                continue;
            }
            while r < target {
                let clipped = h >= target - r;
                let h_try = if clipped { target - r } else { h };
                let (y_new, err) = self.step(r, &y, h_try);
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if err <= 1.0 {
                    r = if clipped { target } else { r + h_try };
                    y = y_new;
                    if !clipped {
                        h = h_try * factor;
                    }
                } else {
                    h = h_try * factor;
                }
            }
            *slot = y[0];
        }
        out[n] = 0.0;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_case_hits_bessel_zero() {
        // q = 1, N = 2: u = J0(r), first zero j_{0,1}.
        let s = LaneEmden::new(2, 1.0, 1.0, 1e-12).first_zero(0).unwrap();
        assert!((s.radius - 2.404_825_557_695_773).abs() < 1e-9, "{}", s.radius);
        // N = 3: u = sin r / r, first zero π.
        let s = LaneEmden::new(3, 1.0, 1.0, 1e-12).first_zero(0).unwrap();
        assert!((s.radius - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn torsion_case_is_exact() {
        // q = 0: u = 1 − r²/(2N), zero at √(2N).
        let s = LaneEmden::new(3, 0.0, 1.0, 1e-12).first_zero(8).unwrap();
        assert!((s.radius - 6f64.sqrt()).abs() < 1e-10);
        for (k, v) in s.samples.iter().enumerate() {
            let r = s.radius * k as f64 / 8.0;
            assert!((v - (1.0 - r * r / 6.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn flux_balances_mass() {
        // ∫_{B_r0} u^q = −|S^{N−1}| r0^{N−1} u′(r0).
        for (dim, q) in [(2, 2.0), (2, 3.0), (3, 2.0), (3, 1.5)] {
            let s = LaneEmden::new(dim, q, 1.0, 1e-11).first_zero(0).unwrap();
            let sphere = dim as f64 * unit_ball_volume(dim);
            let flux = -sphere * s.radius.powi(dim as i32 - 1) * s.slope;
            assert!((flux - s.mass).abs() < 1e-8 * s.mass, "{flux} vs {}", s.mass);
        }
    }

    #[test]
    fn supercritical_fails_to_find_zero() {
        // q = 7 > N/(N−2) + ... in three dimensions the solution never vanishes.
        let mut le = LaneEmden::new(3, 7.0, 1.0, 1e-8);
        le.r_max = 20.0;
        assert!(matches!(le.first_zero(0), Err(Error::NoZeroFound { .. })));
    }
}
