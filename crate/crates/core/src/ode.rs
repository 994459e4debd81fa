//! Adaptive Dormand–Prince 5(4) integrator with dense output.
//!
//! The state is a flat `f64` slice; complex unknowns are stored as
//! interleaved `(re, im)` pairs. A system may project its state back onto a
//! constraint manifold after every accepted step.

use crate::error::{Error, Result};

/// Right-hand side of `y' = f(t, y)`.
pub trait OdeSystem {
    /// Number of real unknowns.
    fn dim(&self) -> usize;

    /// Writes `f(t, y)` into `dy`.
    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]);

    /// Called after every accepted step; returns `true` if `y` was modified.
    fn project(&mut self, _t: f64, _y: &mut [f64]) -> bool {
        false
    }
}

/// Tolerances and step limits.
#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    /// Relative tolerance per component.
    pub rtol: f64,
    /// Absolute tolerance per component.
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    /// Largest admissible step.
    pub h_max: f64,
    /// Accepted plus rejected step budget.
    pub max_steps: usize,
}

impl Dopri5 {
    /// Equal relative and absolute tolerance `tol`.
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

/// Counters reported by a completed run.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct OdeStats {
    /// Accepted steps.
    pub accepted: usize,
    /// Rejected steps.
    pub rejected: usize,
    /// Right-hand-side evaluations.
    pub evaluations: usize,
    /// Smallest accepted step.
    pub h_min_used: f64,
}

/// One accepted step, with the continuous extension over `[t_old, t]`.
pub struct StepView<'a> {
    /// Start of the step.
    pub t_old: f64,
    /// End of the step.
    pub t: f64,
    /// State at `t` (after projection).
    pub y: &'a [f64],
    /// Derivative at `t` (consistent with the projected state).
    pub dy: &'a [f64],
    rcont: &'a [Vec<f64>; 5],
}

impl StepView<'_> {
    /// Fourth-order interpolant of the (unprojected) step at `s ∈ [t_old, t]`.
    pub fn interpolate(&self, s: f64, out: &mut [f64]) {
        let h = self.t - self.t_old;
        let theta = if h > 0.0 { (s - self.t_old) / h } else { 1.0 };
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = self.rcont;
        for i in 0..out.len() {
            out[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
        }
    }
}

/// What the observer asks the integrator to do next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    /// Keep integrating.
    Continue,
    /// Stop after this step.
    Stop,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

impl Dopri5 {
    /// Integrates from `(t0, y)` to `t1 > t0`, leaving the final state in `y`.
    ///
    /// `observer` sees every accepted step and may stop the run early.
    pub fn integrate<S, F>(
        &self,
        sys: &mut S,
        t0: f64,
        t1: f64,
        y: &mut [f64],
        mut observer: F,
    ) -> Result<OdeStats>
    where
        S: OdeSystem,
        F: FnMut(&StepView<'_>) -> Control,
    {
        let n = sys.dim();
        assert_eq!(y.len(), n, "state length must match the system dimension");
        if !(t1 > t0) {
            return Err(crate::error::invalid("t1", "must exceed t0"));
        }
        let mut stats = OdeStats {
            h_min_used: f64::INFINITY,
            ..OdeStats::default()
        };
        let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
        let mut y1 = vec![0.0; n];
        let mut ystage = vec![0.0; n];
        let mut rcont: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);

        let mut t = t0;
        sys.rhs(t, y, &mut k[0]);
        stats.evaluations += 1;
        let span = t1 - t0;
        let h_max = self.h_max.min(span);
        let mut h = match self.h_init {
            Some(h) => h.min(h_max),
            None => {
                let h = self.initial_step(sys, t, y, &k[0], h_max, &mut y1, &mut ystage);
                stats.evaluations += 1;
                h
            }
        };
        let mut fac_old: f64 = 1e-4;
        let mut last_rejected = false;
        const BETA: f64 = 0.04;
        let expo1 = 0.2 - BETA * 0.75;

        loop {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::StepBudget {
                    t,
                    max_steps: self.max_steps,
                });
            }
            let last = t + 1.01 * h >= t1;
            if last {
                h = t1 - t;
            }
            if h <= 1e-14 * t.abs().max(span) {
                return Err(Error::StepUnderflow { t, h });
            }

            for i in 0..n {
                ystage[i] = y[i] + h * A21 * k[0][i];
            }
            sys.rhs(t + C2 * h, &ystage, &mut k[1]);
            for i in 0..n {
                ystage[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
            }
            sys.rhs(t + C3 * h, &ystage, &mut k[2]);
            for i in 0..n {
                ystage[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
            }
            sys.rhs(t + C4 * h, &ystage, &mut k[3]);
            for i in 0..n {
                ystage[i] =
                    y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
            }
            sys.rhs(t + C5 * h, &ystage, &mut k[4]);
            for i in 0..n {
                ystage[i] = y[i]
                    + h * (A61 * k[0][i]
                        + A62 * k[1][i]
                        + A63 * k[2][i]
                        + A64 * k[3][i]
                        + A65 * k[4][i]);
            }
            let t_new = t + h;
            sys.rhs(t_new, &ystage, &mut k[5]);
            for i in 0..n {
                y1[i] = y[i]
                    + h * (A71 * k[0][i]
                        + A73 * k[2][i]
                        + A74 * k[3][i]
                        + A75 * k[4][i]
                        + A76 * k[5][i]);
            }
            sys.rhs(t_new, &y1, &mut k[6]);
            stats.evaluations += 6;

            let mut err = 0.0;
            for i in 0..n {
                let e = h
                    * (E1 * k[0][i]
                        + E3 * k[2][i]
                        + E4 * k[3][i]
                        + E5 * k[4][i]
                        + E6 * k[5][i]
                        + E7 * k[6][i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y1[i].abs());
                err += (e / sc) * (e / sc);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::NonFinite { t: t_new });
            }

            let fac11 = err.powf(expo1);
            let fac = (fac11 / fac_old.powf(BETA) / 0.9).clamp(0.2, 10.0);
            let mut h_new = h / fac;

            if err <= 1.0 {
                fac_old = err.max(1e-4);
                stats.accepted += 1;
                stats.h_min_used = stats.h_min_used.min(h);
                for i in 0..n {
                    let ydiff = y1[i] - y[i];
                    let bspl = h * k[0][i] - ydiff;
                    rcont[0][i] = y[i];
                    rcont[1][i] = ydiff;
                    rcont[2][i] = bspl;
                    rcont[3][i] = ydiff - h * k[6][i] - bspl;
                    rcont[4][i] = h
                        * (D1 * k[0][i]
                            + D3 * k[2][i]
                            + D4 * k[3][i]
                            + D5 * k[4][i]
                            + D6 * k[5][i]
                            + D7 * k[6][i]);
                }
                if sys.project(t_new, &mut y1) {
                    sys.rhs(t_new, &y1, &mut k[6]);
                    stats.evaluations += 1;
                }
                y.copy_from_slice(&y1);
                let (k0, rest) = k.split_at_mut(1);
                k0[0].copy_from_slice(&rest[5]);
                let view = StepView {
                    t_old: t,
                    t: t_new,
                    y,
                    dy: &k[0],
                    rcont: &rcont,
                };
                let control = observer(&view);
                t = t_new;
                if last || control == Control::Stop {
                    return Ok(stats);
                }
                if last_rejected {
                    h_new = h_new.min(h);
                }
                last_rejected = false;
                h = h_new.min(h_max);
            } else {
                stats.rejected += 1;
                h_new = h / (1.0 / 0.2f64).min(fac11 / 0.9);
                last_rejected = true;
                h = h_new;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn initial_step<S: OdeSystem>(
        &self,
        sys: &mut S,
        t: f64,
        y: &[f64],
        f0: &[f64],
        h_max: f64,
        y1: &mut [f64],
        f1: &mut [f64],
    ) -> f64 {
        let n = y.len() as f64;
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..y.len() {
            let sk = self.atol + self.rtol * y[i].abs();
            dnf += (f0[i] / sk).powi(2);
            dny += (y[i] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(h_max);
        for i in 0..y.len() {
            y1[i] = y[i] + h * f0[i];
        }
        sys.rhs(t + h, y1, f1);
        let mut der2 = 0.0;
        for i in 0..y.len() {
            let sk = self.atol + self.rtol * y[i].abs();
            der2 += ((f1[i] - f0[i]) / sk).powi(2);
        }
        let der2 = (der2 / n).sqrt() / h;
        let der12 = der2.max((dnf / n).sqrt());
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(0.2)
        };
        (100.0 * h).min(h1).min(h_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;
    impl OdeSystem for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = y[1];
            dy[1] = -y[0];
        }
    }

    #[test]
    fn harmonic_oscillator_reaches_tolerance() {
        let mut y = [1.0, 0.0];
        let stats = Dopri5::with_tol(1e-11)
            .integrate(&mut Oscillator, 0.0, 10.0, &mut y, |_| Control::Continue)
            .unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((y[1] + 10f64.sin()).abs() < 1e-8);
        assert!(stats.accepted > 10);
    }

    #[test]
    fn dense_output_matches_exact_solution() {
        let mut y = [1.0, 0.0];
        let mut worst: f64 = 0.0;
        Dopri5::with_tol(1e-10)
            .integrate(&mut Oscillator, 0.0, 5.0, &mut y, |step| {
                let mut buf = [0.0; 2];
                let mid = 0.5 * (step.t_old + step.t);
                step.interpolate(mid, &mut buf);
                worst = worst.max((buf[0] - mid.cos()).abs());
                Control::Continue
            })
            .unwrap();
        assert!(worst < 1e-7, "dense output error {worst}");
    }

    #[test]
    fn observer_can_stop_early() {
        let mut y = [1.0, 0.0];
        let mut count = 0;
        Dopri5::with_tol(1e-8)
            .integrate(&mut Oscillator, 0.0, 100.0, &mut y, |_| {
                count += 1;
                if count == 3 {
                    Control::Stop
                } else {
                    Control::Continue
                }
            })
            .unwrap();
        assert_eq!(count, 3);
    }
}
