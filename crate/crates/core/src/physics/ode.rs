//! Adaptive Dormand–Prince 5(4) stepping for complex linear systems.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Right-hand side `dy/dt = f(t, y)`.
pub trait Rhs {
    fn eval(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

#[derive(Debug, Clone, Copy)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

// Butcher tableau
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 50_000_000;

/// Integrator state carried between calls so that successive sample
/// intervals reuse the last accepted step size.
#[derive(Debug, Clone)]
pub struct DormandPrince {
    tol: f64,
    h: f64,
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    next: Vec<C64>,
    pub stats: StepStats,
}

impl DormandPrince {
    pub fn new(dim: usize, tol: f64, initial_step: f64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
        }
        let z = vec![C64::new(0.0, 0.0); dim];
        Ok(DormandPrince {
            tol,
            h: initial_step,
            k: std::array::from_fn(|_| z.clone()),
            tmp: z.clone(),
            next: z,
            stats: StepStats { accepted: 0, rejected: 0 },
        })
    }

    /// Advances `y` from `t0` to `t1` in place.
    pub fn integrate<F: Rhs>(&mut self, f: &F, y: &mut [C64], t0: f64, t1: f64) -> Result<()> {
        if t1 < t0 {
            return Err(Error::invalid("cannot integrate backwards"));
        }
        let mut t = t0;
        let mut fsal_valid = false;
        let mut steps = 0usize;
        while t < t1 {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::Integrator(format!("exceeded {MAX_STEPS} steps at t={t}")));
            }
            let last = t + self.h >= t1;
            let h = if last { t1 - t } else { self.h };
            if !fsal_valid {
                f.eval(t, y, &mut self.k[0]);
            }
            let err = self.attempt(f, y, t, h);
            if !err.is_finite() {
                return Err(Error::Integrator(format!("non-finite error estimate at t={t}")));
            }
            if err <= 1.0 {
                y.copy_from_slice(&self.next);
                self.k.swap(0, 6);
                fsal_valid = true;
                t = if last { t1 } else { t + h };
                self.stats.accepted += 1;
            } else {
                fsal_valid = true; // k[0] untouched
                self.stats.rejected += 1;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // a clipped final step says nothing about the natural step size
            if !(last && err <= 1.0) {
                self.h = h * factor;
            }
            if self.h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integrator(format!("step size underflow at t={t}")));
            }
        }
        Ok(())
    }

    fn attempt<F: Rhs>(&mut self, f: &F, y: &[C64], t: f64, h: f64) -> f64 {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;

        for i in 0..n {
            tmp[i] = y[i] + k1[i] * (h * A21);
        }
        f.eval(t + C2 * h, tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
        }
        f.eval(t + C3 * h, tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
        }
        f.eval(t + C4 * h, tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
        }
        f.eval(t + C5 * h, tmp, k5);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
        }
        f.eval(t + h, tmp, k6);
        for i in 0..n {
            self.next[i] = y[i] + (k1[i] * B1 + k3[i] * B3 + k4[i] * B4 + k5[i] * B5 + k6[i] * B6) * h;
        }
        f.eval(t + h, &self.next, k7);

        let mut err = 0.0f64;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let scale = self.tol * (1.0 + y[i].norm().max(self.next[i].norm()));
            err = err.max(e.norm() / scale);
        }
        err
    }
}
