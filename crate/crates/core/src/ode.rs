//! Adaptive Dormand–Prince 5(4) integrator over real or complex vectors.

use thiserror::Error;

use crate::scalar::{Field, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("step budget of {0} exhausted")]
    StepBudget(usize),
}

/// Right-hand side `dy/dt = f(t, y)`.
pub trait OdeSystem<T: Real, F: Field<T>> {
    fn rhs(&self, t: T, y: &[F], dy: &mut [F]);
}

impl<T: Real, F: Field<T>, G: Fn(T, &[F], &mut [F])> OdeSystem<T, F> for G {
    fn rhs(&self, t: T, y: &[F], dy: &mut [F]) {
        self(t, y, dy)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StepControl<T: Real> {
    pub atol: T,
    pub rtol: T,
    /// Measure error per unit time (|e| ≤ tol·h) instead of per step.
    pub per_unit_time: bool,
    pub h_init: T,
    pub h_max: T,
    pub h_min: T,
    pub max_steps: usize,
}

impl<T: Real> StepControl<T> {
    /// Absolute error-per-unit-time control, the mode used for normalised
    /// quantum states.
    pub fn per_unit_time(tol: T) -> Self {
        Self {
            atol: tol,
            rtol: T::zero(),
            per_unit_time: true,
            h_init: T::lit(1e-3),
            h_max: T::infinity(),
            h_min: T::lit(1e-14),
            max_steps: 50_000_000,
        }
    }

    pub fn mixed(atol: T, rtol: T) -> Self {
        Self { atol, rtol, per_unit_time: false, ..Self::per_unit_time(atol) }
    }
}

/// What a post-step hook did to the state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HookAction<T> {
    Untouched,
    /// State multiplied by a scalar; valid to rescale cached stages only for
    /// a right-hand side linear in `y`.
    ScaledBy(T),
    Modified,
}

// Dormand–Prince tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub struct DormandPrince<T: Real, F: Field<T>> {
    t: T,
    y: Vec<F>,
    h: T,
    ctl: StepControl<T>,
    k: [Vec<F>; 7],
    tmp: Vec<F>,
    k1_valid: bool,
    accepted: usize,
    rejected: usize,
    last_h: T,
    a: [[T; 6]; 7],
    c: [T; 7],
    e: [T; 7],
}

impl<T: Real, F: Field<T>> DormandPrince<T, F> {
    pub fn new(t0: T, y0: Vec<F>, ctl: StepControl<T>) -> Self {
        let n = y0.len();
        let z = || vec![F::default(); n];
        let mut a = [[T::zero(); 6]; 7];
        for (ar, src) in a.iter_mut().zip(A.iter()) {
            for (x, &s) in ar.iter_mut().zip(src.iter()) {
                *x = T::lit(s);
            }
        }
        Self {
            t: t0,
            y: y0,
            h: ctl.h_init,
            ctl,
            k: [z(), z(), z(), z(), z(), z(), z()],
            tmp: z(),
            k1_valid: false,
            accepted: 0,
            rejected: 0,
            last_h: ctl.h_init,
            a,
            c: C.map(T::lit),
            e: E.map(T::lit),
        }
    }

    pub fn t(&self) -> T {
        self.t
    }

    pub fn y(&self) -> &[F] {
        &self.y
    }

    pub fn accepted_steps(&self) -> usize {
        self.accepted
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    /// Size of the last accepted step.
    pub fn last_step(&self) -> T {
        self.last_h
    }

    fn stage_state(&mut self, s: usize, h: T) {
        let n = self.y.len();
        for i in 0..n {
            let mut acc = self.y[i];
            for j in 0..s {
                let aij = self.a[s][j];
                if aij != T::zero() {
                    acc += self.k[j][i] * (aij * h);
                }
            }
            self.tmp[i] = acc;
        }
    }

    /// Integrates up to exactly `t_end`, calling `hook` after every accepted
    /// step.
    pub fn advance_to<S, H>(&mut self, sys: &S, t_end: T, mut hook: H) -> Result<(), OdeError>
    where
        S: OdeSystem<T, F>,
        H: FnMut(T, &mut [F]) -> HookAction<T>,
    {
        let n = self.y.len();
        let to_f = |x: T| x.to_f64().unwrap_or(f64::NAN);
        while self.t < t_end {
            if self.accepted + self.rejected >= self.ctl.max_steps {
                return Err(OdeError::StepBudget(self.ctl.max_steps));
            }
            let remaining = t_end - self.t;
            let mut h = self.h.min(self.ctl.h_max);
            let last = h >= remaining * (T::one() - T::lit(1e-12));
            if last {
                h = remaining;
            }
            if !self.k1_valid {
                let (k0, _) = self.k.split_at_mut(1);
                sys.rhs(self.t, &self.y, &mut k0[0]);
                self.k1_valid = true;
            }
            for s in 1..7 {
                self.stage_state(s, h);
                let ts = self.t + self.c[s] * h;
                let (_, rest) = self.k.split_at_mut(s);
                sys.rhs(ts, &self.tmp, &mut rest[0]);
            }
            // tmp now holds the 5th-order solution (row 7 of A equals b).
            let mut err = T::zero();
            let mut finite = true;
            for i in 0..n {
                let mut ei = F::default();
                for s in 0..7 {
                    ei += self.k[s][i] * (self.e[s] * h);
                }
                let scale = self.ctl.atol + self.ctl.rtol * self.y[i].modulus().max(self.tmp[i].modulus());
                let r = ei.modulus() / scale;
                if !r.is_finite() {
                    finite = false;
                }
                err = err.max(r);
            }
            if !finite {
                if h <= self.ctl.h_min {
                    return Err(OdeError::NonFinite { t: to_f(self.t) });
                }
                self.h = h * T::lit(0.1);
                self.rejected += 1;
                continue;
            }
            if self.ctl.per_unit_time {
                err = err / h;
            }
            if err <= T::one() {
                self.t = if last { t_end } else { self.t + h };
                std::mem::swap(&mut self.y, &mut self.tmp);
                self.k.swap(0, 6);
                self.accepted += 1;
                self.last_h = h;
                match hook(self.t, &mut self.y) {
                    HookAction::Untouched => {}
                    HookAction::ScaledBy(f) => self.k[0].iter_mut().for_each(|x| *x = *x * f),
                    HookAction::Modified => self.k1_valid = false,
                }
                let grow = if err == T::zero() {
                    T::lit(5.0)
                } else {
                    (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
                };
                // A clamped final step says nothing about the natural size.
                if !last {
                    self.h = h * grow;
                }
            } else {
                let shrink = (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.1));
                self.h = h * shrink;
                self.rejected += 1;
                if self.h < self.ctl.h_min {
                    return Err(OdeError::StepUnderflow { t: to_f(self.t), h: to_f(self.h) });
                }
            }
        }
        Ok(())
    }

    /// Replaces the state (e.g. after an external renormalisation).
    pub fn set_state(&mut self, y: Vec<F>) {
        assert_eq!(y.len(), self.y.len());
        self.y = y;
        self.k1_valid = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    #[test]
    fn exponential_decay() {
        let sys = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -y[0];
        let mut dp = DormandPrince::new(0.0, vec![1.0], StepControl::mixed(1e-13, 1e-12));
        dp.advance_to(&sys, 5.0, |_, _| HookAction::Untouched).unwrap();
        assert!((dp.y()[0] - (-5f64).exp()).abs() < 1e-12);
        assert_eq!(dp.t(), 5.0);
    }

    #[test]
    fn complex_rotation() {
        // dy/dt = -i ω y
        let w = 3.0;
        let sys = move |_t: f64, y: &[Complex<f64>], dy: &mut [Complex<f64>]| dy[0] = Complex::new(0.0, -w) * y[0];
        let mut dp = DormandPrince::new(0.0, vec![Complex::new(1.0, 0.0)], StepControl::per_unit_time(1e-11));
        dp.advance_to(&sys, 10.0, |_, _| HookAction::Untouched).unwrap();
        let exact = Complex::new(0.0, -w * 10.0).exp();
        assert!((dp.y()[0] - exact).norm() < 1e-9);
    }

    #[test]
    fn rescaling_hook_keeps_linear_solution() {
        let sys = |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0];
        let mut dp = DormandPrince::new(0.0, vec![1.0], StepControl::mixed(1e-14, 1e-12));
        let mut log = 0.0;
        dp.advance_to(&sys, 20.0, |_, y| {
            let s = y[0];
            log += s.ln();
            y[0] = 1.0;
            HookAction::ScaledBy(1.0 / s)
        })
        .unwrap();
        assert!((log - 20.0).abs() < 1e-9);
    }
}
