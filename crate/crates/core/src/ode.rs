//! Adaptive Dormand–Prince 5(4) integrator with dense output.

use crate::error::{HtypeError, Result};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-10, h0: 0.0, max_steps: 200_000 }
    }
}

impl OdeOptions {
    pub fn tol(tol: f64) -> Self {
        OdeOptions { rtol: tol, atol: tol, ..Default::default() }
    }
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

/// One accepted step's interpolation data.
#[derive(Clone, Debug)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    rc: [Vec<f64>; 5],
}

impl DenseStep {
    /// Interpolate the listed components at time `t` inside the step.
    pub fn eval_into(&self, t: f64, comps: &[usize], out: &mut [f64]) {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        for (o, &k) in out.iter_mut().zip(comps) {
            *o = self.rc[0][k]
                + s * (self.rc[1][k] + s1 * (self.rc[2][k] + s * (self.rc[3][k] + s1 * self.rc[4][k])));
        }
    }
}

/// Result of an integration: final state plus optional dense steps.
pub struct Solution {
    pub y: Vec<f64>,
    pub steps: usize,
    pub dense: Vec<DenseStep>,
}

impl Solution {
    /// Evaluate components at sorted times within the integrated range.
    pub fn eval_sorted(&self, times: &[f64], comps: &[usize], mut f: impl FnMut(usize, &[f64])) {
        let mut buf = vec![0.0; comps.len()];
        let mut k = 0;
        for (idx, &t) in times.iter().enumerate() {
            while k + 1 < self.dense.len() && (t - self.dense[k].t0) * self.dense[k].h.signum() > self.dense[k].h.abs() {
                k += 1;
            }
            self.dense[k].eval_into(t, comps, &mut buf);
            f(idx, &buf);
        }
    }
}

/// Integrate `y' = f(t, y)` from `t0` to each time in `stops` (monotone in
/// the direction of travel), landing exactly on each. `on_stop` receives
/// the state at every stop. With `keep_dense` the interpolants are kept.
pub fn integrate<F, G>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    stops: &[f64],
    opts: &OdeOptions,
    keep_dense: bool,
    mut on_stop: G,
) -> Result<Solution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    G: FnMut(usize, f64, &[f64]) -> Result<()>,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut dense = Vec::new();
    if stops.is_empty() {
        return Ok(Solution { y, steps: 0, dense });
    }
    let dir = if stops[stops.len() - 1] >= t0 { 1.0 } else { -1.0 };
    let span = (stops[stops.len() - 1] - t0).abs();
    let mut h = if opts.h0 > 0.0 { opts.h0 } else { (0.05 * span).max(1e-6) };
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut yt = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    f(t, &y, &mut k1)?;
    let mut steps = 0usize;
    let mut fac_old: f64 = 1e-4;
    for (si, &ts) in stops.iter().enumerate() {
        while (ts - t) * dir > 0.0 {
            if steps >= opts.max_steps {
                return Err(HtypeError::Integration(format!("step limit reached at t={t}")));
            }
            let remaining = (ts - t).abs();
            let mut last = false;
            if h >= remaining * (1.0 - 1e-12) {
                h = remaining;
                last = true;
            }
            let hs = h * dir;
            for i in 0..n {
                yt[i] = y[i] + hs * A21 * k1[i];
            }
            f(t + C2 * hs, &yt, &mut k2)?;
            for i in 0..n {
                yt[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + C3 * hs, &yt, &mut k3)?;
            for i in 0..n {
                yt[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + C4 * hs, &yt, &mut k4)?;
            for i in 0..n {
                yt[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + C5 * hs, &yt, &mut k5)?;
            for i in 0..n {
                yt[i] = y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(t + hs, &yt, &mut k6)?;
            for i in 0..n {
                ynew[i] = y[i] + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            f(t + hs, &ynew, &mut k7)?;
            steps += 1;
            let mut err = 0.0;
            for i in 0..n {
                let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sc) * (e / sc);
            }
            err = (err / n as f64).sqrt();
            if !err.is_finite() {
                h *= 0.2;
                if h < 1e-14 * span.max(1.0) {
                    return Err(HtypeError::Integration(format!("non-finite state near t={t}")));
                }
                continue;
            }
            // PI step-size control (Hairer)
            let fac11 = err.powf(0.2 - 0.04 * 0.75);
            let mut fac = fac11 / fac_old.powf(0.04);
            fac = (fac / 0.9).clamp(0.1, 5.0);
            if err <= 1.0 {
                fac_old = err.max(1e-4);
                if keep_dense {
                    let mut rc1 = vec![0.0; n];
                    let mut rc2 = vec![0.0; n];
                    let mut rc3 = vec![0.0; n];
                    let mut rc4 = vec![0.0; n];
                    for i in 0..n {
                        let ydiff = ynew[i] - y[i];
                        let bspl = hs * k1[i] - ydiff;
                        rc1[i] = ydiff;
                        rc2[i] = bspl;
                        rc3[i] = ydiff - hs * k7[i] - bspl;
                        rc4[i] = hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                    }
                    dense.push(DenseStep { t0: t, h: hs, rc: [y.clone(), rc1, rc2, rc3, rc4] });
                }
                t = if last { ts } else { t + hs };
                std::mem::swap(&mut y, &mut ynew);
                std::mem::swap(&mut k1, &mut k7);
                let hnew = h / fac;
                if !last {
                    h = hnew;
                } else {
                    h = h.max(hnew);
                }
            } else {
                h /= (fac11 / 0.9).min(10.0);
            }
        }
        on_stop(si, t, &y)?;
    }
    Ok(Solution { y, steps, dense })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        };
        let mut seen = Vec::new();
        let sol = integrate(rhs, 0.0, &[1.0, 0.0], &[1.0, 2.0], &OdeOptions::tol(1e-12), true, |_, t, y| {
            seen.push((t, y[0]));
            Ok(())
        })
        .unwrap();
        for (t, x) in &seen {
            assert!((x - t.cos()).abs() < 1e-10);
        }
        let mut mid = 0.0;
        sol.eval_sorted(&[1.37], &[0], |_, v| mid = v[0]);
        assert!((mid - 1.37f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn backward_then_forward() {
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = t * y[0];
            Ok(())
        };
        let a = integrate(rhs, 0.0, &[1.0], &[-1.0], &OdeOptions::tol(1e-12), false, |_, _, _| Ok(())).unwrap();
        assert!((a.y[0] - 0.5f64.exp()).abs() < 1e-10);
    }
}
