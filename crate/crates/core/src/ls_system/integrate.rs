//! Fixed-step RK4 with bisection refinement of boundary crossings.

use super::{AaBox, LSField};
use crate::error::{Error, Result};

/// Classical fourth-order Runge–Kutta stepper with reusable buffers.
pub struct Rk4<'a> {
    field: &'a LSField,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl<'a> Rk4<'a> {
    pub fn new(field: &'a LSField) -> Self {
        let d = field.dim();
        Self { field, k1: vec![0.0; d], k2: vec![0.0; d], k3: vec![0.0; d], k4: vec![0.0; d], tmp: vec![0.0; d] }
    }

    /// One step of signed size `h`; a negative `h` integrates the reversed
    /// flow. Returns false if the new state is not finite.
    pub fn step(&mut self, x: &mut [f64], h: f64) -> bool {
        let f = self.field;
        f.eval_into(x, &mut self.k1);
        for i in 0..x.len() {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        f.eval_into(&self.tmp, &mut self.k2);
        for i in 0..x.len() {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        f.eval_into(&self.tmp, &mut self.k3);
        for i in 0..x.len() {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        f.eval_into(&self.tmp, &mut self.k4);
        let mut finite = true;
        for i in 0..x.len() {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
            finite &= x[i].is_finite();
        }
        finite
    }
}

fn check_step(step: f64) -> Result<()> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("step must be positive, got {step}")))
    }
}

/// Splits `|t|` into full steps and a final partial step.
fn schedule(t: f64, step: f64) -> (usize, f64) {
    let n = (t.abs() / step).floor();
    let rem = t.abs() - n * step;
    if rem <= 1e-12 * step {
        (n as usize, 0.0)
    } else {
        (n as usize, rem)
    }
}

/// `φ(t, x)` by fixed-step RK4; `t` may be negative.
pub fn flow_map(f: &LSField, x: &[f64], t: f64, step: f64) -> Result<Vec<f64>> {
    check_step(step)?;
    if x.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: x.len() });
    }
    let mut y = x.to_vec();
    if t == 0.0 {
        return Ok(y);
    }
    let sign = t.signum();
    let (n, rem) = schedule(t, step);
    let mut rk = Rk4::new(f);
    for i in 0..n {
        if !rk.step(&mut y, sign * step) {
            return Err(Error::NonFinite { time: sign * (i + 1) as f64 * step });
        }
    }
    if rem > 0.0 && !rk.step(&mut y, sign * rem) {
        return Err(Error::NonFinite { time: t });
    }
    Ok(y)
}

/// Samples of a forward orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub step: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> &[f64] {
        self.points.last().expect("trajectories hold at least the start point")
    }
}

/// Forward samples of `φ(·, x)` on `[0, t]`.
pub fn integrate_trajectory(f: &LSField, x: &[f64], t: f64, step: f64) -> Result<Trajectory> {
    check_step(step)?;
    if t < 0.0 {
        return Err(Error::InvalidArgument("trajectories are sampled forward in time".into()));
    }
    let (n, rem) = schedule(t, step);
    let mut times = vec![0.0];
    let mut points = vec![x.to_vec()];
    let mut y = x.to_vec();
    let mut rk = Rk4::new(f);
    for i in 0..n {
        if !rk.step(&mut y, step) {
            return Err(Error::NonFinite { time: (i + 1) as f64 * step });
        }
        times.push((i + 1) as f64 * step);
        points.push(y.clone());
    }
    if rem > 0.0 {
        if !rk.step(&mut y, rem) {
            return Err(Error::NonFinite { time: t });
        }
        times.push(t);
        points.push(y);
    }
    Ok(Trajectory { times, points, step })
}

/// First time (in `|t|`) at which the orbit of `x` over `[0, horizon]` (or
/// `[horizon, 0]` for negative horizons) fails `inside`, refined by bisection
/// to `step/16`. `None` if every sample stays inside.
///
/// A non-finite state counts as leaving.
pub fn first_exit(
    f: &LSField,
    x: &[f64],
    horizon: f64,
    step: f64,
    inside: impl Fn(&[f64]) -> bool,
) -> Result<Option<f64>> {
    check_step(step)?;
    if !inside(x) {
        return Ok(Some(0.0));
    }
    if horizon == 0.0 {
        return Ok(None);
    }
    let sign = horizon.signum();
    let (n, rem) = schedule(horizon, step);
    let mut rk = Rk4::new(f);
    let mut y = x.to_vec();
    let mut t = 0.0;
    let total = n + usize::from(rem > 0.0);
    for i in 0..total {
        let h = if i < n { step } else { rem };
        let prev = y.clone();
        let finite = rk.step(&mut y, sign * h);
        if !finite || !inside(&y) {
            let (mut lo, mut hi) = (0.0, h);
            let tol = step / 16.0;
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                let mut z = prev.clone();
                if rk.step(&mut z, sign * mid) && inside(&z) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Some(t + hi));
        }
        t += h;
    }
    Ok(None)
}

/// Outcome of [`trajectory_in_set`].
#[derive(Clone, Debug, PartialEq)]
pub struct SetMembership {
    pub stays: bool,
    /// Unsigned time from the start to the first sampled crossing.
    pub first_exit_time: Option<f64>,
    pub exit_forward: Option<bool>,
}

/// Whether the orbit of `x` over `[t_minus, t_plus]` stays in the box; the
/// forward half is examined first.
pub fn trajectory_in_set(
    f: &LSField,
    x: &[f64],
    t_minus: f64,
    t_plus: f64,
    u: &AaBox,
    step: f64,
) -> Result<SetMembership> {
    if t_minus > 0.0 || t_plus < 0.0 {
        return Err(Error::InvalidArgument("need t_minus <= 0 <= t_plus".into()));
    }
    for (horizon, forward) in [(t_plus, true), (t_minus, false)] {
        if let Some(t) = first_exit(f, x, horizon, step, |y| u.contains(y))? {
            return Ok(SetMembership { stays: false, first_exit_time: Some(t), exit_forward: Some(forward) });
        }
    }
    Ok(SetMembership { stays: true, first_exit_time: None, exit_forward: None })
}

#[cfg(test)]
mod tests {
    use super::super::SplitModel;
    use super::*;

    fn saddle() -> LSField {
        LSField::linear(SplitModel::diagonal(vec![1.0, -1.0]).unwrap())
    }

    fn expand() -> LSField {
        LSField::linear(SplitModel::diagonal(vec![1.0]).unwrap())
    }

    #[test]
    fn linear_flow_matches_closed_form() {
        let y = flow_map(&saddle(), &[0.1, 1.0], 1.0, 1e-3).unwrap();
        assert!((y[0] - 0.1 * 1f64.exp()).abs() < 1e-6);
        assert!((y[1] - (-1f64).exp()).abs() < 1e-6);
        assert_eq!(flow_map(&saddle(), &[0.3, 0.2], 0.0, 0.1).unwrap(), vec![0.3, 0.2]);
    }

    #[test]
    fn fourth_order_convergence() {
        let exact = 0.1 * 2f64.exp();
        let e1 = (flow_map(&saddle(), &[0.1, 0.0], 2.0, 1e-2).unwrap()[0] - exact).abs();
        let e2 = (flow_map(&saddle(), &[0.1, 0.0], 2.0, 5e-3).unwrap()[0] - exact).abs();
        let ratio = e1 / e2;
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn partial_last_step_and_reversal() {
        let y = flow_map(&expand(), &[1.0], 0.25, 0.1).unwrap();
        assert!((y[0] - 0.25f64.exp()).abs() < 1e-6);
        let back = flow_map(&expand(), &y, -0.25, 0.1).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-6);
        let tr = integrate_trajectory(&expand(), &[1.0], 0.25, 0.1).unwrap();
        assert_eq!(tr.times.len(), 4);
        assert!((tr.times[3] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn exit_time_in_interval() {
        let u = AaBox::cube(1, 1.0);
        let m = trajectory_in_set(&expand(), &[0.5], 0.0, 2.0, &u, 1e-2).unwrap();
        assert!(!m.stays);
        assert_eq!(m.exit_forward, Some(true));
        assert!((m.first_exit_time.unwrap() - 2f64.ln()).abs() < 1e-3);

        let m = trajectory_in_set(&expand(), &[0.0], -5.0, 5.0, &u, 1e-2).unwrap();
        assert!(m.stays);
        let m = trajectory_in_set(&expand(), &[0.5], -2.0, 0.5, &u, 1e-2).unwrap();
        assert!(m.stays);
    }

    #[test]
    fn overflow_is_reported() {
        let blowup = LSField::from_fn(SplitModel::diagonal(vec![1.0]).unwrap(), |x| vec![x[0] * x[0]]);
        assert!(matches!(flow_map(&blowup, &[10.0], 5.0, 1e-2), Err(Error::NonFinite { .. })));
    }
}
