//! Direct simulation of the delay equation, used to cross-check the linear
//! verdicts and the criticality predicted by `l1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::Criticality;
use crate::model::{nontrivial_equilibrium, vector_field, Parameters};
use crate::stability::{transversality, HopfPoint};

pub const MIN_STEPS_PER_DELAY: usize = 100;

/// Uniform-step solution on `[0, t_max]` from the constant history `x2 + history_offset`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub params: Parameters,
    pub history_offset: f64,
    pub x2: f64,
}

impl Trajectory {
    pub fn step(&self) -> f64 {
        self.t.get(1).map_or(0.0, |t1| t1 - self.t[0])
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().expect("trajectory is never empty")
    }

    /// Largest `|x - x2|` over `t >= t_end - window`.
    pub fn tail_deviation(&self, window: f64) -> f64 {
        let from = self.t_end() - window;
        self.t
            .iter()
            .zip(&self.x)
            .filter(|(t, _)| **t >= from)
            .map(|(_, x)| (x - self.x2).abs())
            .fold(0.0, f64::max)
    }
}

/// Classical RK4 by the method of steps with `h = r / steps_per_delay`.
///
/// Delayed values at `t` and `t + h` are grid nodes; the midpoint value uses
/// the cubic Hermite interpolant built from the stored nodes and slopes.
pub fn integrate(params: &Parameters, history_offset: f64, t_max: f64, steps_per_delay: usize) -> Result<Trajectory> {
    let r = params.delay()?;
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::usage(format!("t_max must be positive, got {t_max}")));
    }
    if steps_per_delay < MIN_STEPS_PER_DELAY {
        return Err(Error::usage(format!(
            "steps_per_delay must be at least {MIN_STEPS_PER_DELAY}, got {steps_per_delay}"
        )));
    }
    if !history_offset.is_finite() {
        return Err(Error::usage("history offset must be finite"));
    }
    let (x2, _) = nontrivial_equilibrium(params)?;
    let spd = steps_per_delay;
    let h = r / spd as f64;
    let steps = (t_max / h).ceil() as usize;
    let x_hist = x2 + history_offset;
    let f = |y: f64, yd: f64| vector_field(y, yd, params);

    let mut x = Vec::with_capacity(steps + 1);
    // right-sided slope at each node; the history has slope 0
    let mut dx = Vec::with_capacity(steps + 1);
    x.push(x_hist);
    for i in 0..steps {
        let y = x[i];
        let (a, mid, b) = if i < spd {
            (x_hist, x_hist, x_hist)
        } else {
            let j = i - spd;
            let (a, b) = (x[j], x[j + 1]);
            // node 0 is continuous in x, and t = 0 is only ever a left endpoint here
            let mid = 0.5 * (a + b) + h * (dx[j] - dx[j + 1]) / 8.0;
            (a, mid, b)
        };
        let k1 = f(y, a);
        dx.push(k1);
        let k2 = f(y + 0.5 * h * k1, mid);
        let k3 = f(y + 0.5 * h * k2, mid);
        let k4 = f(y + h * k3, b);
        let next = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !next.is_finite() {
            return Err(Error::numerical(format!(
                "non-finite state at t = {:.6e}",
                (i + 1) as f64 * h
            )));
        }
        x.push(next);
    }
    let t = (0..=steps).map(|i| i as f64 * h).collect();
    Ok(Trajectory {
        t,
        x,
        params: *params,
        history_offset,
        x2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AttractorKind {
    Equilibrium,
    LimitCycle,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttractorReport {
    pub kind: AttractorKind,
    pub amplitude: Option<f64>,
    pub period: Option<f64>,
}

impl AttractorReport {
    fn undetermined() -> Self {
        AttractorReport {
            kind: AttractorKind::Undetermined,
            amplitude: None,
            period: None,
        }
    }
}

/// Relative floor below which the final window counts as flat.
pub const EQUILIBRIUM_FLOOR: f64 = 1e-8;
/// Tolerance on successive peak heights and spacings.
pub const CYCLE_REGULARITY: f64 = 0.01;

/// Classify the final `window` of `traj`.
///
/// Flat within `EQUILIBRIUM_FLOOR * (1 + x2)` is an equilibrium; peaks that agree
/// in height and spacing to `CYCLE_REGULARITY` make a cycle.
pub fn detect_attractor(traj: &Trajectory, window: f64) -> AttractorReport {
    if !(window > 0.0) || traj.t_end() < 3.0 * window {
        return AttractorReport::undetermined();
    }
    let from = traj.t_end() - window;
    let start = traj.t.partition_point(|&t| t < from);
    let (ts, xs) = (&traj.t[start..], &traj.x[start..]);
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let range = hi - lo;
    if range < EQUILIBRIUM_FLOOR * (1.0 + traj.x2) {
        return AttractorReport {
            kind: AttractorKind::Equilibrium,
            amplitude: None,
            period: None,
        };
    }
    // local maxima, refined by a parabola through the three samples
    let mut peaks = Vec::new();
    for i in 1..xs.len().saturating_sub(1) {
        let (a, b, c) = (xs[i - 1], xs[i], xs[i + 1]);
        if a < b && b >= c {
            let curv = a - 2.0 * b + c;
            let shift = if curv < 0.0 { 0.5 * (a - c) / curv } else { 0.0 };
            let h = ts[i + 1] - ts[i];
            peaks.push((ts[i] + shift * h, b - 0.25 * (a - c) * shift));
        }
    }
    if peaks.len() < 3 {
        return AttractorReport::undetermined();
    }
    let spacings: Vec<f64> = peaks.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
    // successive peaks, and also first against last so that a slow drift
    // (a weakly damped or growing oscillation) is not taken for a cycle
    let heights_ok = peaks
        .windows(2)
        .all(|w| (w[1].1 - w[0].1).abs() <= CYCLE_REGULARITY * range)
        && (peaks[peaks.len() - 1].1 - peaks[0].1).abs() <= CYCLE_REGULARITY * range;
    let spacing_ok = spacings.windows(2).all(|w| (w[1] - w[0]).abs() <= CYCLE_REGULARITY * mean);
    if heights_ok && spacing_ok {
        AttractorReport {
            kind: AttractorKind::LimitCycle,
            amplitude: Some(0.5 * range),
            period: Some(mean),
        }
    } else {
        AttractorReport::undetermined()
    }
}

/// Which side of `r_H` the probes sit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeSide {
    /// Side given by the sign of `d Re(lambda) / dr` (unstable for supercritical checks).
    Transversality,
    /// `r_H - Delta` regardless of the crossing direction.
    Below,
    /// `r_H + Delta`.
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionConfig {
    pub side: ProbeSide,
    pub steps_per_delay: usize,
    /// Minimum integration horizon in units of `r_H`.
    pub horizon_delays: f64,
    /// The horizon is stretched to this many linear e-folding times `1 / (|d Re lambda / dr| Delta)`.
    pub e_folds: f64,
    /// Cap on the stretched horizon, in units of `r_H`.
    pub max_horizon_delays: f64,
    /// History offset of the runs that should reach the small cycle, relative to `x2`.
    pub small_offset: f64,
    /// History offset of the runs that should decay on the stable side, relative to `x2`.
    /// It has to sit inside the basin bounded by the unstable cycle.
    pub basin_offset: f64,
    /// History offset of the bistability runs, relative to `x2`.
    pub large_offset: f64,
    /// Detection window in linear periods `2 pi / omega`.
    pub window_periods: f64,
}

impl Default for DirectionConfig {
    fn default() -> Self {
        DirectionConfig {
            side: ProbeSide::Transversality,
            steps_per_delay: MIN_STEPS_PER_DELAY,
            horizon_delays: 3000.0,
            e_folds: 8.0,
            max_horizon_delays: 100_000.0,
            small_offset: 0.05,
            basin_offset: 0.005,
            large_offset: 0.5,
            window_periods: 10.0,
        }
    }
}

/// One simulation at `r = r_H + signed_shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRun {
    pub delta_r: f64,
    pub r: f64,
    pub history_offset: f64,
    pub kind: AttractorKind,
    pub amplitude: Option<f64>,
    pub period: Option<f64>,
    pub tail_deviation: f64,
}

impl ProbeRun {
    /// Final deviation below a tenth of the initial one.
    pub fn decayed(&self) -> bool {
        self.kind == AttractorKind::Equilibrium || self.tail_deviation < 0.1 * self.history_offset.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRatio {
    pub delta_r: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionReport {
    pub predicted: Criticality,
    pub l1: f64,
    pub r_hopf: f64,
    /// `d Re(lambda) / dr` at the crossing.
    pub transversality: f64,
    /// Sign applied to each `Delta` (`r = r_H + sign Delta`).
    pub side_sign: f64,
    pub runs: Vec<ProbeRun>,
    /// `amplitude(2 Delta) / amplitude(Delta)` for every offset pair in the input.
    pub ratios: Vec<AmplitudeRatio>,
    /// `Some(true)` when the simulations support the predicted criticality,
    /// `None` when they are inconclusive.
    pub consistent: Option<bool>,
}

/// Square-root law band for `amplitude(2 Delta) / amplitude(Delta)`.
pub const SQRT2_BAND: (f64, f64) = (std::f64::consts::SQRT_2 * 0.8, std::f64::consts::SQRT_2 * 1.2);

fn probe(hopf: &HopfPoint, slope: f64, delta_r: f64, offset: f64, cfg: &DirectionConfig) -> Result<ProbeRun> {
    let r = hopf.r() + delta_r;
    let params = hopf.params.with_delay(r)?;
    let linear_time = cfg.e_folds / (slope * delta_r).abs();
    let horizon = (cfg.horizon_delays * hopf.r())
        .max(linear_time)
        .min(cfg.max_horizon_delays * hopf.r());
    let traj = integrate(&params, offset, horizon, cfg.steps_per_delay)?;
    let window = cfg.window_periods * 2.0 * PI / hopf.omega_star;
    let rep = detect_attractor(&traj, window);
    Ok(ProbeRun {
        delta_r,
        r,
        history_offset: offset,
        kind: rep.kind,
        amplitude: rep.amplitude,
        period: rep.period,
        tail_deviation: traj.tail_deviation(window),
    })
}

/// Simulation check of the criticality given by `l1` at `hopf`.
///
/// For `l1 < 0` the probes sit on the side picked by `cfg.side` and small
/// perturbations should settle on a cycle whose amplitude follows the
/// square-root law. For `l1 > 0` the probes sit on the opposite, stable side:
/// small perturbations should decay while `large_offset * x2` should not.
pub fn verify_direction(hopf: &HopfPoint, l1: f64, offsets: &[f64], cfg: &DirectionConfig) -> Result<DirectionReport> {
    if offsets.is_empty() || offsets.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::usage("offsets must be positive"));
    }
    let slope = transversality(hopf)?;
    let unstable_sign = slope.signum();
    let side_sign = match cfg.side {
        ProbeSide::Transversality => unstable_sign,
        ProbeSide::Below => -1.0,
        ProbeSide::Above => 1.0,
    };
    let predicted = Criticality::from_l1(l1);
    let small = cfg.small_offset * hopf.x2;
    let basin = cfg.basin_offset * hopf.x2;
    let large = cfg.large_offset * hopf.x2;
    let mut runs = Vec::new();
    let mut ratios = Vec::new();
    let consistent;
    match predicted {
        Criticality::Supercritical | Criticality::Degenerate => {
            for &d in offsets {
                runs.push(probe(hopf, slope, side_sign * d, small, cfg)?);
            }
            for (i, a) in runs.iter().enumerate() {
                for b in &runs[i + 1..] {
                    if (b.delta_r - 2.0 * a.delta_r).abs() <= 1e-12 * b.delta_r.abs() {
                        if let (Some(amp_a), Some(amp_b)) = (a.amplitude, b.amplitude) {
                            let ratio = amp_b / amp_a;
                            ratios.push(AmplitudeRatio {
                                delta_r: a.delta_r,
                                ratio,
                                pass: (SQRT2_BAND.0..=SQRT2_BAND.1).contains(&ratio),
                            });
                        }
                    }
                }
            }
            let cycles = runs.iter().all(|r| r.kind == AttractorKind::LimitCycle);
            consistent = if runs.iter().any(|r| r.kind == AttractorKind::Undetermined) {
                None
            } else {
                Some(cycles && ratios.iter().all(|r| r.pass))
            };
        }
        Criticality::Subcritical => {
            let stable_sign = -unstable_sign;
            for &d in offsets {
                runs.push(probe(hopf, slope, stable_sign * d, basin, cfg)?);
                runs.push(probe(hopf, slope, stable_sign * d, large, cfg)?);
            }
            let ok = runs.chunks(2).all(|pair| pair[0].decayed() && !pair[1].decayed());
            consistent = Some(ok);
        }
    }
    Ok(DirectionReport {
        predicted,
        l1,
        r_hopf: hopf.r(),
        transversality: slope,
        side_sign,
        runs,
        ratios,
        consistent,
    })
}

/// Criticality read off simulations alone, at distance `delta_r` from `r_H`.
///
/// Bistability on the stable side (small perturbation decays, large one
/// persists) means subcritical; a decaying large perturbation together with
/// a cycle on the unstable side means supercritical.
pub fn simulated_criticality(hopf: &HopfPoint, delta_r: f64, cfg: &DirectionConfig) -> Result<Option<Criticality>> {
    let slope = transversality(hopf)?;
    let unstable_sign = slope.signum();
    let basin = cfg.basin_offset * hopf.x2;
    let small = cfg.small_offset * hopf.x2;
    let large = cfg.large_offset * hopf.x2;
    let stable_small = probe(hopf, slope, -unstable_sign * delta_r, basin, cfg)?;
    let stable_large = probe(hopf, slope, -unstable_sign * delta_r, large, cfg)?;
    if !stable_small.decayed() {
        return Ok(None);
    }
    if !stable_large.decayed() {
        return Ok(Some(Criticality::Subcritical));
    }
    let unstable = probe(hopf, slope, unstable_sign * delta_r, small, cfg)?;
    Ok((unstable.kind == AttractorKind::LimitCycle).then_some(Criticality::Supercritical))
}
