//! Delay-differential dynamics of the excited-state amplitude.
//!
//! With the dispersion linearised around ω_A, every resonant channel j adds
//! an instantaneous decay Γ_j and a delayed feedback Γ_j·e^{iφ_j}·ε̃(t − τ_j):
//!
//! ```text
//! dε̃/dt = −Σ_j Γ_j [ ε̃(t) + e^{iφ_j} ε̃(t − τ_j) Θ(t − τ_j) ]
//! ```
//!
//! [`solve_dde`] integrates this by the method of steps. The closed-form
//! series [`series_single_mode`] and [`series_two_mode_tau1_zero`] are
//! independent references for it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModeChannel;

/// Delays closer than this (in units of the step) to a grid node are
/// snapped onto it.
const ALIGN_TOLERANCE: f64 = 1e-9;

/// Discontinuities of derivative order above this are smooth enough for a
/// fourth-order rule and are not resolved as nodes.
const MAX_KINK_ORDER: u32 = 4;

const NORM_SLACK: f64 = 1e-6;

/// The three numbers of a channel that the delay equation sees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackChannel {
    pub rate: f64,
    pub phase: f64,
    pub delay: f64,
}

impl FeedbackChannel {
    pub fn new(rate: f64, phase: f64, delay: f64) -> Self {
        Self { rate, phase, delay }
    }

    /// Same channel measured with time in units of `time_unit`.
    pub fn rescaled(&self, time_unit: f64) -> Self {
        Self {
            rate: self.rate * time_unit,
            phase: self.phase,
            delay: self.delay / time_unit,
        }
    }

    fn feedback(&self) -> Complex64 {
        Complex64::from_polar(self.rate, self.phase)
    }
}

impl From<&ModeChannel> for FeedbackChannel {
    fn from(ch: &ModeChannel) -> Self {
        Self::new(ch.rate, ch.phase, ch.delay)
    }
}

/// Step that resolves both the delay structure and the bare decay.
pub fn default_step(channels: &[FeedbackChannel]) -> f64 {
    let total: f64 = channels.iter().map(|c| c.rate).sum();
    let decay_step = if total > 0.0 { 0.01 / total } else { f64::INFINITY };
    let delay_step = channels
        .iter()
        .filter(|c| c.delay > 0.0)
        .map(|c| c.delay / 64.0)
        .fold(f64::INFINITY, f64::min);
    let step = decay_step.min(delay_step);
    if step.is_finite() {
        step
    } else {
        0.01
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdeProblem {
    pub channels: Vec<FeedbackChannel>,
    pub t_max: f64,
    pub step: f64,
    pub initial_amplitude: Complex64,
}

impl DdeProblem {
    /// Problem on [0, t_max] starting from the excited state, with the
    /// default step.
    pub fn new(channels: Vec<FeedbackChannel>, t_max: f64) -> Self {
        let step = default_step(&channels);
        Self {
            channels,
            t_max,
            step,
            initial_amplitude: Complex64::new(1.0, 0.0),
        }
    }

    pub fn with_step(self, step: f64) -> Self {
        Self { step, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::InvalidProblem("no channels".into()));
        }
        for ch in &self.channels {
            if !(ch.rate.is_finite() && ch.rate >= 0.0)
                || !ch.phase.is_finite()
                || !(ch.delay.is_finite() && ch.delay >= 0.0)
            {
                return Err(Error::InvalidProblem(format!("bad channel {ch:?}")));
            }
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(Error::InvalidProblem(format!("t_max = {}", self.t_max)));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidProblem(format!("step = {}", self.step)));
        }
        let min_delay = self
            .channels
            .iter()
            .map(|c| c.delay)
            .filter(|&d| d > 0.0)
            .fold(f64::INFINITY, f64::min);
        if min_delay.is_finite() && self.step > min_delay / 10.0 {
            return Err(Error::StepTooLarge {
                step: self.step,
                limit: min_delay / 10.0,
            });
        }
        Ok(())
    }
}

/// Excited-state amplitude ε̃ sampled on a time grid. The fast phase
/// e^{−iω_A t} is factored out.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AmplitudeTrace {
    pub times: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
}

impl AmplitudeTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm()).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Largest |a − b| over a shared grid.
    pub fn max_deviation(&self, other: &AmplitudeTrace) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest ||a| − |b|| over a shared grid.
    pub fn max_modulus_deviation(&self, other: &AmplitudeTrace) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a.norm() - b.norm()).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    t: f64,
    y: Complex64,
    slope_left: Complex64,
    slope_right: Complex64,
}

struct Delayed {
    feedback: Complex64,
    delay: f64,
}

struct History {
    nodes: Vec<Node>,
}

impl History {
    /// Cubic Hermite value at s, using one-sided slopes so that kinks at
    /// nodes never leak into the neighbouring interval.
    fn at(&self, s: f64) -> Complex64 {
        let first = &self.nodes[0];
        if s <= first.t {
            return first.y;
        }
        let hi = self.nodes.partition_point(|n| n.t < s);
        let right = &self.nodes[hi.min(self.nodes.len() - 1)];
        if right.t == s || hi >= self.nodes.len() {
            return right.y;
        }
        let left = &self.nodes[hi - 1];
        let h = right.t - left.t;
        let x = (s - left.t) / h;
        let x2 = x * x;
        let x3 = x2 * x;
        let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
        let h10 = x3 - 2.0 * x2 + x;
        let h01 = -2.0 * x3 + 3.0 * x2;
        let h11 = x3 - x2;
        left.y * h00 + left.slope_right * (h10 * h) + right.y * h01 + right.slope_left * (h11 * h)
    }
}

/// Times where ε̃ loses smoothness: sums of up to [`MAX_KINK_ORDER`] delays.
fn kink_times(delays: &[f64], t_max: f64) -> Vec<f64> {
    let mut out = vec![];
    let mut frontier = vec![0.0];
    for _ in 0..MAX_KINK_ORDER {
        let mut next = vec![];
        for &base in &frontier {
            for &d in delays {
                let t = base + d;
                if t <= t_max {
                    next.push(t);
                }
            }
        }
        next.sort_by(f64::total_cmp);
        next.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
        out.extend_from_slice(&next);
        frontier = next;
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
    out
}

/// Integrates the delay equation by the method of steps.
///
/// The output grid is uniform with spacing `problem.step`. Internally every
/// kink time (delay sums) becomes a node, so each classical RK4 step runs
/// over a smooth stretch of the solution; delayed values come from cubic
/// Hermite interpolation of the stored history.
pub fn solve_dde(problem: &DdeProblem) -> Result<AmplitudeTrace> {
    problem.validate()?;
    let h = problem.step;
    let steps = (problem.t_max / h - ALIGN_TOLERANCE).ceil().max(0.0) as usize;

    let mut instantaneous = Complex64::new(0.0, 0.0);
    let mut delayed = vec![];
    for ch in &problem.channels {
        instantaneous += ch.rate;
        if ch.delay == 0.0 {
            instantaneous += ch.feedback();
        } else {
            let aligned = (ch.delay / h).round();
            let delay = if (ch.delay / h - aligned).abs() < ALIGN_TOLERANCE {
                aligned * h
            } else {
                ch.delay
            };
            delayed.push(Delayed { feedback: ch.feedback(), delay });
        }
    }

    let horizon = steps as f64 * h;
    let delays: Vec<f64> = delayed.iter().map(|d| d.delay).collect();
    let mut kinks: Vec<f64> = kink_times(&delays, horizon)
        .into_iter()
        .filter(|t| {
            let r = (t / h).round();
            (t / h - r).abs() >= ALIGN_TOLERANCE
        })
        .collect();
    kinks.reverse();

    let rhs = |active: &[bool], history: &History, t: f64, y: Complex64| -> Complex64 {
        let mut dy = -instantaneous * y;
        for (d, &on) in delayed.iter().zip(active) {
            if on {
                dy -= d.feedback * history.at(t - d.delay);
            }
        }
        dy
    };
    let activity = |t: f64| -> Vec<bool> {
        delayed
            .iter()
            .map(|d| t >= d.delay - ALIGN_TOLERANCE * h)
            .collect()
    };

    let y0 = problem.initial_amplitude;
    let mut history = History {
        nodes: vec![Node {
            t: 0.0,
            y: y0,
            slope_left: Complex64::new(0.0, 0.0),
            slope_right: Complex64::new(0.0, 0.0),
        }],
    };
    let mut trace = AmplitudeTrace {
        times: Vec::with_capacity(steps + 1),
        amplitudes: Vec::with_capacity(steps + 1),
    };
    trace.times.push(0.0);
    trace.amplitudes.push(y0);

    let mut t = 0.0;
    let mut y = y0;
    for i in 1..=steps {
        let target = i as f64 * h;
        while t < target {
            let next = match kinks.last() {
                Some(&k) if k < target => {
                    kinks.pop();
                    k
                }
                _ => target,
            };
            let dt = next - t;
            let active = activity(t);
            let k1 = rhs(&active, &history, t, y);
            history.nodes.last_mut().expect("history starts with t=0").slope_right = k1;
            let k2 = rhs(&active, &history, t + 0.5 * dt, y + k1 * (0.5 * dt));
            let k3 = rhs(&active, &history, t + 0.5 * dt, y + k2 * (0.5 * dt));
            let k4 = rhs(&active, &history, next, y + k3 * dt);
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            t = next;
            if y.norm() > 1.0 + NORM_SLACK {
                return Err(Error::NormViolation { time: t, modulus: y.norm() });
            }
            let slope_left = rhs(&active, &history, t, y);
            history.nodes.push(Node {
                t,
                y,
                slope_left,
                slope_right: slope_left,
            });
        }
        trace.times.push(target);
        trace.amplitudes.push(y);
    }
    Ok(trace)
}

/// ln(l!) for l = 0..=n.
fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for l in 1..=n {
        acc += (l as f64).ln();
        out.push(acc);
    }
    out
}

/// Σ_l (−μ)^l/l! · (t − lτ)^l · e^{−λ(t − lτ)} over l ≤ ⌊t/τ⌋, each term
/// assembled from its log-magnitude so that large (μt)^l/l! cannot overflow.
fn delay_series(lambda: Complex64, mu: Complex64, delay: f64, t: f64, terms: usize) -> Complex64 {
    let l_max = ((t / delay).floor() as usize).min(terms.saturating_sub(1));
    let log_fact = log_factorials(l_max);
    let (mu_abs, mu_arg) = mu.to_polar();
    let mut sum = Complex64::new(0.0, 0.0);
    for l in 0..=l_max {
        let s = t - l as f64 * delay;
        if l == 0 {
            sum += (-lambda * s).exp();
            continue;
        }
        if s <= 0.0 || mu_abs == 0.0 {
            continue;
        }
        let lf = l as f64;
        let log_mag = lf * (mu_abs * s).ln() - log_fact[l] - lambda.re * s;
        let arg = lf * (mu_arg + std::f64::consts::PI) - lambda.im * s;
        sum += Complex64::from_polar(log_mag.exp(), arg);
    }
    sum
}

/// Closed-form single-channel solution. A zero delay is summed to the
/// exponential exp[−Γ(1 + e^{iφ})t].
pub fn series_single_mode(gamma: f64, phase: f64, delay: f64, t: f64, terms: usize) -> Complex64 {
    let mu = Complex64::from_polar(gamma, phase);
    if delay == 0.0 {
        return (-(gamma + mu) * t).exp();
    }
    delay_series(Complex64::new(gamma, 0.0), mu, delay, t, terms)
}

/// Closed-form two-channel solution when the first channel has no delay:
/// channel 1 folds into the decay constant Γ(1 + e^{iφ₁}) + Γ₂ and only
/// channel 2 produces echoes.
pub fn series_two_mode_tau1_zero(
    gamma1: f64,
    phase1: f64,
    gamma2: f64,
    phase2: f64,
    delay2: f64,
    t: f64,
    terms: usize,
) -> Complex64 {
    let lambda = gamma1 + Complex64::from_polar(gamma1, phase1) + gamma2;
    let mu = Complex64::from_polar(gamma2, phase2);
    if delay2 == 0.0 {
        return (-(lambda + mu) * t).exp();
    }
    delay_series(lambda, mu, delay2, t, terms)
}

/// Number of series terms that makes the sum exact up to time t.
pub fn series_terms(delay: f64, t: f64) -> usize {
    if delay > 0.0 {
        (t / delay).ceil() as usize + 1
    } else {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayRegime {
    /// Mirror right at the atom: feedback is instantaneous.
    AllDelaysZero,
    /// Mirror infinitely far away: the guide looks infinite.
    AllDelaysInfinite,
}

pub fn limiting_amplitude(channels: &[FeedbackChannel], regime: DelayRegime, t: f64) -> Complex64 {
    let exponent: Complex64 = match regime {
        DelayRegime::AllDelaysZero => channels.iter().map(|c| c.rate + c.feedback()).sum(),
        DelayRegime::AllDelaysInfinite => channels.iter().map(|c| Complex64::new(c.rate, 0.0)).sum(),
    };
    (-exponent * t).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn single(gamma_tau: f64, phase: f64) -> DdeProblem {
        DdeProblem::new(vec![FeedbackChannel::new(1.0, phase, gamma_tau)], 10.0)
    }

    #[test]
    fn pure_decay_before_the_echo() {
        let trace = solve_dde(&single(1.0, 0.3)).unwrap();
        for (t, a) in trace.times.iter().zip(&trace.amplitudes) {
            if *t <= 1.0 {
                assert!((a - Complex64::new((-t).exp(), 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn two_channels_decay_with_summed_rate() {
        let p = DdeProblem::new(
            vec![FeedbackChannel::new(1.0, 0.4, 2.0), FeedbackChannel::new(0.6, 1.9, 3.1)],
            2.0,
        );
        let trace = solve_dde(&p).unwrap();
        for (t, a) in trace.times.iter().zip(&trace.amplitudes) {
            assert!((a - Complex64::new((-1.6 * t).exp(), 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn matches_series_for_odd_multiple_of_pi() {
        let p = single(1.0, 5.0 * PI);
        let trace = solve_dde(&p).unwrap();
        let terms = series_terms(1.0, 10.0);
        for (t, a) in trace.times.iter().zip(&trace.amplitudes) {
            let s = series_single_mode(1.0, 5.0 * PI, 1.0, *t, terms);
            assert!((a - s).norm() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn unaligned_delay_still_fourth_order() {
        // τ = 0.737 is not a multiple of the step
        let p = DdeProblem::new(vec![FeedbackChannel::new(1.0, 1.1, 0.737)], 6.0).with_step(0.01);
        let trace = solve_dde(&p).unwrap();
        let terms = series_terms(0.737, 6.0);
        for (t, a) in trace.times.iter().zip(&trace.amplitudes) {
            let s = series_single_mode(1.0, 1.1, 0.737, *t, terms);
            assert!((a - s).norm() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn zero_delay_folds_into_decay() {
        let p = DdeProblem::new(vec![FeedbackChannel::new(1.0, PI, 0.0)], 10.0);
        let trace = solve_dde(&p).unwrap();
        for a in &trace.amplitudes {
            assert!((a.norm() - 1.0).abs() < 1e-12);
        }
        let p = DdeProblem::new(vec![FeedbackChannel::new(0.7, 0.9, 0.0)], 3.0);
        let trace = solve_dde(&p).unwrap();
        for (t, a) in trace.times.iter().zip(&trace.amplitudes) {
            let exact = limiting_amplitude(&p.channels, DelayRegime::AllDelaysZero, *t);
            assert!((a - exact).norm() < 1e-8);
        }
    }

    #[test]
    fn rejects_coarse_step_and_empty_problem() {
        let p = single(1.0, 0.0).with_step(0.2);
        assert!(matches!(solve_dde(&p), Err(Error::StepTooLarge { .. })));
        assert!(matches!(
            solve_dde(&DdeProblem::new(vec![], 1.0)),
            Err(Error::InvalidProblem(_))
        ));
    }

    #[test]
    fn series_limits() {
        assert!((series_single_mode(1.3, 0.2, 2.0, 1.5, 10) - Complex64::new((-1.3f64 * 1.5).exp(), 0.0)).norm() < 1e-15);
        let phi = 0.8;
        let expected = (-(1.0 + Complex64::from_polar(1.0, phi)) * 2.5).exp();
        assert!((series_single_mode(1.0, phi, 0.0, 2.5, 1) - expected).norm() < 1e-15);
        for t in [0.0, 1.0, 7.0] {
            assert!((series_single_mode(1.0, 3.0 * PI, 0.0, t, 1).norm() - 1.0).abs() < 1e-12);
        }
        // no second channel: the single-mode τ→0 exponential
        let a = series_two_mode_tau1_zero(1.0, phi, 0.0, 1.0, 0.5, 2.5, 10);
        assert!((a - expected).norm() < 1e-14);
    }

    #[test]
    fn series_survives_many_echoes() {
        // 2000 echoes: (Γt)^l/l! would overflow without log-space terms
        let a = series_single_mode(1.0, 0.3, 0.05, 100.0, 2001);
        assert!(a.norm().is_finite());
        assert!(a.norm() <= 1.0);
    }

    #[test]
    fn limiting_regimes() {
        let chans = [FeedbackChannel::new(1.0, PI, 0.3), FeedbackChannel::new(0.4, PI, 0.5)];
        assert!((limiting_amplitude(&chans, DelayRegime::AllDelaysZero, 4.0) - 1.0).norm() < 1e-12);
        let inf = limiting_amplitude(&chans, DelayRegime::AllDelaysInfinite, 2.0);
        assert!((inf - Complex64::new((-2.8f64).exp(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn kink_times_cover_sums() {
        let k = kink_times(&[1.0, 1.5], 3.2);
        for t in [1.0, 1.5, 2.0, 2.5, 3.0] {
            assert!(k.iter().any(|x| (x - t).abs() < 1e-12), "{t} missing from {k:?}");
        }
        assert!(k.iter().all(|&x| x <= 3.2));
    }
}
