//! Dynamic Hamiltonian Monte Carlo with multinomial trajectory sampling and
//! the generalized no-U-turn criterion, plus warmup adaptation of the step
//! size (dual averaging) and of a diagonal inverse metric (windowed variance).

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A differentiable log density on ℝᵈ.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;
    /// Returns log p(q) and writes ∇ log p(q) into `grad`.
    fn log_density_gradient(&self, q: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adaptation {
    /// Dual-averaging step size and windowed diagonal metric during warmup.
    Full,
    /// Unit metric and this step size throughout.
    FixedStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub warmup: usize,
    pub iters: usize,
    pub target_accept: f64,
    pub max_depth: usize,
    pub max_delta_h: f64,
    pub adaptation: Adaptation,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            warmup: 2000,
            iters: 2000,
            target_accept: 0.9,
            max_depth: 10,
            max_delta_h: 1000.0,
            adaptation: Adaptation::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    /// Post-warmup positions, one per iteration.
    pub draws: Vec<Vec<f64>>,
    /// Mean Metropolis acceptance statistic per post-warmup iteration.
    pub accept_stats: Vec<f64>,
    pub tree_depths: Vec<usize>,
    pub divergences: usize,
    pub warmup_divergences: usize,
    pub step_size: f64,
    pub inv_metric: Vec<f64>,
    pub leapfrog_steps: usize,
}

#[derive(Clone)]
struct Point {
    q: Vec<f64>,
    p: Vec<f64>,
    grad: Vec<f64>,
    logp: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Both ends of the span must still move along the summed momentum.
fn no_u_turn(p_sharp_minus: &[f64], p_sharp_plus: &[f64], rho: &[f64]) -> bool {
    dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0
}

struct Integrator<'a, T: LogDensity> {
    target: &'a T,
    inv_metric: &'a [f64],
    eps: f64,
}

impl<T: LogDensity> Integrator<'_, T> {
    fn kinetic(&self, p: &[f64]) -> f64 {
        0.5 * p.iter().zip(self.inv_metric).map(|(p, m)| m * p * p).sum::<f64>()
    }

    fn hamiltonian(&self, z: &Point) -> f64 {
        let h = -z.logp + self.kinetic(&z.p);
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    }

    fn p_sharp(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(self.inv_metric).map(|(p, m)| m * p).collect()
    }

    fn leapfrog(&self, z: &mut Point, eps: f64) {
        for (p, g) in z.p.iter_mut().zip(&z.grad) {
            *p += 0.5 * eps * g;
        }
        for ((q, p), m) in z.q.iter_mut().zip(&z.p).zip(self.inv_metric) {
            *q += eps * m * p;
        }
        z.logp = self.target.log_density_gradient(&z.q, &mut z.grad);
        for (p, g) in z.p.iter_mut().zip(&z.grad) {
            *p += 0.5 * eps * g;
        }
    }

    fn draw_momentum<R: Rng + ?Sized>(&self, z: &mut Point, rng: &mut R) {
        for (p, m) in z.p.iter_mut().zip(self.inv_metric) {
            let n: f64 = StandardNormal.sample(rng);
            *p = n / m.sqrt();
        }
    }
}

struct Subtree {
    propose: Point,
    p_beg: Vec<f64>,
    p_end: Vec<f64>,
    p_sharp_beg: Vec<f64>,
    p_sharp_end: Vec<f64>,
    rho: Vec<f64>,
    log_sum_weight: f64,
}

struct Trajectory<'a, 'b, T: LogDensity, R: Rng + ?Sized> {
    int: &'a Integrator<'b, T>,
    rng: &'a mut R,
    h0: f64,
    max_delta_h: f64,
    n_leapfrog: usize,
    sum_metro_prob: f64,
    divergent: bool,
}

impl<T: LogDensity, R: Rng + ?Sized> Trajectory<'_, '_, T, R> {
    /// Extends from `z` by 2^depth leapfrog steps in direction `sign`.
    /// `None` means the subtree diverged or turned back on itself.
    fn build(&mut self, z: &mut Point, depth: usize, sign: f64) -> Option<Subtree> {
        if depth == 0 {
            self.int.leapfrog(z, sign * self.int.eps);
            self.n_leapfrog += 1;
            let h = self.int.hamiltonian(z);
            if h - self.h0 > self.max_delta_h {
                self.divergent = true;
            }
            let delta = self.h0 - h;
            self.sum_metro_prob += if delta > 0.0 { 1.0 } else { delta.exp() };
            if self.divergent {
                return None;
            }
            let p_sharp = self.int.p_sharp(&z.p);
            return Some(Subtree {
                propose: z.clone(),
                p_beg: z.p.clone(),
                p_end: z.p.clone(),
                p_sharp_beg: p_sharp.clone(),
                p_sharp_end: p_sharp,
                rho: z.p.clone(),
                log_sum_weight: delta,
            });
        }
        let left = self.build(z, depth - 1, sign)?;
        let right = self.build(z, depth - 1, sign)?;
        let log_sum_weight = log_add(left.log_sum_weight, right.log_sum_weight);
        let take_right = right.log_sum_weight > log_sum_weight
            || self.rng.random::<f64>() < (right.log_sum_weight - log_sum_weight).exp();
        let rho = add(&left.rho, &right.rho);
        let persist = no_u_turn(&left.p_sharp_beg, &right.p_sharp_end, &rho)
            && no_u_turn(&left.p_sharp_beg, &right.p_sharp_beg, &add(&left.rho, &right.p_beg))
            && no_u_turn(&left.p_sharp_end, &right.p_sharp_end, &add(&right.rho, &left.p_end));
        if !persist {
            return None;
        }
        Some(Subtree {
            propose: if take_right { right.propose } else { left.propose },
            p_beg: left.p_beg,
            p_sharp_beg: left.p_sharp_beg,
            p_end: right.p_end,
            p_sharp_end: right.p_sharp_end,
            rho,
            log_sum_weight,
        })
    }
}

struct Transition {
    point: Point,
    accept_stat: f64,
    divergent: bool,
    depth: usize,
    n_leapfrog: usize,
}

fn transition<T: LogDensity, R: Rng + ?Sized>(
    int: &Integrator<'_, T>,
    current: &Point,
    max_depth: usize,
    max_delta_h: f64,
    rng: &mut R,
) -> Transition {
    let mut z = current.clone();
    int.draw_momentum(&mut z, rng);
    let h0 = int.hamiltonian(&z);
    let mut fwd = z.clone();
    let mut bwd = z.clone();
    let mut sample = z.clone();
    let mut rho = z.p.clone();
    let p_sharp = int.p_sharp(&z.p);
    // outer momenta of the trajectory at either end
    let (mut p_fwd, mut p_sharp_fwd) = (z.p.clone(), p_sharp.clone());
    let (mut p_bwd, mut p_sharp_bwd) = (z.p.clone(), p_sharp);
    let mut log_sum_weight = 0.0;
    let mut depth = 0;
    let mut traj = Trajectory { int, rng, h0, max_delta_h, n_leapfrog: 0, sum_metro_prob: 0.0, divergent: false };
    while depth < max_depth {
        let forward = traj.rng.random::<f64>() > 0.5;
        let sub = if forward {
            traj.build(&mut fwd, depth, 1.0)
        } else {
            traj.build(&mut bwd, depth, -1.0)
        };
        let Some(sub) = sub else { break };
        depth += 1;
        if sub.log_sum_weight > log_sum_weight
            || traj.rng.random::<f64>() < (sub.log_sum_weight - log_sum_weight).exp()
        {
            sample = sub.propose.clone();
        }
        log_sum_weight = log_add(log_sum_weight, sub.log_sum_weight);
        let rho_old = rho;
        rho = add(&rho_old, &sub.rho);
        let (near_p, near_sharp, far_sharp) = if forward {
            (&p_fwd, &p_sharp_fwd, &p_sharp_bwd)
        } else {
            (&p_bwd, &p_sharp_bwd, &p_sharp_fwd)
        };
        let persist = no_u_turn(far_sharp, &sub.p_sharp_end, &rho)
            && no_u_turn(far_sharp, &sub.p_sharp_beg, &add(&rho_old, &sub.p_beg))
            && no_u_turn(near_sharp, &sub.p_sharp_end, &add(&sub.rho, near_p));
        if forward {
            p_fwd = sub.p_end;
            p_sharp_fwd = sub.p_sharp_end;
        } else {
            p_bwd = sub.p_end;
            p_sharp_bwd = sub.p_sharp_end;
        }
        if !persist {
            break;
        }
    }
    let n_leapfrog = traj.n_leapfrog.max(1);
    Transition {
        accept_stat: traj.sum_metro_prob / n_leapfrog as f64,
        divergent: traj.divergent,
        point: sample,
        depth,
        n_leapfrog: traj.n_leapfrog,
    }
}

/// Step-size heuristic: double or halve until a single leapfrog step's
/// acceptance crosses 0.8.
fn initial_step_size<T: LogDensity, R: Rng + ?Sized>(
    target: &T,
    inv_metric: &[f64],
    start: &Point,
    mut eps: f64,
    rng: &mut R,
) -> f64 {
    let log_target = 0.8f64.ln();
    let trial = |eps: f64, rng: &mut R| {
        let int = Integrator { target, inv_metric, eps };
        let mut z = start.clone();
        int.draw_momentum(&mut z, rng);
        let h0 = int.hamiltonian(&z);
        int.leapfrog(&mut z, eps);
        h0 - int.hamiltonian(&z)
    };
    let direction = if trial(eps, rng) > log_target { 1.0 } else { -1.0 };
    for _ in 0..100 {
        let delta = trial(eps, rng);
        if (direction > 0.0 && !(delta > log_target)) || (direction < 0.0 && !(delta < log_target)) {
            break;
        }
        let next = if direction > 0.0 { 2.0 * eps } else { 0.5 * eps };
        if !(next > 1e-12 && next < 1e7) {
            break;
        }
        eps = next;
    }
    eps
}

struct DualAveraging {
    mu: f64,
    counter: f64,
    s_bar: f64,
    x_bar: f64,
    delta: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(eps: f64, delta: f64) -> Self {
        Self { mu: (10.0 * eps).ln(), counter: 0.0, s_bar: 0.0, x_bar: 0.0, delta }
    }

    fn update(&mut self, accept_stat: f64) -> f64 {
        self.counter += 1.0;
        let stat = accept_stat.min(1.0);
        let eta = 1.0 / (self.counter + Self::T0);
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.delta - stat);
        let x = self.mu - self.s_bar * self.counter.sqrt() / Self::GAMMA;
        let x_eta = self.counter.powf(-Self::KAPPA);
        self.x_bar = (1.0 - x_eta) * self.x_bar + x_eta * x;
        x.exp()
    }

    fn final_step(&self) -> f64 {
        self.x_bar.exp()
    }
}

/// Warmup schedule: a fast initial buffer, doubling slow windows for the
/// metric, and a terminal buffer for the step size alone.
struct Windows {
    warmup: usize,
    init_buffer: usize,
    term_buffer: usize,
    window_size: usize,
    next_window: usize,
    counter: usize,
}

impl Windows {
    fn new(warmup: usize) -> Option<Self> {
        if warmup < 20 {
            return None;
        }
        let (mut init, mut term, mut base) = (75, 50, 25);
        if init + term + base > warmup {
            init = (0.15 * warmup as f64) as usize;
            term = (0.1 * warmup as f64) as usize;
            base = warmup - init - term;
        }
        Some(Self { warmup, init_buffer: init, term_buffer: term, window_size: base, next_window: init + base - 1, counter: 0 })
    }

    fn in_window(&self) -> bool {
        self.counter >= self.init_buffer && self.counter < self.warmup - self.term_buffer && self.counter != self.warmup
    }

    fn window_ends(&self) -> bool {
        self.counter == self.next_window && self.counter != self.warmup
    }

    fn advance_window(&mut self) {
        let last = self.warmup - self.term_buffer - 1;
        if self.next_window == last {
            return;
        }
        self.window_size *= 2;
        self.next_window = self.counter + self.window_size;
        if self.next_window != last && self.next_window + 2 * self.window_size >= self.warmup - self.term_buffer {
            self.next_window = last;
        }
    }
}

struct Welford {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(d: usize) -> Self {
        Self { n: 0.0, mean: vec![0.0; d], m2: vec![0.0; d] }
    }

    fn add(&mut self, q: &[f64]) {
        self.n += 1.0;
        for ((m, s), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(q) {
            let delta = x - *m;
            *m += delta / self.n;
            *s += delta * (x - *m);
        }
    }

    /// Sample variance shrunk toward 10⁻³.
    fn regularized_variance(&self) -> Vec<f64> {
        let n = self.n;
        self.m2
            .iter()
            .map(|s| (n / (n + 5.0)) * s / (n - 1.0) + 1e-3 * (5.0 / (n + 5.0)))
            .collect()
    }
}

/// Runs one chain from `init`.
pub fn run_chain<T: LogDensity, R: Rng + ?Sized>(
    target: &T,
    init: &[f64],
    config: &ChainConfig,
    rng: &mut R,
) -> Result<ChainOutput> {
    let d = target.dim();
    if init.len() != d {
        return Err(Error::InvalidParameter(format!("initial point has {} coordinates, target {d}", init.len())));
    }
    if !(config.target_accept > 0.0 && config.target_accept < 1.0) || config.max_depth == 0 {
        return Err(Error::InvalidParameter("target_accept must lie in (0,1) and max_depth >= 1".into()));
    }
    let mut grad = vec![0.0; d];
    let logp = target.log_density_gradient(init, &mut grad);
    if !logp.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::ChainFailure { chain: 0, reason: "non-finite log density at the initial point".into() });
    }
    let mut current = Point { q: init.to_vec(), p: vec![0.0; d], grad, logp };
    let mut inv_metric = vec![1.0; d];
    let (mut eps, adapt) = match config.adaptation {
        Adaptation::FixedStep(eps) => {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidParameter(format!("step size must be positive, got {eps}")));
            }
            (eps, false)
        }
        Adaptation::Full => (initial_step_size(target, &inv_metric, &current, 1.0, rng), true),
    };
    let mut dual = DualAveraging::new(eps, config.target_accept);
    let mut windows = if adapt { Windows::new(config.warmup) } else { None };
    let mut welford = Welford::new(d);
    let mut out = ChainOutput {
        draws: Vec::with_capacity(config.iters),
        accept_stats: Vec::with_capacity(config.iters),
        tree_depths: Vec::with_capacity(config.iters),
        divergences: 0,
        warmup_divergences: 0,
        step_size: eps,
        inv_metric: Vec::new(),
        leapfrog_steps: 0,
    };

    for iter in 0..config.warmup + config.iters {
        let warming = iter < config.warmup;
        let t = {
            let int = Integrator { target, inv_metric: &inv_metric, eps };
            transition(&int, &current, config.max_depth, config.max_delta_h, rng)
        };
        out.leapfrog_steps += t.n_leapfrog;
        current = t.point;
        if warming {
            out.warmup_divergences += usize::from(t.divergent);
            if adapt {
                eps = dual.update(t.accept_stat);
                if let Some(w) = windows.as_mut() {
                    if w.in_window() {
                        welford.add(&current.q);
                    }
                    if w.window_ends() {
                        w.advance_window();
                        inv_metric = welford.regularized_variance();
                        welford = Welford::new(d);
                        eps = initial_step_size(target, &inv_metric, &current, eps, rng);
                        dual = DualAveraging::new(eps, config.target_accept);
                    }
                    w.counter += 1;
                }
                if iter + 1 == config.warmup {
                    eps = dual.final_step();
                }
            }
        } else {
            out.divergences += usize::from(t.divergent);
            out.accept_stats.push(t.accept_stat);
            out.tree_depths.push(t.depth);
            out.draws.push(current.q.clone());
        }
    }
    out.step_size = eps;
    out.inv_metric = inv_metric;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::stats::{mean, variance};

    struct StdNormal(usize);

    impl LogDensity for StdNormal {
        fn dim(&self) -> usize {
            self.0
        }
        fn log_density_gradient(&self, q: &[f64], grad: &mut [f64]) -> f64 {
            for (g, x) in grad.iter_mut().zip(q) {
                *g = -x;
            }
            -0.5 * dot(q, q)
        }
    }

    struct Scaled(Vec<f64>);

    impl LogDensity for Scaled {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn log_density_gradient(&self, q: &[f64], grad: &mut [f64]) -> f64 {
            let mut lp = 0.0;
            for ((g, x), s) in grad.iter_mut().zip(q).zip(&self.0) {
                *g = -x / (s * s);
                lp -= 0.5 * (x / s).powi(2);
            }
            lp
        }
    }

    #[test]
    fn fixed_step_preserves_standard_normal() {
        let config = ChainConfig { warmup: 100, iters: 100_000, adaptation: Adaptation::FixedStep(0.5), ..Default::default() };
        let mut rng = rng_from_seed(11);
        let out = run_chain(&StdNormal(4), &[0.5, -0.5, 1.0, 0.0], &config, &mut rng).unwrap();
        assert_eq!(out.draws.len(), 100_000);
        assert_eq!(out.divergences, 0);
        for k in 0..4 {
            let xs: Vec<f64> = out.draws.iter().map(|q| q[k]).collect();
            let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
            // NUTS draws on a normal are close to independent; allow for
            // mild autocorrelation by using 3 SE of a halved sample size
            let n_eff = xs.len() as f64 / 2.0;
            let se_mean = (1.0 / n_eff).sqrt();
            let se_sq = (2.0 / n_eff).sqrt();
            assert!(mean(&xs).abs() < 3.0 * se_mean, "mean[{k}] = {}", mean(&xs));
            assert!((mean(&sq) - 1.0).abs() < 3.0 * se_sq, "E x^2[{k}] = {}", mean(&sq));
        }
    }

    #[test]
    fn adaptation_learns_scales() {
        let scales = vec![0.01, 1.0, 100.0];
        let config = ChainConfig { warmup: 1000, iters: 2000, target_accept: 0.8, ..Default::default() };
        let mut rng = rng_from_seed(5);
        let out = run_chain(&Scaled(scales.clone()), &[0.0, 0.0, 0.0], &config, &mut rng).unwrap();
        for (k, s) in scales.iter().enumerate() {
            let ratio = out.inv_metric[k] / (s * s);
            assert!(ratio > 0.5 && ratio < 2.0, "metric[{k}] ratio {ratio}");
            let xs: Vec<f64> = out.draws.iter().map(|q| q[k]).collect();
            let sd_ratio = variance(&xs).sqrt() / s;
            assert!((sd_ratio - 1.0).abs() < 0.1, "sd ratio {sd_ratio}");
        }
        let accept = mean(&out.accept_stats);
        assert!(accept > 0.7 && accept < 0.95, "accept {accept}");
        assert_eq!(out.divergences, 0);
    }

    #[test]
    fn huge_step_diverges() {
        let config = ChainConfig { warmup: 0, iters: 50, adaptation: Adaptation::FixedStep(200.0), ..Default::default() };
        let mut rng = rng_from_seed(1);
        let out = run_chain(&StdNormal(2), &[0.0, 0.0], &config, &mut rng).unwrap();
        assert!(out.divergences > 40);
    }

    #[test]
    fn infinite_start_is_a_chain_failure() {
        struct Nowhere;
        impl LogDensity for Nowhere {
            fn dim(&self) -> usize {
                1
            }
            fn log_density_gradient(&self, _q: &[f64], _grad: &mut [f64]) -> f64 {
                f64::NEG_INFINITY
            }
        }
        let mut rng = rng_from_seed(1);
        let r = run_chain(&Nowhere, &[0.0], &ChainConfig::default(), &mut rng);
        assert!(matches!(r, Err(Error::ChainFailure { .. })));
    }

    #[test]
    fn depth_is_capped() {
        let config = ChainConfig {
            warmup: 0,
            iters: 20,
            max_depth: 3,
            adaptation: Adaptation::FixedStep(1e-3),
            ..Default::default()
        };
        let mut rng = rng_from_seed(2);
        let out = run_chain(&StdNormal(3), &[1.0, 0.0, 0.0], &config, &mut rng).unwrap();
        assert!(out.tree_depths.iter().all(|&d| d == 3));
        assert_eq!(out.leapfrog_steps, 20 * 7);
    }
}
