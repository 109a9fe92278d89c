//! Gravitational search: a population of candidate solutions ("nodes")
//! attracts each other with cost-derived masses, so good regions of a
//! box-bounded search space accumulate the swarm.
//!
//! Per iteration: evaluate costs, normalize them into masses, compute the
//! gravitational pull each node receives from the current `Kbest` elite,
//! then integrate velocities and positions and clamp back into the box. The
//! gravitational constant decays exponentially over the run, shifting the
//! search from exploration to exploitation.
//!
//! Reproducibility: every random draw comes from a stream keyed by
//! `(seed, iteration, node)`, so parallel and serial cost evaluation
//! schedules produce bit-identical runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Error, Result};

/// Box-bounded search domain.
#[derive(Clone, Debug)]
pub struct SearchSpace {
    bounds: Vec<(f64, f64)>,
}

impl SearchSpace {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Validation("search space needs at least one dimension".into()));
        }
        for (i, (lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Validation(format!(
                    "invalid bound for dimension {i}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(SearchSpace { bounds })
    }

    pub fn uniform(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        SearchSpace::new(vec![(lo, hi); dim])
    }

    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| if lo == hi { lo } else { rng.random_range(lo..hi) })
            .collect()
    }

    /// Clamp a position into the box, zeroing velocity on clamped dimensions.
    fn clamp(&self, position: &mut [f64], velocity: &mut [f64]) {
        for ((x, v), &(lo, hi)) in position.iter_mut().zip(velocity.iter_mut()).zip(&self.bounds) {
            if *x < lo {
                *x = lo;
                *v = 0.0;
            } else if *x > hi {
                *x = hi;
                *v = 0.0;
            }
        }
    }
}

/// How many elite nodes exert force at a given iteration.
#[derive(Clone, Copy, Debug)]
pub enum KbestSchedule {
    /// From the full population at the first iteration down to one at the end.
    LinearDecay,
    Constant(usize),
}

impl KbestSchedule {
    pub fn count(&self, iteration: usize, total_iterations: usize, nodes: usize) -> usize {
        match *self {
            KbestSchedule::LinearDecay => {
                let frac = iteration as f64 / total_iterations.max(1) as f64;
                let k = nodes as f64 - (nodes as f64 - 1.0) * frac;
                (k.round() as usize).clamp(1, nodes)
            }
            KbestSchedule::Constant(k) => k.clamp(1, nodes),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GsaConfig {
    pub nodes: usize,
    pub iterations: usize,
    /// Gravitational constant at the first iteration.
    pub g0: f64,
    /// Decay rate of the gravitational constant.
    pub alpha: f64,
    /// Distance regularizer keeping the force finite at zero separation.
    pub delta: f64,
    pub kbest: KbestSchedule,
    pub seed: u64,
}

impl GsaConfig {
    pub fn new(nodes: usize, iterations: usize, seed: u64) -> Self {
        GsaConfig {
            nodes,
            iterations,
            g0: 100.0,
            alpha: 20.0,
            delta: 1e-9,
            kbest: KbestSchedule::LinearDecay,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::Validation("gsa needs at least 2 nodes".into()));
        }
        if self.iterations < 1 {
            return Err(Error::Validation("gsa needs at least 1 iteration".into()));
        }
        if !(self.g0 > 0.0) || self.alpha < 0.0 || !(self.delta > 0.0) {
            return Err(Error::Validation(
                "gsa requires g0 > 0, alpha >= 0, delta > 0".into(),
            ));
        }
        Ok(())
    }
}

/// One population member.
#[derive(Clone, Debug)]
pub struct GsaNode {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub cost: f64,
    /// Normalized cost quality in [0, 1]: 1 at the best node, 0 at the worst.
    pub mass: f64,
    /// Mass share: masses normalized to sum to 1.
    pub share: f64,
}

#[derive(Clone, Debug)]
pub struct GsaResult {
    pub best_position: Vec<f64>,
    pub best_cost: f64,
    /// Best-so-far cost after each iteration; non-increasing.
    pub cost_trace: Vec<f64>,
    /// Gravitational constant at each iteration.
    pub gravity_trace: Vec<f64>,
}

/// Gravitational constant at iteration `t` of `total`:
/// `g0 * exp(-alpha * t / total)`.
pub fn update_gravity(g0: f64, alpha: f64, iteration: usize, total_iterations: usize) -> f64 {
    g0 * (-alpha * iteration as f64 / total_iterations as f64).exp()
}

/// Normalized masses and shares from raw costs (minimization).
///
/// The best (smallest) cost maps to mass 1, the worst to 0, and shares sum to
/// one. All-equal costs degenerate to uniform shares `1/N`.
pub fn compute_masses(costs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = costs.len();
    let best = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let worst = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let masses: Vec<f64> = if worst > best {
        costs.iter().map(|c| (c - worst) / (best - worst)).collect()
    } else {
        vec![1.0; n]
    };
    let total: f64 = masses.iter().sum();
    let shares = masses.iter().map(|m| m / total).collect();
    (masses, shares)
}

/// Per-node force vectors from the `kbest_count` lowest-cost attractors.
///
/// For node `j`:
/// `F_j = sum_q rand_q * g * share_j * share_q / (|x_j - x_q|^2 + delta) * (x_q - x_j)`
/// with one fresh `rand_q` per attractor pair, drawn from node `j`'s stream.
///
/// The denominator is the *squared* separation plus the regularizer. Since
/// the displacement numerator scales with the separation, the attraction per
/// unit distance grows as a cluster contracts, so refinement keeps working at
/// every scale; with a first-power denominator the late-stage kicks have a
/// fixed absolute size and the swarm freezes well short of the optimum.
pub fn compute_force(
    nodes: &[GsaNode],
    g: f64,
    kbest_count: usize,
    delta: f64,
    rngs: &mut [ChaCha8Rng],
) -> Vec<Vec<f64>> {
    let dim = nodes.first().map_or(0, |n| n.position.len());
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a].cost.total_cmp(&nodes[b].cost).then(a.cmp(&b)));
    let kbest = &order[..kbest_count.clamp(1, nodes.len())];

    nodes
        .iter()
        .zip(rngs.iter_mut())
        .enumerate()
        .map(|(j, (node, rng))| {
            let mut force = vec![0.0; dim];
            for &q in kbest {
                if q == j {
                    continue;
                }
                let other = &nodes[q];
                let rand_q: f64 = rng.random();
                let dist_sq: f64 = node
                    .position
                    .iter()
                    .zip(&other.position)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let scale = rand_q * g * node.share * other.share / (dist_sq + delta);
                for k in 0..dim {
                    force[k] += scale * (other.position[k] - node.position[k]);
                }
            }
            force
        })
        .collect()
}

/// Velocity and position update for one node:
/// `v <- rand_j * v + F / share`, `x <- x + v`, then box clamp.
/// A massless node (share 0) gets zero acceleration and coasts.
pub fn update_kinematics(
    node: &mut GsaNode,
    force: &[f64],
    space: &SearchSpace,
    rng: &mut ChaCha8Rng,
) {
    let rand_j: f64 = rng.random();
    for k in 0..node.position.len() {
        let acceleration = if node.share > 0.0 {
            force[k] / node.share
        } else {
            0.0
        };
        node.velocity[k] = rand_j * node.velocity[k] + acceleration;
        node.position[k] += node.velocity[k];
    }
    space.clamp(&mut node.position, &mut node.velocity);
}

fn node_rngs(seed: u64, phase: u64, nodes: usize) -> Vec<ChaCha8Rng> {
    (0..nodes as u64)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(phase << 32 | j);
            rng
        })
        .collect()
}

/// Run the search. `cost_fn` must be a pure function of the position; return
/// `None` (or a non-finite value) to mark a failed evaluation, which is
/// scored as the worst cost of that iteration instead of aborting the swarm.
pub fn run_gsa<F>(space: &SearchSpace, cost_fn: F, config: &GsaConfig) -> Result<GsaResult>
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    config.validate()?;
    let dim = space.dimension();

    let mut nodes: Vec<GsaNode> = node_rngs(config.seed, 0, config.nodes)
        .iter_mut()
        .map(|rng| GsaNode {
            position: space.sample(rng),
            velocity: vec![0.0; dim],
            cost: f64::INFINITY,
            mass: 0.0,
            share: 0.0,
        })
        .collect();

    let mut best_position = nodes[0].position.clone();
    let mut best_cost = f64::INFINITY;
    let mut cost_trace = Vec::with_capacity(config.iterations);
    let mut gravity_trace = Vec::with_capacity(config.iterations);

    for iteration in 0..config.iterations {
        let raw: Vec<Option<f64>> = nodes
            .par_iter()
            .map(|node| cost_fn(&node.position).filter(|c| c.is_finite()))
            .collect();
        let worst = raw
            .iter()
            .flatten()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        for (node, cost) in nodes.iter_mut().zip(&raw) {
            // failed evaluations score as the iteration's worst
            node.cost = cost.unwrap_or(if worst.is_finite() { worst } else { 0.0 });
        }
        for (node, cost) in nodes.iter().zip(&raw) {
            if let Some(c) = cost {
                if *c < best_cost {
                    best_cost = *c;
                    best_position.clone_from(&node.position);
                }
            }
        }
        cost_trace.push(best_cost);

        let g = update_gravity(config.g0, config.alpha, iteration, config.iterations);
        gravity_trace.push(g);

        let costs: Vec<f64> = nodes.iter().map(|n| n.cost).collect();
        let (masses, shares) = compute_masses(&costs);
        for ((node, mass), share) in nodes.iter_mut().zip(masses).zip(shares) {
            node.mass = mass;
            node.share = share;
        }

        let kbest_count = config
            .kbest
            .count(iteration, config.iterations, config.nodes);
        let mut rngs = node_rngs(config.seed, iteration as u64 + 1, config.nodes);
        let forces = compute_force(&nodes, g, kbest_count, config.delta, &mut rngs);
        for ((node, force), rng) in nodes.iter_mut().zip(&forces).zip(rngs.iter_mut()) {
            update_kinematics(node, force, space, rng);
        }
    }

    debug_assert!(cost_trace.windows(2).all(|w| w[1] <= w[0]));
    Ok(GsaResult {
        best_position,
        best_cost,
        cost_trace,
        gravity_trace,
    })
}

/// Classic box-bounded benchmark functions.
pub mod benchmarks {
    /// `sum x_i^2`; minimum 0 at the origin.
    pub fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    /// `sum 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2`; minimum 0 at all-ones.
    pub fn rosenbrock(x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }

    /// `10 d + sum x_i^2 - 10 cos(2 pi x_i)`; minimum 0 at the origin.
    pub fn rastrigin(x: &[f64]) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        10.0 * x.len() as f64
            + x.iter()
                .map(|v| v * v - 10.0 * (two_pi * v).cos())
                .sum::<f64>()
    }

    /// Conventional search range for each benchmark.
    pub fn default_range(name: &str) -> Option<(f64, f64)> {
        match name {
            "sphere" => Some((-5.0, 5.0)),
            "rosenbrock" => Some((-2.048, 2.048)),
            "rastrigin" => Some((-5.12, 5.12)),
            _ => None,
        }
    }
}
