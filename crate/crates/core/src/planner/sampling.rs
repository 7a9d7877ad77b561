use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PlanError, PlannerParams};
use crate::envgen::{CellClass, CostMap, EnvironmentMap};
use crate::grid::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSample {
    pub nodes: Vec<Point>,
    /// Set when biased sampling exhausted its rejection budget and the
    /// remainder was drawn uniformly.
    pub stalled: bool,
}

pub(crate) fn check_sizes(env: &EnvironmentMap, cost: &CostMap) -> Result<(), PlanError> {
    if !cost.matches(env) {
        return Err(PlanError::SizeMismatch {
            cost_w: cost.width(),
            cost_h: cost.height(),
            env_w: env.width(),
            env_h: env.height(),
        });
    }
    Ok(())
}

/// Acceptance probability of a biased proposal at cost `c`:
/// `(1 / (eps + c)) / (1 / eps)`.
pub(crate) fn acceptance(epsilon: f64, c: f64) -> f64 {
    epsilon / (epsilon + c)
}

fn propose(rng: &mut ChaCha8Rng, env: &EnvironmentMap) -> Point {
    Point::new(
        rng.random_range(0.0..env.width() as f64),
        rng.random_range(0.0..env.height() as f64),
    )
}

fn uniform_node(rng: &mut ChaCha8Rng, env: &EnvironmentMap) -> Point {
    loop {
        let p = propose(rng, env);
        if !env.is_blocked(p) {
            return p;
        }
    }
}

/// Draws `params.n_nodes` positions in non-wall cells: `ceil(mix * n)`
/// uniformly, the rest by rejection with acceptance `eps / (eps + cost)`.
pub fn sample_nodes(
    cost: &CostMap,
    env: &EnvironmentMap,
    params: &PlannerParams,
) -> Result<NodeSample, PlanError> {
    params.validate()?;
    check_sizes(env, cost)?;
    if env.count(CellClass::Wall) == env.width() * env.height() {
        return Err(PlanError::NoFreeSpace);
    }
    let n = params.n_nodes;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n_uniform = ((params.uniform_mix * n as f64).ceil() as usize).min(n);
    let mut nodes: Vec<Point> = (0..n_uniform).map(|_| uniform_node(&mut rng, env)).collect();

    let budget = 1000 * n;
    let mut rejected = 0;
    let mut stalled = false;
    while nodes.len() < n {
        if rejected >= budget {
            stalled = true;
            nodes.push(uniform_node(&mut rng, env));
            continue;
        }
        let p = propose(&mut rng, env);
        let accept = !env.is_blocked(p) && rng.random::<f64>() < acceptance(params.epsilon, cost.at(p));
        if accept {
            nodes.push(p);
        } else {
            rejected += 1;
        }
    }
    Ok(NodeSample { nodes, stalled })
}
