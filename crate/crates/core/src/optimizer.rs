//! Hybrid particle-swarm / simulated-annealing search.
//!
//! The swarm engine ([`pso_sa`]) is generic over an [`Objective`] on a box
//! domain. [`optimize`] instantiates it for the antenna placement problem:
//! the decision vector is the flattened LCS element positions
//! `[x1, y1, z1, ..., xM, yM, zM]`, optionally followed by the tilt angle, and
//! the fitness is the MRT received SNR at those positions.
//!
//! Annealing acts on the swarm incumbent (the global best that particles are
//! attracted to): each iteration the best particle of the iteration replaces
//! the incumbent if it improves on it, or with probability
//! `exp((new - old) / temperature)` otherwise. The best score ever evaluated
//! is tracked separately so the reported trace never decreases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beamforming::mrt_snr;
use crate::channel::{PathSet, PathWeights};
use crate::error::{Error, Result};
use crate::geometry::{spacing_ok, ArrayConfig, TiltAngle, Vec3, MAX_TILT};

/// Attempts allowed when rejection-sampling a random feasible particle.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct PsoParams {
    pub particles: usize,
    pub max_iters: usize,
    /// Attraction toward the swarm incumbent.
    pub c1: f64,
    /// Attraction toward the particle's own best.
    pub c2: f64,
    pub inertia_max: f64,
    pub inertia_min: f64,
    /// Velocity clamp per dimension as a fraction of that dimension's range.
    pub velocity_fraction: f64,
    /// Velocity clamp of the tilt dimension as a fraction of the tilt range.
    pub tilt_velocity_fraction: f64,
    pub initial_temperature: f64,
    pub cooling: f64,
    pub seed: u64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            particles: 30,
            max_iters: 100,
            c1: 1.5,
            c2: 1.5,
            inertia_max: 0.9,
            inertia_min: 0.4,
            velocity_fraction: 0.2,
            tilt_velocity_fraction: 0.2,
            initial_temperature: 1.0,
            cooling: 0.98,
            seed: 0,
        }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.particles < 1 {
            bad.push("particles must be >= 1".to_string());
        }
        if self.max_iters < 1 {
            bad.push("max_iters must be >= 1".to_string());
        }
        if !(self.inertia_min > 0.0 && self.inertia_max >= self.inertia_min) {
            bad.push(format!(
                "inertia bounds need inertia_max >= inertia_min > 0 (got {}, {})",
                self.inertia_max, self.inertia_min
            ));
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            bad.push(format!("cooling {} must lie in (0, 1)", self.cooling));
        }
        if !(self.initial_temperature > 0.0) {
            bad.push(format!(
                "initial_temperature {} must be > 0",
                self.initial_temperature
            ));
        }
        if !(self.velocity_fraction >= 0.0) {
            bad.push(format!(
                "velocity_fraction {} must be >= 0",
                self.velocity_fraction
            ));
        }
        if !(self.tilt_velocity_fraction >= 0.0) {
            bad.push(format!(
                "tilt_velocity_fraction {} must be >= 0",
                self.tilt_velocity_fraction
            ));
        }
        if !(self.c1.is_finite() && self.c2.is_finite()) {
            bad.push("acceleration coefficients must be finite".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }
}

/// Linearly decaying inertia weight for 0-based iteration `i`.
pub fn inertia(i: usize, params: &PsoParams) -> f64 {
    params.inertia_max
        - (params.inertia_max - params.inertia_min) / params.max_iters as f64 * i as f64
}

/// Per-dimension velocity clamp: components are kept in `[-lower[d], upper[d]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityBounds {
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

impl VelocityBounds {
    pub fn from_fraction(lb: &[f64], ub: &[f64], fraction: f64) -> Self {
        let v: Vec<f64> = lb.iter().zip(ub).map(|(l, u)| fraction * (u - l)).collect();
        Self {
            upper: v.clone(),
            lower: v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmResult {
    pub best_position: Vec<f64>,
    pub best_score: f64,
    /// Best-so-far score after initialization and after every iteration.
    pub score_trace: Vec<f64>,
    pub iterations_run: usize,
}

/// Velocity update with explicit random factors `s1`, `s2`:
/// `v' = w v + c1 s1 (gbest - q) + c2 s2 (lbest - q)`, then clamped.
#[allow(clippy::too_many_arguments)]
pub fn velocity_step(
    particle: &Particle,
    gbest: &[f64],
    omega: f64,
    c1: f64,
    c2: f64,
    s1: &[f64],
    s2: &[f64],
    bounds: &VelocityBounds,
) -> Vec<f64> {
    (0..particle.position.len())
        .map(|d| {
            let q = particle.position[d];
            let v = omega * particle.velocity[d]
                + c1 * s1[d] * (gbest[d] - q)
                + c2 * s2[d] * (particle.best_position[d] - q);
            v.min(bounds.upper[d]).max(-bounds.lower[d])
        })
        .collect()
}

pub fn update_velocity<R: Rng + ?Sized>(
    particle: &Particle,
    gbest: &[f64],
    omega: f64,
    params: &PsoParams,
    bounds: &VelocityBounds,
    rng: &mut R,
) -> Vec<f64> {
    let dim = particle.position.len();
    let s1: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let s2: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    velocity_step(
        particle, gbest, omega, params.c1, params.c2, &s1, &s2, bounds,
    )
}

/// Moves by `velocity` and projects back onto the box `[lb, ub]`.
pub fn update_position(position: &[f64], velocity: &[f64], lb: &[f64], ub: &[f64]) -> Vec<f64> {
    position
        .iter()
        .zip(velocity)
        .zip(lb.iter().zip(ub))
        .map(|((q, v), (l, u))| (q + v).min(*u).max(*l))
        .collect()
}

/// Metropolis acceptance: improvements and ties always pass, a worse score
/// passes with probability `exp((new - old) / temperature)`.
pub fn sa_accept<R: Rng + ?Sized>(new: f64, old: f64, temperature: f64, rng: &mut R) -> bool {
    if new >= old {
        return true;
    }
    let p = ((new - old) / temperature).exp().min(1.0);
    rng.random::<f64>() < p
}

/// A maximization problem on a box.
pub trait Objective {
    fn lower(&self) -> &[f64];
    fn upper(&self) -> &[f64];
    fn is_feasible(&self, _x: &[f64]) -> bool {
        true
    }
    fn evaluate(&self, x: &[f64]) -> f64;

    fn velocity_bounds(&self, params: &PsoParams) -> VelocityBounds {
        VelocityBounds::from_fraction(self.lower(), self.upper(), params.velocity_fraction)
    }
}

/// Runs the PSO-SA loop from the given initial positions.
///
/// Particles start at rest. Moves that land on an infeasible point are
/// rejected: the particle stays where it was and scores `-inf` for that
/// iteration. With `stop_at` set, the search ends after the first iteration
/// (or the initialization) whose best-so-far score reaches it.
pub fn pso_sa<O: Objective + ?Sized, R: Rng + ?Sized>(
    objective: &O,
    initial: Vec<Vec<f64>>,
    params: &PsoParams,
    rng: &mut R,
    stop_at: Option<f64>,
) -> Result<SwarmResult> {
    params.validate()?;
    let lb = objective.lower();
    let ub = objective.upper();
    let dim = lb.len();
    if initial.is_empty() || initial.iter().any(|x| x.len() != dim) {
        return Err(Error::Input(format!(
            "initial swarm must hold positions of dimension {dim}"
        )));
    }
    if initial.iter().any(|x| !objective.is_feasible(x)) {
        return Err(Error::Config(
            "initial swarm contains an infeasible particle".into(),
        ));
    }
    let bounds = objective.velocity_bounds(params);

    let mut swarm: Vec<Particle> = initial
        .into_iter()
        .map(|position| {
            let score = objective.evaluate(&position);
            Particle {
                velocity: vec![0.0; dim],
                best_position: position.clone(),
                best_score: score,
                position,
            }
        })
        .collect();

    let first = swarm.iter().enumerate().fold(0, |b, (k, p)| {
        if p.best_score > swarm[b].best_score {
            k
        } else {
            b
        }
    });
    let mut incumbent = swarm[first].position.clone();
    let mut incumbent_score = swarm[first].best_score;
    let mut best = incumbent.clone();
    let mut best_score = incumbent_score;
    let mut trace = vec![best_score];
    let reached = |s: f64| stop_at.is_some_and(|t| s >= t);

    let mut temperature = params.initial_temperature;
    let mut iterations = 0;
    if !reached(best_score) {
        for i in 0..params.max_iters {
            let omega = inertia(i, params);
            let mut candidate: Option<(usize, f64)> = None;
            for (k, p) in swarm.iter_mut().enumerate() {
                let velocity = update_velocity(p, &incumbent, omega, params, &bounds, rng);
                let moved = update_position(&p.position, &velocity, lb, ub);
                p.velocity = velocity;
                if !objective.is_feasible(&moved) {
                    continue;
                }
                p.position = moved;
                let score = objective.evaluate(&p.position);
                if score > p.best_score {
                    p.best_score = score;
                    p.best_position.clone_from(&p.position);
                }
                if candidate.is_none_or(|(_, s)| score > s) {
                    candidate = Some((k, score));
                }
            }

            temperature *= params.cooling;
            if let Some((k, score)) = candidate {
                if sa_accept(score, incumbent_score, temperature, rng) {
                    incumbent.clone_from(&swarm[k].position);
                    incumbent_score = score;
                }
                if score > best_score {
                    best.clone_from(&swarm[k].position);
                    best_score = score;
                }
            }
            trace.push(best_score);
            iterations = i + 1;
            if reached(best_score) {
                break;
            }
        }
    }

    Ok(SwarmResult {
        best_position: best,
        best_score,
        score_trace: trace,
        iterations_run: iterations,
    })
}

/// Which placement degrees of freedom the search may use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SearchSpace {
    /// Element positions only; tilt fixed at the array's configured value.
    Positions,
    /// Element positions plus the mechanical tilt within `[min, max]`.
    PositionsAndTilt { min: TiltAngle, max: TiltAngle },
}

impl SearchSpace {
    pub fn full_tilt_range() -> Self {
        SearchSpace::PositionsAndTilt {
            min: TiltAngle::from_radians(-MAX_TILT).unwrap(),
            max: TiltAngle::from_radians(MAX_TILT).unwrap(),
        }
    }
}

/// Transmit-side settings needed to score a placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub power_budget: f64,
    pub noise_power: f64,
    pub pattern_sharpness: f64,
}

/// MRT SNR of an antenna placement for one channel realization.
pub struct PlacementObjective<'a> {
    cfg: &'a ArrayConfig,
    paths: &'a PathSet,
    space: SearchSpace,
    link: LinkBudget,
    fixed_weights: Option<PathWeights>,
    lb: Vec<f64>,
    ub: Vec<f64>,
}

impl<'a> PlacementObjective<'a> {
    pub fn new(
        cfg: &'a ArrayConfig,
        paths: &'a PathSet,
        space: SearchSpace,
        link: LinkBudget,
    ) -> Self {
        let mut lb = Vec::with_capacity(3 * cfg.element_count() + 1);
        let mut ub = Vec::with_capacity(lb.capacity());
        for region in &cfg.movement_regions {
            lb.extend_from_slice(&region.min);
            ub.extend_from_slice(&region.max);
        }
        let fixed_weights = match space {
            SearchSpace::Positions => {
                Some(PathWeights::new(paths, cfg.tilt, link.pattern_sharpness))
            }
            SearchSpace::PositionsAndTilt { min, max } => {
                lb.push(min.radians());
                ub.push(max.radians());
                None
            }
        };
        Self {
            cfg,
            paths,
            space,
            link,
            fixed_weights,
            lb,
            ub,
        }
    }

    pub fn decode(&self, x: &[f64]) -> (Vec<Vec3>, TiltAngle) {
        let m = self.cfg.element_count();
        let positions = (0..m)
            .map(|e| Vec3::new(x[3 * e], x[3 * e + 1], x[3 * e + 2]))
            .collect();
        let tilt = match self.space {
            SearchSpace::Positions => self.cfg.tilt,
            SearchSpace::PositionsAndTilt { .. } => {
                TiltAngle::from_radians(x[3 * m]).expect("tilt bounded by the search box")
            }
        };
        (positions, tilt)
    }

    pub fn encode(&self, positions: &[Vec3], tilt: TiltAngle) -> Vec<f64> {
        let mut x: Vec<f64> = positions.iter().flat_map(|p| [p.x, p.y, p.z]).collect();
        if let SearchSpace::PositionsAndTilt { min, max } = self.space {
            x.push(tilt.radians().clamp(min.radians(), max.radians()));
        }
        x
    }

    /// Uniform random placement inside the movement regions (and tilt range)
    /// that satisfies the spacing constraint.
    pub fn random_feasible<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let x: Vec<f64> = self
                .lb
                .iter()
                .zip(&self.ub)
                .map(|(&l, &u)| if u > l { rng.random_range(l..=u) } else { l })
                .collect();
            if self.is_feasible(&x) {
                return Ok(x);
            }
        }
        Err(Error::Config(format!(
            "no placement satisfying min spacing {} found in {MAX_PLACEMENT_ATTEMPTS} attempts",
            self.cfg.min_spacing
        )))
    }
}

impl Objective for PlacementObjective<'_> {
    fn lower(&self) -> &[f64] {
        &self.lb
    }

    fn upper(&self) -> &[f64] {
        &self.ub
    }

    fn is_feasible(&self, x: &[f64]) -> bool {
        let (positions, _) = self.decode(x);
        spacing_ok(&positions, self.cfg.min_spacing)
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        let (positions, tilt) = self.decode(x);
        let globals = self.cfg.globals_with_tilt(&positions, tilt);
        let h = match &self.fixed_weights {
            Some(w) => w.channel(&globals),
            None => {
                PathWeights::new(self.paths, tilt, self.link.pattern_sharpness).channel(&globals)
            }
        };
        mrt_snr(&h, self.link.power_budget, self.link.noise_power)
            .expect("channel and beam dimensions agree")
    }

    fn velocity_bounds(&self, params: &PsoParams) -> VelocityBounds {
        let mut b = VelocityBounds::from_fraction(&self.lb, &self.ub, params.velocity_fraction);
        if let SearchSpace::PositionsAndTilt { min, max } = self.space {
            let v = params.tilt_velocity_fraction * (max.radians() - min.radians());
            *b.upper.last_mut().unwrap() = v;
            *b.lower.last_mut().unwrap() = v;
        }
        b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementResult {
    pub swarm: SwarmResult,
    pub positions: Vec<Vec3>,
    pub tilt: TiltAngle,
}

/// Searches element positions (and optionally tilt) maximizing the MRT SNR
/// for the channel realization `paths`.
///
/// Particle 0 starts at the nominal placement; the rest are drawn uniformly
/// from the movement regions until they satisfy the spacing constraint.
pub fn optimize(
    cfg: &ArrayConfig,
    paths: &PathSet,
    space: SearchSpace,
    params: &PsoParams,
    link: LinkBudget,
    stop_at: Option<f64>,
) -> Result<PlacementResult> {
    params.validate()?;
    let objective = PlacementObjective::new(cfg, paths, space, link);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut initial = Vec::with_capacity(params.particles);
    initial.push(objective.encode(&cfg.local_positions, cfg.tilt));
    while initial.len() < params.particles {
        initial.push(objective.random_feasible(&mut rng)?);
    }
    let swarm = pso_sa(&objective, initial, params, &mut rng, stop_at)?;
    let (positions, tilt) = objective.decode(&swarm.best_position);
    Ok(PlacementResult {
        swarm,
        positions,
        tilt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::check_constraints;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    struct Sphere {
        lb: Vec<f64>,
        ub: Vec<f64>,
    }

    impl Objective for Sphere {
        fn lower(&self) -> &[f64] {
            &self.lb
        }
        fn upper(&self) -> &[f64] {
            &self.ub
        }
        fn evaluate(&self, x: &[f64]) -> f64 {
            -x.iter().map(|v| (v - 0.3) * (v - 0.3)).sum::<f64>()
        }
    }

    fn particle(q: f64, v: f64, lbest: f64) -> Particle {
        Particle {
            position: vec![q],
            velocity: vec![v],
            best_position: vec![lbest],
            best_score: 0.0,
        }
    }

    #[test]
    fn inertia_schedule() {
        let p = PsoParams {
            inertia_max: 0.9,
            inertia_min: 0.4,
            max_iters: 100,
            ..PsoParams::default()
        };
        assert_eq!(inertia(0, &p), 0.9);
        assert_abs_diff_eq!(inertia(100, &p), 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(inertia(50, &p), 0.65, epsilon = 1e-15);
    }

    #[test]
    fn velocity_without_attraction_is_inertial() {
        let wide = VelocityBounds {
            upper: vec![10.0],
            lower: vec![10.0],
        };
        let p = particle(0.4, 1.2, 0.4);
        let v = velocity_step(&p, &[0.4], 0.7, 1.5, 1.5, &[0.3], &[0.9], &wide);
        assert_abs_diff_eq!(v[0], 0.84, epsilon = 1e-15);

        let tight = VelocityBounds {
            upper: vec![0.5],
            lower: vec![0.5],
        };
        assert_eq!(
            velocity_step(&p, &[0.4], 0.7, 1.5, 1.5, &[0.3], &[0.9], &tight),
            vec![0.5]
        );

        let still = particle(0.4, 0.0, 0.4);
        assert_eq!(
            velocity_step(&still, &[0.4], 0.7, 1.5, 1.5, &[0.3], &[0.9], &wide),
            vec![0.0]
        );
    }

    #[test]
    fn velocity_hand_evaluation() {
        // w v + c1 s1 (g - q) + c2 s2 (l - q) = 0.5 + 1 - 1
        let wide = VelocityBounds {
            upper: vec![10.0],
            lower: vec![10.0],
        };
        let p = particle(0.0, 1.0, -1.0);
        let v = velocity_step(&p, &[1.0], 0.5, 2.0, 2.0, &[0.5], &[0.5], &wide);
        assert_abs_diff_eq!(v[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn velocity_clamp_is_asymmetric_capable() {
        let b = VelocityBounds {
            upper: vec![0.1],
            lower: vec![0.3],
        };
        let p = particle(0.0, -5.0, 0.0);
        assert_eq!(
            velocity_step(&p, &[0.0], 1.0, 0.0, 0.0, &[0.0], &[0.0], &b),
            vec![-0.3]
        );
    }

    #[test]
    fn position_projection() {
        assert_eq!(update_position(&[0.0], &[0.0], &[-1.0], &[1.0]), vec![0.0]);
        assert_eq!(update_position(&[0.9], &[0.5], &[0.0], &[1.0]), vec![1.0]);
        let q = update_position(&[0.2, 0.3], &[-0.5, 0.1], &[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(q[0], 0.0);
        assert_abs_diff_eq!(q[1], 0.4, epsilon = 1e-15);
    }

    #[test]
    fn sa_acceptance_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sa_accept(2.0, 1.0, 1e-9, &mut rng));
        assert!(sa_accept(1.0, 1.0, 1e-9, &mut rng));
        assert!(!sa_accept(0.0, 1.0, 1e-6, &mut rng));
    }

    #[test]
    fn sa_acceptance_rate_matches_boltzmann() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sa_accept(0.0, 1.0, 1.0, &mut rng))
            .count();
        let rate = hits as f64 / n as f64;
        assert!((rate - (-1f64).exp()).abs() < 0.005, "rate {rate}");
    }

    #[test]
    fn temperature_strictly_decreases() {
        let p = PsoParams::default();
        let mut t = p.initial_temperature;
        for _ in 0..500 {
            let next = t * p.cooling;
            assert!(next < t);
            t = next;
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        let p = PsoParams {
            cooling: 1.5,
            particles: 0,
            ..PsoParams::default()
        };
        let msg = p.validate().unwrap_err().to_string();
        assert!(
            msg.contains("cooling") && msg.contains("particles"),
            "{msg}"
        );
    }

    #[test]
    fn swarm_converges_on_sphere() {
        let obj = Sphere {
            lb: vec![-1.0; 3],
            ub: vec![1.0; 3],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let initial: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect();
        let r = pso_sa(&obj, initial, &PsoParams::default(), &mut rng, None).unwrap();
        assert!(r.best_score > -1e-4, "{}", r.best_score);
        assert_eq!(r.iterations_run, 100);
        assert_eq!(r.score_trace.len(), 101);
    }

    #[test]
    fn early_stop_halts_the_search() {
        let obj = Sphere {
            lb: vec![-1.0; 2],
            ub: vec![1.0; 2],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = pso_sa(
            &obj,
            vec![vec![0.3, 0.3]],
            &PsoParams::default(),
            &mut rng,
            Some(-0.5),
        )
        .unwrap();
        assert_eq!(r.iterations_run, 0);
        assert_eq!(r.score_trace, vec![0.0]);
    }

    #[test]
    fn mismatched_initial_dimension_is_an_input_error() {
        let obj = Sphere {
            lb: vec![-1.0; 2],
            ub: vec![1.0; 2],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = pso_sa(&obj, vec![vec![0.0]], &PsoParams::default(), &mut rng, None);
        assert!(matches!(r, Err(Error::Input(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn trace_is_monotone_and_in_bounds(seed in any::<u64>(), k in 1usize..8, iters in 1usize..40) {
            let obj = Sphere { lb: vec![-1.0, 0.0], ub: vec![1.0, 2.0] };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let initial: Vec<Vec<f64>> = (0..k)
                .map(|_| vec![rng.random_range(-1.0..=1.0), rng.random_range(0.0..=2.0)])
                .collect();
            let params = PsoParams { max_iters: iters, ..PsoParams::default() };
            let r = pso_sa(&obj, initial, &params, &mut rng, None).unwrap();
            prop_assert!(r.score_trace.windows(2).all(|w| w[1] >= w[0]));
            prop_assert_eq!(*r.score_trace.last().unwrap(), r.best_score);
            prop_assert!(r.best_position[0] >= -1.0 && r.best_position[0] <= 1.0);
            prop_assert!(r.best_position[1] >= 0.0 && r.best_position[1] <= 2.0);
        }
    }

    mod placement {
        use super::*;
        use crate::beamforming::{mrt, received_snr};
        use crate::channel::{channel_vector, sample_paths, ChannelParams};

        const LAMBDA: f64 = 0.0857;

        fn scene(d_mov: f64, tilt_deg: f64) -> (ArrayConfig, PathSet) {
            let cfg = ArrayConfig::planar_grid(
                3,
                3,
                d_mov,
                d_mov,
                LAMBDA / 4.0,
                TiltAngle::from_degrees(tilt_deg).unwrap(),
                Vec3::new(0.0, 0.0, 10.0),
            )
            .unwrap();
            let params = ChannelParams {
                rician_k: 3.0,
                pathloss_exponent: 2.0,
                wavelength: LAMBDA,
                nlos_paths: 5,
                pattern_sharpness: 2.0,
            };
            let paths = sample_paths(
                &Vec3::new(400.0, 200.0, 300.0),
                &cfg.base_position,
                &params,
                &mut ChaCha8Rng::seed_from_u64(17),
            )
            .unwrap();
            (cfg, paths)
        }

        fn link() -> LinkBudget {
            LinkBudget {
                power_budget: 10.0,
                noise_power: 1e-11,
                pattern_sharpness: 2.0,
            }
        }

        fn nominal_snr(cfg: &ArrayConfig, paths: &PathSet) -> f64 {
            let h = channel_vector(paths, cfg, 2.0);
            received_snr(&h, &mrt(&h, 10.0).unwrap(), 1e-11)
                .unwrap()
                .snr_linear
        }

        #[test]
        fn frozen_swarm_reproduces_nominal_snr() {
            let (cfg, paths) = scene(5.0 * LAMBDA, -15.0);
            let params = PsoParams {
                particles: 1,
                max_iters: 1,
                velocity_fraction: 0.0,
                ..PsoParams::default()
            };
            let r = optimize(&cfg, &paths, SearchSpace::Positions, &params, link(), None).unwrap();
            assert_eq!(r.swarm.best_score, nominal_snr(&cfg, &paths));
            assert_eq!(r.positions, cfg.local_positions);
        }

        #[test]
        fn frozen_swarm_with_tilt_dimension_is_still_nominal() {
            let (cfg, paths) = scene(5.0 * LAMBDA, -15.0);
            let params = PsoParams {
                particles: 1,
                max_iters: 10,
                velocity_fraction: 0.0,
                ..PsoParams::default()
            };
            let r = optimize(
                &cfg,
                &paths,
                SearchSpace::full_tilt_range(),
                &params,
                link(),
                None,
            )
            .unwrap();
            assert_eq!(r.swarm.best_score, nominal_snr(&cfg, &paths));
            assert_eq!(r.tilt, cfg.tilt);
        }

        #[test]
        fn search_improves_on_nominal_and_stays_feasible() {
            let (cfg, paths) = scene(5.0 * LAMBDA, -15.0);
            let params = PsoParams {
                seed: 3,
                ..PsoParams::default()
            };
            let r = optimize(&cfg, &paths, SearchSpace::Positions, &params, link(), None).unwrap();
            assert!(r.swarm.best_score > nominal_snr(&cfg, &paths));
            assert!(check_constraints(&cfg, &r.positions).unwrap().is_feasible());
            assert!(r.swarm.score_trace.windows(2).all(|w| w[1] >= w[0]));
        }

        #[test]
        fn identical_seeds_identical_results() {
            let (cfg, paths) = scene(0.5 * LAMBDA, 0.0);
            let params = PsoParams {
                seed: 99,
                max_iters: 30,
                ..PsoParams::default()
            };
            let space = SearchSpace::full_tilt_range();
            let a = optimize(&cfg, &paths, space, &params, link(), None).unwrap();
            let b = optimize(&cfg, &paths, space, &params, link(), None).unwrap();
            assert_eq!(a, b);
            assert!(check_constraints(&cfg, &a.positions).unwrap().is_feasible());
            assert!(a.tilt.radians().abs() <= MAX_TILT);
        }

        #[test]
        fn impossible_spacing_is_a_configuration_error() {
            // Nominal placement is feasible, but random placements inside
            // overlapping boxes almost never are.
            let cfg = ArrayConfig::new(
                Vec3::zeros(),
                vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
                vec![
                    crate::geometry::MovementRegion::new([0.0, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap(),
                    crate::geometry::MovementRegion::new([0.0, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap(),
                ],
                1.0,
                TiltAngle::ZERO,
            )
            .unwrap();
            let (_, paths) = scene(LAMBDA, 0.0);
            let params = PsoParams {
                particles: 2,
                ..PsoParams::default()
            };
            let r = optimize(&cfg, &paths, SearchSpace::Positions, &params, link(), None);
            assert!(matches!(r, Err(Error::Config(_))));
        }
    }
}
