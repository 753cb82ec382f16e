//! Deterministic test problems.
//!
//! [`five_pose_problem`] is the small 2D loop used throughout the docs.
//! [`manhattan_2d`] and [`torus_3d`] generate pose graphs with the size and
//! structure of the common benchmark sets: a grid-world random walk with
//! revisit loop closures, and a trajectory wound around a torus with
//! ring-to-ring closures. Both start from dead-reckoned odometry.

use nalgebra::{DMatrix, Matrix3, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::factors::{BetweenFactor, PriorFactor};
use crate::graph::{key, FactorGraph, Variables};
use crate::io::{DatasetBundle, Dimension};
use crate::liegroups::{Pose2, Pose3, Rot3};
use crate::loss::LossFunction;

/// Quarter turn written with π rounded to 3.14. Four of these do not close a loop.
#[allow(clippy::approx_constant)]
pub const LITERAL_QUARTER_TURN: f64 = 3.14 / 2.0;

/// Five poses: a prior on x1, odometry x1→x2, and a square loop
/// x2→x3→x4→x5→x2 of 5 m sides turning by `-quarter_turn` each time, all with
/// sigmas (1, 1, 0.1). Initial values are perturbed by hand.
///
/// With `quarter_turn = π/2` the measurements are exactly consistent and the
/// optimum has zero cost.
#[allow(clippy::approx_constant)]
pub fn five_pose_problem(quarter_turn: f64) -> (FactorGraph, Variables) {
    let loss = LossFunction::diagonal_sigmas(&[1.0, 1.0, 0.1]).expect("positive sigmas");
    let mut graph = FactorGraph::new();
    graph.add(PriorFactor::new(key('x', 1), Pose2::identity(), loss.clone()));
    graph.add(BetweenFactor::new(key('x', 1), key('x', 2), Pose2::new(5.0, 0.0, 0.0), loss.clone()));
    for (a, b) in [(2, 3), (3, 4), (4, 5), (5, 2)] {
        graph.add(BetweenFactor::new(
            key('x', a),
            key('x', b),
            Pose2::new(5.0, 0.0, -quarter_turn),
            loss.clone(),
        ));
    }

    let mut init = Variables::new();
    init.add(key('x', 1), Pose2::new(0.2, -0.3, 0.2));
    init.add(key('x', 2), Pose2::new(5.1, 0.3, -0.1));
    init.add(key('x', 3), Pose2::new(9.9, -0.1, -3.14 / 2.0 - 0.2));
    init.add(key('x', 4), Pose2::new(10.2, -5.0, -3.14 + 0.1));
    init.add(key('x', 5), Pose2::new(5.1, -5.1, 3.14 / 2.0 - 0.1));
    (graph, init)
}

/// Exact solution of [`five_pose_problem`] for a quarter turn of π/2.
pub fn five_pose_ground_truth() -> Variables {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut v = Variables::new();
    v.add(key('x', 1), Pose2::identity());
    v.add(key('x', 2), Pose2::new(5.0, 0.0, 0.0));
    v.add(key('x', 3), Pose2::new(10.0, 0.0, -half_pi));
    v.add(key('x', 4), Pose2::new(10.0, -5.0, -2.0 * half_pi));
    v.add(key('x', 5), Pose2::new(5.0, -5.0, half_pi));
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub poses: usize,
    pub loop_closures: usize,
    pub seed: u64,
    pub translation_sigma: f64,
    pub rotation_sigma: f64,
}

impl SyntheticConfig {
    /// 3500 poses, 1954 loop closures (5453 edges in total).
    pub fn manhattan() -> Self {
        Self {
            poses: 3500,
            loop_closures: 1954,
            seed: 3500,
            translation_sigma: 0.05,
            rotation_sigma: 0.01,
        }
    }

    /// 5000 poses, 4049 loop closures (9048 edges in total).
    pub fn torus() -> Self {
        Self {
            poses: 5000,
            loop_closures: 4049,
            seed: 5000,
            translation_sigma: 0.05,
            rotation_sigma: 0.01,
        }
    }

    fn check(&self) -> Result<()> {
        if self.poses < 2 || self.translation_sigma.is_nan() || self.translation_sigma <= 0.0 || self.rotation_sigma.is_nan() || self.rotation_sigma <= 0.0 {
            return Err(Error::InvalidParameter(
                "need at least 2 poses and positive sigmas".into(),
            ));
        }
        Ok(())
    }
}

/// Picks `count` of `candidates` spread evenly along the list.
fn spread<T: Copy>(candidates: &[T], count: usize) -> Result<Vec<T>> {
    if count > candidates.len() {
        return Err(Error::InvalidParameter(format!(
            "only {} loop-closure candidates for {count} requested",
            candidates.len()
        )));
    }
    Ok((0..count)
        .map(|t| candidates[t * candidates.len() / count])
        .collect())
}

/// Grid-world random walk on a bounded Manhattan grid with 1 m steps and
/// 90° turns. A loop closure links a pose to the latest earlier visit of the
/// same cell.
pub fn manhattan_2d(config: &SyntheticConfig) -> Result<DatasetBundle> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let side = ((config.poses as f64).sqrt() / 3.0).ceil().max(4.0) as i64;
    let half_pi = std::f64::consts::FRAC_PI_2;
    const DIRS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

    let mut cells = Vec::with_capacity(config.poses);
    let mut headings = Vec::with_capacity(config.poses);
    let (mut cx, mut cy, mut dir) = (0i64, 0i64, 0usize);
    cells.push((cx, cy));
    headings.push(dir);
    for _ in 1..config.poses {
        let u: f64 = rng.random();
        if u < 0.15 {
            dir = (dir + 1) % 4;
        } else if u < 0.3 {
            dir = (dir + 3) % 4;
        }
        while !(0..side).contains(&(cx + DIRS[dir].0)) || !(0..side).contains(&(cy + DIRS[dir].1)) {
            dir = (dir + 3) % 4;
        }
        cx += DIRS[dir].0;
        cy += DIRS[dir].1;
        cells.push((cx, cy));
        headings.push(dir);
    }
    let truth: Vec<Pose2> = cells
        .iter()
        .zip(&headings)
        .map(|(&(x, y), &d)| Pose2::new(x as f64, y as f64, d as f64 * half_pi))
        .collect();

    let mut last_visit = std::collections::HashMap::new();
    let mut candidates = Vec::new();
    for (j, c) in cells.iter().enumerate() {
        if let Some(&i) = last_visit.get(c) {
            if j - i > 2 {
                candidates.push((i, j));
            }
        }
        last_visit.insert(*c, j);
    }
    let closures = spread(&candidates, config.loop_closures)?;

    let nt = Normal::new(0.0, config.translation_sigma).expect("positive sigma");
    let nr = Normal::new(0.0, config.rotation_sigma).expect("positive sigma");
    let (st, sr) = (config.translation_sigma, config.rotation_sigma);
    let info = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        1.0 / (st * st),
        1.0 / (st * st),
        1.0 / (sr * sr),
    ]));
    let loss = LossFunction::from_information(&info)?;
    let measure = |i: usize, j: usize, rng: &mut ChaCha8Rng| {
        let noise = Pose2::new(nt.sample(rng), nt.sample(rng), nr.sample(rng));
        truth[i].inverse().compose(&truth[j]).compose(&noise)
    };

    let mut bundle = DatasetBundle::empty();
    bundle.dimension = Some(Dimension::TwoD);
    let mut pose = truth[0];
    bundle.initials.add(key('x', 0), pose);
    for i in 0..config.poses - 1 {
        let m = measure(i, i + 1, &mut rng);
        pose = pose.compose(&m);
        bundle.initials.add(key('x', i as u64 + 1), pose);
        bundle.graph.add(BetweenFactor::new(key('x', i as u64), key('x', i as u64 + 1), m, loss.clone()));
    }
    for (i, j) in closures {
        let m = measure(i, j, &mut rng);
        bundle.graph.add(BetweenFactor::new(key('x', i as u64), key('x', j as u64), m, loss.clone()));
    }
    bundle.vertex_count = config.poses;
    bundle.edge_count = bundle.graph.len();
    Ok(bundle)
}

/// Trajectory wound ring by ring around a torus (major radius 10 m, minor
/// radius 5 m). Loop closures join each pose to its neighbour on the previous
/// ring, including the wrap from the last ring to the first.
pub fn torus_3d(config: &SyntheticConfig) -> Result<DatasetBundle> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let per_ring = ((config.poses as f64).sqrt() * 2.0_f64.sqrt()).round().max(3.0) as usize;
    let rings = config.poses.div_ceil(per_ring);
    let (major, minor) = (10.0, 5.0);
    let tau = std::f64::consts::TAU;

    let truth: Vec<Pose3> = (0..config.poses)
        .map(|k| {
            let (r, p) = (k / per_ring, k % per_ring);
            let u = tau * r as f64 / rings as f64;
            let v = tau * p as f64 / per_ring as f64;
            let (su, cu) = u.sin_cos();
            let (sv, cv) = v.sin_cos();
            let position = Vector3::new((major + minor * cv) * cu, (major + minor * cv) * su, minor * sv);
            let normal = Vector3::new(cv * cu, cv * su, sv);
            let forward = Vector3::new(-sv * cu, -sv * su, cv);
            let side = normal.cross(&forward);
            Pose3::new(
                Rot3::from_matrix(&Matrix3::from_columns(&[forward, side, normal])),
                position,
            )
        })
        .collect();

    let mut candidates = Vec::new();
    for j in 0..config.poses {
        let (r, p) = (j / per_ring, j % per_ring);
        let prev = if r == 0 { rings - 1 } else { r - 1 };
        let i = prev * per_ring + p;
        if i < config.poses && i != j && i.abs_diff(j) > 1 {
            candidates.push((i.min(j), i.max(j)));
        }
    }
    candidates.sort_unstable_by_key(|&(i, j)| (j, i));
    candidates.dedup();
    let closures = spread(&candidates, config.loop_closures)?;

    let nt = Normal::new(0.0, config.translation_sigma).expect("positive sigma");
    let nr = Normal::new(0.0, config.rotation_sigma).expect("positive sigma");
    let (st, sr) = (config.translation_sigma, config.rotation_sigma);
    let mut diag = [1.0 / (st * st); 6];
    for d in &mut diag[3..] {
        *d = 1.0 / (sr * sr);
    }
    let info = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&diag));
    let loss = LossFunction::from_information(&info)?;
    let measure = |i: usize, j: usize, rng: &mut ChaCha8Rng| {
        let noise = Vector6::new(
            nt.sample(rng),
            nt.sample(rng),
            nt.sample(rng),
            nr.sample(rng),
            nr.sample(rng),
            nr.sample(rng),
        );
        truth[i].inverse().compose(&truth[j]).compose(&Pose3::exp(&noise))
    };

    let mut bundle = DatasetBundle::empty();
    bundle.dimension = Some(Dimension::ThreeD);
    let mut pose = truth[0];
    bundle.initials.add(key('x', 0), pose);
    for i in 0..config.poses - 1 {
        let m = measure(i, i + 1, &mut rng);
        pose = pose.compose(&m);
        bundle.initials.add(key('x', i as u64 + 1), pose);
        bundle.graph.add(BetweenFactor::new(key('x', i as u64), key('x', i as u64 + 1), m, loss.clone()));
    }
    for (i, j) in closures {
        let m = measure(i, j, &mut rng);
        bundle.graph.add(BetweenFactor::new(key('x', i as u64), key('x', j as u64), m, loss.clone()));
    }
    bundle.vertex_count = config.poses;
    bundle.edge_count = bundle.graph.len();
    Ok(bundle)
}
