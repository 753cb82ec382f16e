//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.
//!
//!     cargo test --test acceptance

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Cursor;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use fgopt::factors::numerical_jacobians;
use fgopt::graph::default_ordering;
use fgopt::io::{add_auto_prior, load_file, load_pose_graph, DatasetBundle, LoadOptions};
use fgopt::sparse::{amd_ordering, linearize, pcg_solve, SparseMatrix, SymbolicCholesky};
use fgopt::synthetic::{five_pose_ground_truth, five_pose_problem, manhattan_2d, torus_3d, SyntheticConfig};
use fgopt::{
    key, optimize, BetweenFactor, Factor, FactorGraph, LossFunction, Manifold, OptimizationStatus,
    OptimizerParams, Pose2, Pose3, PriorFactor, Rot2, Rot3, Variables, VectorValue,
};
use nalgebra::{DMatrix, DVector, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn random_axis(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_pose2(rng: &mut ChaCha8Rng, max_angle: f64) -> Pose2 {
    Pose2::new(uniform(rng, -5.0, 5.0), uniform(rng, -5.0, 5.0), uniform(rng, -max_angle, max_angle))
}

fn random_pose3(rng: &mut ChaCha8Rng, max_angle: f64) -> Pose3 {
    let angle = uniform(rng, -max_angle, max_angle);
    let rot = Rot3::exp(&(random_axis(rng) * angle));
    let t = Vector3::new(uniform(rng, -5.0, 5.0), uniform(rng, -5.0, 5.0), uniform(rng, -5.0, 5.0));
    Pose3::new(rot, t)
}

fn pose2_distance(a: &Pose2, b: &Pose2) -> f64 {
    a.local(b).amax()
}

// 1
fn five_pose_convergence() -> Check {
    let (graph, init) = five_pose_problem(FRAC_PI_2);
    let start = Instant::now();
    let result = optimize(&graph, &init, &OptimizerParams::default());
    let elapsed = start.elapsed().as_secs_f64();

    ensure(result.status == OptimizationStatus::Success, format!("status {}", result.status))?;
    ensure(result.final_cost < 1e-10, format!("final cost {:e}", result.final_cost))?;

    // Oracle: chain the odometry measurements from the prior and check that
    // the loop closure composes back onto x2.
    let mut chained = vec![Pose2::identity()];
    for f in graph.iter().skip(1).take(4) {
        let m = f.downcast_ref::<BetweenFactor<Pose2>>().ok_or("unexpected factor type")?.measured();
        chained.push(chained.last().unwrap().compose(m));
    }
    let closure = graph.get(5).unwrap().downcast_ref::<BetweenFactor<Pose2>>().unwrap().measured();
    let loop_gap = pose2_distance(&chained[4].compose(closure), &chained[1]);
    ensure(loop_gap < 1e-12, format!("measurements inconsistent: gap {loop_gap:e}"))?;

    let x2 = result.values.at::<Pose2>(key('x', 2)).map_err(|e| e.to_string())?;
    let dx2 = pose2_distance(x2, &chained[1]);
    ensure(dx2 < 1e-5, format!("x2 off by {dx2:e}"))?;
    for (i, expected) in chained.iter().enumerate() {
        let got = result.values.at::<Pose2>(key('x', i as u64 + 1)).unwrap();
        ensure(pose2_distance(got, expected) < 1e-5, format!("x{} off", i + 1))?;
    }
    ensure(elapsed < 1.0, format!("took {elapsed:.3} s"))?;

    // With π rounded to 3.14 the loop cannot close; x2 is still pinned by the prior branch.
    let (graph, init) = five_pose_problem(fgopt::synthetic::LITERAL_QUARTER_TURN);
    let literal = optimize(&graph, &init, &OptimizerParams::default());
    let lx2 = literal.values.at::<Pose2>(key('x', 2)).unwrap();
    ensure(pose2_distance(lx2, &Pose2::new(5.0, 0.0, 0.0)) < 1e-5, "π ≈ 3.14 variant: x2 off")?;
    let truth = five_pose_ground_truth();
    ensure(truth.len() == 5, "ground truth size")?;

    Ok(format!(
        "cost {:.2e}, x2 error {dx2:.1e}, {} iterations, {:.1} ms (with π ≈ 3.14: cost {:.2e})",
        result.final_cost,
        result.iterations(),
        elapsed * 1e3,
        literal.final_cost
    ))
}

/// Occupied (row block, column block) pairs of a sparse matrix.
fn occupied_blocks(m: &SparseMatrix, rows: &[Range<usize>], cols: &[Range<usize>]) -> Vec<(usize, usize)> {
    let block_of = |ranges: &[Range<usize>], i: usize| ranges.iter().position(|r| r.contains(&i)).unwrap();
    let mut out = Vec::new();
    for c in 0..m.ncols() {
        let (idx, vals) = m.col(c);
        for (&r, &v) in idx.iter().zip(vals) {
            if v != 0.0 {
                out.push((block_of(rows, r), block_of(cols, c)));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

// 2
fn sparsity_pattern() -> Check {
    let (graph, init) = five_pose_problem(FRAC_PI_2);
    let ordering = default_ordering(&graph, &init).map_err(|e| e.to_string())?;
    let sys = linearize(&graph, &init, &ordering).map_err(|e| e.to_string())?;
    let cols = ordering.block_ranges();

    // prior, four odometry rows, loop closure x5-x2 (0-based blocks)
    let expected_j = vec![(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (3, 2), (3, 3), (4, 3), (4, 4), (5, 1), (5, 4)];
    let mut declared: Vec<_> = sys.pattern.blocks.iter().copied().collect();
    declared.sort_unstable();
    ensure(declared == expected_j, format!("declared J pattern {declared:?}"))?;
    let actual_j = occupied_blocks(&sys.jacobian, &sys.pattern.row_ranges, &cols);
    ensure(actual_j == expected_j, format!("numeric J pattern {actual_j:?}"))?;

    let h = sys.jacobian.transpose().mul(&sys.jacobian);
    let actual_h = occupied_blocks(&h, &cols, &cols);
    let mut expected_h: Vec<(usize, usize)> = (0..5).map(|i| (i, i)).collect();
    for (a, b) in [(1, 2), (2, 3), (3, 4), (4, 5), (2, 5)] {
        expected_h.push((a - 1, b - 1));
        expected_h.push((b - 1, a - 1));
    }
    expected_h.sort_unstable();
    ensure(actual_h == expected_h, format!("H pattern {actual_h:?}"))?;
    let off: Vec<_> = sys.pattern.normal_blocks().into_iter().map(|(a, b)| (a + 1, b + 1)).collect();
    ensure(off == vec![(1, 2), (2, 3), (2, 5), (3, 4), (4, 5)], format!("normal blocks {off:?}"))?;
    Ok(format!("J {} blocks, H off-diagonal {:?}", actual_j.len(), off))
}

fn random_block_spd(rng: &mut ChaCha8Rng) -> (SparseMatrix, Vec<Range<usize>>) {
    let nblocks = rng.random_range(1..=12);
    let mut blocks = Vec::new();
    let mut n = 0;
    for _ in 0..nblocks {
        let size = rng.random_range(1..=4);
        blocks.push(n..n + size);
        n += size;
    }
    // Block sparse A with a diagonal band plus random couplings; H = AᵀA + εI.
    let mut a = DMatrix::zeros(n, n);
    for (i, bi) in blocks.iter().enumerate() {
        for (j, bj) in blocks.iter().enumerate() {
            if i == j || rng.random_bool(0.2) {
                for r in bi.clone() {
                    for c in bj.clone() {
                        a[(r, c)] = uniform(rng, -1.0, 1.0);
                    }
                }
            }
        }
    }
    let h = a.transpose() * &a + DMatrix::identity(n, n) * 0.1;
    (SparseMatrix::from_dense(&h), blocks)
}

// 3
fn solver_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_chol: f64 = 0.0;
    let mut worst_pcg: f64 = 0.0;
    let mut worst_recon: f64 = 0.0;
    let mut max_n = 0;
    for trial in 0..100 {
        let (h, blocks) = random_block_spd(&mut rng);
        let n = h.ncols();
        max_n = max_n.max(n);
        let g = DVector::from_fn(n, |_, _| uniform(&mut rng, -1.0, 1.0));
        let dense = h.to_dense();
        let oracle = dense.clone().lu().solve(&g).ok_or("dense solve failed")?;
        let on = oracle.norm();

        let perm = amd_ordering(&h, &blocks);
        let symbolic = SymbolicCholesky::analyze(&h, perm.clone()).map_err(|e| e.to_string())?;
        let factor = symbolic.factor(&h).map_err(|e| format!("trial {trial}: {e}"))?;
        let x = factor.solve(&g);
        worst_chol = worst_chol.max((&x - &oracle).norm() / on);

        let l = factor.l().to_dense();
        let permuted = DMatrix::from_fn(n, n, |i, j| dense[(perm.old(i), perm.old(j))]);
        worst_recon = worst_recon.max((&l * l.transpose() - &permuted).norm() / dense.norm());

        let sol = pcg_solve(&h, &g, 1e-14, 10 * n + 100, &blocks).map_err(|e| format!("trial {trial}: {e}"))?;
        worst_pcg = worst_pcg.max((&sol.x - &oracle).norm() / on);
    }
    ensure(max_n <= 50, format!("n = {max_n} exceeds 50"))?;
    ensure(worst_chol < 1e-8, format!("cholesky rel error {worst_chol:e}"))?;
    ensure(worst_pcg < 1e-8, format!("pcg rel error {worst_pcg:e}"))?;
    ensure(worst_recon < 1e-10, format!("reconstruction {worst_recon:e}"))?;
    Ok(format!(
        "worst rel error cholesky {worst_chol:.1e}, pcg {worst_pcg:.1e}; reconstruction {worst_recon:.1e}"
    ))
}

fn jacobian_gap(factor: &dyn Factor, values: &Variables) -> Result<f64, String> {
    let analytic = factor.jacobians(values).map_err(|e| e.to_string())?;
    let numeric = numerical_jacobians(factor, values).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (a, n) in analytic.iter().zip(&numeric) {
        worst = worst.max((a - n).amax());
    }
    Ok(worst)
}

fn pose2_noise(rng: &mut ChaCha8Rng) -> Pose2 {
    random_pose2(rng, FRAC_PI_2)
}

// 4
fn jacobians() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = key('x', 1);
    let b = key('x', 2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x1 = random_pose2(&mut rng, FRAC_PI_2);
        let x2 = random_pose2(&mut rng, FRAC_PI_2);
        let mut v = Variables::new();
        v.add(a, x1);
        v.add(b, x2);
        // Measurements are the true relative pose up to a perturbation with
        // angle in (-π/2, π/2), keeping the error off the ±π branch cut.
        let prior = x1.compose(&pose2_noise(&mut rng));
        let between = x1.inverse().compose(&x2).compose(&pose2_noise(&mut rng));
        worst = worst.max(jacobian_gap(&PriorFactor::new(a, prior, None), &v)?);
        worst = worst.max(jacobian_gap(&BetweenFactor::new(a, b, between, None), &v)?);

        let y1 = random_pose3(&mut rng, FRAC_PI_2);
        let y2 = random_pose3(&mut rng, FRAC_PI_2);
        let mut v = Variables::new();
        v.add(a, y1);
        v.add(b, y2);
        let prior = y1.compose(&random_pose3(&mut rng, FRAC_PI_2));
        let between = y1.inverse().compose(&y2).compose(&random_pose3(&mut rng, FRAC_PI_2));
        worst = worst.max(jacobian_gap(&PriorFactor::new(a, prior, None), &v)?);
        worst = worst.max(jacobian_gap(&BetweenFactor::new(a, b, between, None), &v)?);
    }
    ensure(worst < 1e-6, format!("max abs difference {worst:e}"))?;
    Ok(format!("400 factors, max abs difference {worst:.1e}"))
}

fn tangent(rng: &mut ChaCha8Rng, n: usize, max_angle: f64) -> Vec<f64> {
    (0..n).map(|_| uniform(rng, -max_angle, max_angle)).collect()
}

fn se3_tangent(rng: &mut ChaCha8Rng) -> Vector6<f64> {
    let phi = random_axis(rng) * uniform(rng, -3.0, 3.0);
    Vector6::new(uniform(rng, -5.0, 5.0), uniform(rng, -5.0, 5.0), uniform(rng, -5.0, 5.0), phi.x, phi.y, phi.z)
}

// 5
fn lie_groups() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut exp_log: f64 = 0.0;
    let mut assoc: f64 = 0.0;
    let mut chart: f64 = 0.0;
    for _ in 0..1000 {
        let t = uniform(&mut rng, -3.0, 3.0);
        exp_log = exp_log.max((Rot2::exp(t).log() - t).abs());
        let xi = Vector3::new(uniform(&mut rng, -5.0, 5.0), uniform(&mut rng, -5.0, 5.0), t);
        exp_log = exp_log.max((Pose2::exp(&xi).log() - xi).amax());
        let phi = random_axis(&mut rng) * uniform(&mut rng, -3.0, 3.0);
        exp_log = exp_log.max((Rot3::exp(&phi).log() - phi).amax());
        let xi6 = se3_tangent(&mut rng);
        exp_log = exp_log.max((Pose3::exp(&xi6).log() - xi6).amax());

        let (p, q, r) = (random_pose2(&mut rng, PI), random_pose2(&mut rng, PI), random_pose2(&mut rng, PI));
        let lhs = p.compose(&q).compose(&r).matrix();
        let rhs = p.compose(&q.compose(&r)).matrix();
        assoc = assoc.max((lhs - rhs).amax());
        let (p, q, r) = (random_pose3(&mut rng, PI), random_pose3(&mut rng, PI), random_pose3(&mut rng, PI));
        let lhs = p.compose(&q).compose(&r).matrix();
        let rhs = p.compose(&q.compose(&r)).matrix();
        assoc = assoc.max((lhs - rhs).amax());

        let d = tangent(&mut rng, 3, 3.0);
        chart = chart.max((p2_local_after_retract(&random_pose2(&mut rng, PI), &d)).amax());
        let mut d6 = tangent(&mut rng, 6, 5.0);
        let axis = random_axis(&mut rng) * uniform(&mut rng, -3.0, 3.0);
        d6[3..].copy_from_slice(axis.as_slice());
        let base = random_pose3(&mut rng, PI);
        chart = chart.max((base.local(&base.retract(&d6)) - DVector::from_column_slice(&d6)).amax());
        let rot = Rot3::exp(&(random_axis(&mut rng) * 0.5));
        let d3 = (random_axis(&mut rng) * uniform(&mut rng, -3.0, 3.0)).as_slice().to_vec();
        chart = chart.max((rot.local(&rot.retract(&d3)) - DVector::from_column_slice(&d3)).amax());
        let v = VectorValue::new(&tangent(&mut rng, 4, 10.0));
        let dv = tangent(&mut rng, 4, 10.0);
        chart = chart.max((v.local(&v.retract(&dv)) - DVector::from_column_slice(&dv)).amax());
    }

    let mut q = Rot3::identity();
    for _ in 0..10_000 {
        q = q.compose(&Rot3::exp(&(random_axis(&mut rng) * uniform(&mut rng, 0.0, PI))));
    }
    let drift = (q.quaternion().as_ref().norm() - 1.0).abs();

    ensure(exp_log < 1e-9, format!("exp/log {exp_log:e}"))?;
    ensure(assoc < 1e-12, format!("associativity {assoc:e}"))?;
    ensure(chart < 1e-9, format!("retract/local {chart:e}"))?;
    ensure(drift < 1e-9, format!("quaternion drift {drift:e}"))?;
    Ok(format!(
        "exp/log {exp_log:.1e}, associativity {assoc:.1e}, retract/local {chart:.1e}, quaternion drift {drift:.1e}"
    ))
}

fn p2_local_after_retract(base: &Pose2, d: &[f64]) -> DVector<f64> {
    base.local(&base.retract(d)) - DVector::from_column_slice(d)
}

// 6
fn whitening() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=6);
        let a = DMatrix::from_fn(n, n, |_, _| uniform(&mut rng, -1.0, 1.0));
        let sigma = &a * a.transpose() + DMatrix::identity(n, n) * 0.05;
        let loss = LossFunction::from_covariance(&sigma).map_err(|e| e.to_string())?;
        let v = DVector::from_fn(n, |_, _| uniform(&mut rng, -3.0, 3.0));
        let rv = loss.whiten(&v).map_err(|e| e.to_string())?;
        let inv = sigma.clone().lu().try_inverse().ok_or("singular covariance")?;
        let oracle = (v.transpose() * inv * &v)[(0, 0)];
        worst = worst.max((rv.norm_squared() - oracle).abs() / v.norm_squared());
    }
    ensure(worst < 1e-9, format!("relative gap {worst:e}"))?;
    Ok(format!("1000 covariances, max gap {worst:.1e}·‖v‖²"))
}

fn protocol(mut bundle: DatasetBundle, limit: f64) -> Check {
    add_auto_prior(&mut bundle).map_err(|e| e.to_string())?;
    let summary = bundle.summary();
    let start = Instant::now();
    let result = optimize(&bundle.graph, &bundle.initials, &OptimizerParams::fixed(5));
    let elapsed = start.elapsed().as_secs_f64();
    ensure(result.status == OptimizationStatus::MaxIterations, format!("status {}", result.status))?;
    ensure(result.iterations() == 5, format!("{} iterations", result.iterations()))?;
    let mut costs = vec![result.initial_cost];
    costs.extend(result.records.iter().filter(|r| r.accepted).map(|r| r.cost_after));
    ensure(costs.windows(2).all(|w| w[1] < w[0]), format!("costs not decreasing: {costs:?}"))?;
    ensure(elapsed < limit, format!("took {elapsed:.1} s"))?;
    Ok(format!(
        "{summary}: cost {:.4e} -> {:.4e} in {elapsed:.2} s",
        result.initial_cost, result.final_cost
    ))
}

// 7
fn protocol_2d() -> Check {
    let bundle = manhattan_2d(&SyntheticConfig::manhattan()).map_err(|e| e.to_string())?;
    ensure(bundle.vertex_count == 3500 && bundle.edge_count == 5453, "wrong dataset size")?;
    protocol(bundle, 60.0)
}

fn protocol_3d() -> Check {
    let bundle = torus_3d(&SyntheticConfig::torus()).map_err(|e| e.to_string())?;
    ensure(bundle.vertex_count == 5000 && bundle.edge_count == 9048, "wrong dataset size")?;
    protocol(bundle, 300.0)
}

// 8
fn gauge_failure() -> Check {
    let opts = LoadOptions { auto_prior: false, ..LoadOptions::default() };
    let mut bundle = load_file(data("five_pose.g2o"), &opts).map_err(|e| e.to_string())?;
    let prior = (0..bundle.graph.len())
        .find(|&i| bundle.graph.get(i).unwrap().keys().len() == 1)
        .ok_or("fixture has no prior")?;
    bundle.graph.remove(prior);
    ensure(bundle.graph.iter().all(|f| f.keys().len() == 2), "prior still present")?;
    let result = optimize(&bundle.graph, &bundle.initials, &OptimizerParams::gauss_newton());
    ensure(
        result.status == OptimizationStatus::RankDeficiency,
        format!("status {} ({:?})", result.status, result.message),
    )?;
    Ok(format!("{}: {}", result.status, result.message.unwrap_or_default()))
}

/// Linear factor `A x_k + B x_l - c` on vector variables.
#[derive(Debug)]
struct LinearFactor {
    keys: Vec<fgopt::Key>,
    blocks: Vec<DMatrix<f64>>,
    c: DVector<f64>,
    loss: LossFunction,
}

impl Factor for LinearFactor {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn keys(&self) -> &[fgopt::Key] {
        &self.keys
    }

    fn loss(&self) -> Option<&LossFunction> {
        Some(&self.loss)
    }

    fn error(&self, values: &Variables) -> fgopt::Result<DVector<f64>> {
        let mut e = -self.c.clone();
        for (k, a) in self.keys.iter().zip(&self.blocks) {
            e += a * values.at::<VectorValue>(*k)?.data();
        }
        Ok(e)
    }

    fn jacobians(&self, _values: &Variables) -> fgopt::Result<Vec<DMatrix<f64>>> {
        Ok(self.blocks.clone())
    }
}

/// Right-hand side, (variable, block) pairs and square-root information of one factor.
type LinearRow = (DVector<f64>, Vec<(usize, DMatrix<f64>)>, DMatrix<f64>);

// 9
fn linear_exactness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    let trials = 20;
    for _ in 0..trials {
        let nvars = rng.random_range(2..=6);
        let dims: Vec<usize> = (0..nvars).map(|_| rng.random_range(1..=3)).collect();
        let offsets: Vec<usize> = dims.iter().scan(0, |s, d| { let o = *s; *s += d; Some(o) }).collect();
        let n: usize = dims.iter().sum();
        let mut graph = FactorGraph::new();
        let mut init = Variables::new();
        for (i, &d) in dims.iter().enumerate() {
            init.add(key('v', i as u64), VectorValue::new(&tangent(&mut rng, d, 10.0)));
        }
        let mut rows: Vec<LinearRow> = Vec::new();
        let mut add = |graph: &mut FactorGraph, rng: &mut ChaCha8Rng, vars: Vec<usize>| {
            let m = rng.random_range(1..=3);
            let blocks: Vec<DMatrix<f64>> =
                vars.iter().map(|&v| DMatrix::from_fn(m, dims[v], |_, _| uniform(rng, -2.0, 2.0))).collect();
            let c = DVector::from_fn(m, |_, _| uniform(rng, -5.0, 5.0));
            let sig: Vec<f64> = (0..m).map(|_| uniform(rng, 0.2, 2.0)).collect();
            let loss = LossFunction::diagonal_sigmas(&sig).unwrap();
            let r = loss.sqrt_information();
            rows.push((c.clone(), vars.iter().copied().zip(blocks.clone()).collect(), r));
            graph.add(LinearFactor {
                keys: vars.iter().map(|&v| key('v', v as u64)).collect(),
                blocks,
                c,
                loss,
            });
        };
        for (v, &d) in dims.iter().enumerate() {
            // Enough unary rows to make the system full rank.
            for _ in 0..d {
                add(&mut graph, &mut rng, vec![v]);
            }
        }
        for _ in 0..nvars {
            let a = rng.random_range(0..nvars);
            let b = (a + rng.random_range(1..nvars)) % nvars;
            add(&mut graph, &mut rng, vec![a, b]);
        }

        // Dense weighted least squares oracle in the same variable layout.
        let m: usize = rows.iter().map(|r| r.0.len()).sum();
        let mut a = DMatrix::zeros(m, n);
        let mut y = DVector::zeros(m);
        let mut row = 0;
        for (c, blocks, r) in &rows {
            let k = c.len();
            for (v, blk) in blocks {
                let w = r * blk;
                a.view_mut((row, offsets[*v]), (k, dims[*v])).copy_from(&w);
            }
            y.rows_mut(row, k).copy_from(&(r * c));
            row += k;
        }
        let oracle = (a.transpose() * &a).cholesky().ok_or("oracle singular")?.solve(&(a.transpose() * &y));

        let result = optimize(&graph, &init, &OptimizerParams::gauss_newton());
        let accepted = result.records.iter().filter(|r| r.accepted && r.step_norm > 0.0).count();
        ensure(accepted == 1, format!("{accepted} non-trivial iterations, status {}", result.status))?;
        for (i, &d) in dims.iter().enumerate() {
            let got = result.values.at::<VectorValue>(key('v', i as u64)).unwrap().data().clone();
            let want = oracle.rows(offsets[i], d);
            worst = worst.max((got - want).amax() / oracle.amax().max(1.0));
        }
    }
    ensure(worst < 1e-8, format!("max error {worst:e}"))?;
    Ok(format!("{trials} random linear graphs, one step each, max error {worst:.1e}"))
}

fn numbers(text: &str) -> Vec<Option<f64>> {
    text.split_whitespace().map(|t| t.parse::<f64>().ok()).collect()
}

fn round_trip(path: &Path) -> Result<(), String> {
    let opts = LoadOptions::default();
    let first = load_file(path, &opts).map_err(|e| e.to_string())?;
    let mut saved = Vec::new();
    first.save(&mut saved).map_err(|e| e.to_string())?;
    let second = load_pose_graph(Cursor::new(&saved), &opts).map_err(|e| e.to_string())?;
    let mut resaved = Vec::new();
    second.save(&mut resaved).map_err(|e| e.to_string())?;

    ensure(first.summary() == second.summary(), format!("{} vs {}", first.summary(), second.summary()))?;
    let ordering = default_ordering(&first.graph, &first.initials).map_err(|e| e.to_string())?;
    let gap = first.initials.local(&ordering, &second.initials).map_err(|e| e.to_string())?;
    ensure(gap.amax() < 1e-9, format!("values moved by {:e}", gap.amax()))?;
    let (c1, c2) = (
        first.graph.total_cost(&first.initials).map_err(|e| e.to_string())?,
        second.graph.total_cost(&second.initials).map_err(|e| e.to_string())?,
    );
    ensure((c1 - c2).abs() <= 1e-9 * c1.max(1.0), format!("cost {c1} vs {c2}"))?;
    let (a, b) = (numbers(&String::from_utf8_lossy(&saved)), numbers(&String::from_utf8_lossy(&resaved)));
    ensure(a.len() == b.len(), "token count changed")?;
    for (x, y) in a.iter().zip(&b) {
        match (x, y) {
            (Some(x), Some(y)) => ensure((x - y).abs() <= 1e-9 * x.abs().max(1.0), format!("{x} vs {y}"))?,
            (None, None) => {}
            _ => return Err("record layout changed".into()),
        }
    }
    Ok(())
}

fn run_cli(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_fgopt")).args(args).output().map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned()))
}

// 10
fn io_round_trip() -> Check {
    let fixtures = ["five_pose.g2o", "square_2d.g2o", "square_3d.g2o"];
    for f in fixtures {
        round_trip(&data(f)).map_err(|e| format!("{f}: {e}"))?;
    }

    // The synthetic benchmark graphs go through the same path.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let small = SyntheticConfig { poses: 200, loop_closures: 60, ..SyntheticConfig::manhattan() };
    for (name, bundle) in [
        ("grid.g2o", manhattan_2d(&small)),
        ("torus.g2o", torus_3d(&SyntheticConfig { poses: 200, loop_closures: 60, ..SyntheticConfig::torus() })),
    ] {
        let bundle = bundle.map_err(|e| e.to_string())?;
        let path = dir.path().join(name);
        let file = std::fs::File::create(&path).map_err(|e| e.to_string())?;
        bundle.save(std::io::BufWriter::new(file)).map_err(|e| e.to_string())?;
        round_trip(&path).map_err(|e| format!("{name}: {e}"))?;
    }

    let mut outputs = Vec::new();
    for run in 0..3 {
        let out = dir.path().join(format!("out{run}.g2o"));
        let stats = dir.path().join(format!("stats{run}.json"));
        let input = data("square_3d.g2o");
        let (code, stdout) = run_cli(&[
            "optimize",
            "--input",
            input.to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
            "--stats",
            stats.to_str().unwrap(),
        ])?;
        ensure(code == 0, format!("exit code {code}"))?;
        let file = std::fs::read(&out).map_err(|e| e.to_string())?;
        let json: serde_json::Value =
            serde_json::from_slice(&std::fs::read(&stats).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        // Everything except wall-clock fields must match bit for bit.
        outputs.push((stdout, file, json["records"].clone(), json["final_cost"].clone()));
    }
    ensure(outputs.windows(2).all(|w| w[0] == w[1]), "CLI runs differ")?;
    Ok(format!("{} fixtures + 2 generated graphs round trip; 3 identical CLI runs", fixtures.len()))
}

fn main() {
    let checks: Vec<Criterion> = vec![
        ("1 five-pose convergence", five_pose_convergence),
        ("2 sparsity pattern", sparsity_pattern),
        ("3 solver oracle", solver_oracle),
        ("4 jacobians", jacobians),
        ("5 lie groups", lie_groups),
        ("6 whitening", whitening),
        ("7 protocol 2D", protocol_2d),
        ("7 protocol 3D", protocol_3d),
        ("8 gauge failure", gauge_failure),
        ("9 linear exactness", linear_exactness),
        ("10 io round trip", io_round_trip),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
