//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use lossescape::blocks::{
    embed_narrow, embed_sum_hidden, is_block, to_block, to_block_linear, BlockSide,
};
use lossescape::caratheodory::reduce_combination;
use lossescape::globalmin::{brute_force_min, feature_rank, outer_layer_solve};
use lossescape::netcore::{forward_batch, layer_input, permute_hidden};
use lossescape::objective::{constraint_value, empirical_risk};
use lossescape::paths::{
    build_escape_path, constraint_profile, convex_outer_segment, is_path_constant, is_path_convex,
    restrict_nonincreasing, restrict_profile, CompositePath, EscapeOptions, PathSegment,
    SegmentKind,
};
use lossescape::verify::{verify_block_identity, verify_path, Tolerances};
use lossescape::{
    ActivationKind, Architecture, ConstraintSpec, Dataset, Error, LossKind, NetworkParams,
    Permutation,
};
use nalgebra::{DMatrix, DVector};
use ndarray::{array, Array1};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("reparametrization exactness", c1_reparametrization),
        ("caratheodory contract", c2_caratheodory),
        ("path-constant segments", c3_constant_segments),
        ("convexity and mixed identity", c4_mixed_identity),
        ("escape path, general width", c5_escape),
        ("escape path, linear width", c6_linear),
        ("outer-layer oracle", c7_outer_solve),
        ("permutation symmetry", c8_symmetry),
        ("relation algebra", c9_relations),
        ("convex restriction", c10_restriction),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:2} [{}] {name}: {} ({:.2} s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn rel_dev(a: &ndarray::Array2<f64>, b: &ndarray::Array2<f64>) -> f64 {
    max_abs(&(a - b)) / max_abs(a).max(1.0)
}

fn c1_reparametrization() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_dev, mut worst_inc, mut non_block) = (0.0f64, 0.0f64, 0);
    for _ in 0..200 {
        let l = rng.random_range(1..=3);
        let m = rng.random_range(1..=2);
        let n: usize = rng.random_range(1..=4);
        let d = rng.random_range(1..=3);
        let mut dims = vec![d];
        for j in 1..=l {
            dims.push(m * (n + 1).pow((l - j + 1) as u32) + rng.random_range(0..=3));
        }
        dims.push(m);
        let arch = Architecture::uniform(dims, activation(&mut rng)).unwrap();
        let data = dataset(&mut rng, d, m, n);
        let spec = spec(&mut rng);
        let start = feasible(NetworkParams::random(&arch, &mut rng, 1.0), &spec);
        let side = *[BlockSide::Upper, BlockSide::Lower]
            .choose(&mut rng)
            .unwrap();
        let res = to_block(&arch, &start, &data, &spec, side).unwrap();
        if !is_block(&res.params, m * (n + 1).pow(l as u32), side) {
            non_block += 1;
        }
        let before = forward_batch(&arch, &start, data.x().view()).unwrap();
        let after = forward_batch(&arch, &res.params, data.x().view()).unwrap();
        worst_dev = worst_dev.max(rel_dev(&before, &after));
        worst_inc =
            worst_inc.max(constraint_value(&res.params, &spec) - constraint_value(&start, &spec));
    }
    let secs = t.elapsed();
    outcome(
        non_block == 0 && worst_dev <= 1e-8 && worst_inc <= 1e-9 && secs < Duration::from_secs(30),
        format!("200 instances, {non_block} non-blocks, max rel deviation {worst_dev:.2e}, max constraint increase {worst_inc:.2e}"),
    )
}

/// Smallest l1 norm over exact representations of `v` on at most `r+1`
/// generators, each solved independently by nalgebra.
fn subset_oracle(z: &ndarray::Array2<f64>, v: &Array1<f64>) -> Option<f64> {
    let (r, h) = z.dim();
    let scale = 1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut best: Option<f64> = None;
    for mask in 1u32..(1 << h) {
        let idx: Vec<usize> = (0..h).filter(|k| mask & (1 << k) != 0).collect();
        if idx.len() > r + 1 {
            continue;
        }
        let a = DMatrix::from_fn(r, idx.len(), |i, k| z[[i, idx[k]]]);
        let b = DVector::from_iterator(r, v.iter().copied());
        let Ok(w) = a.clone().svd(true, true).solve(&b, 1e-12) else {
            continue;
        };
        if (&a * &w - &b).amax() <= 1e-9 * scale {
            let l1 = w.iter().map(|x| x.abs()).sum::<f64>();
            best = Some(best.map_or(l1, |c: f64| c.min(l1)));
        }
    }
    best
}

fn c2_caratheodory() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut bad_support, mut worst_err, mut worst_inc, mut disagree, mut oracle_runs) =
        (0, 0.0f64, 0.0f64, 0, 0);
    for _ in 0..1000 {
        let r = rng.random_range(1..=4);
        let h = rng.random_range(1..=12);
        let z = gauss(&mut rng, r, h);
        let raw: Array1<f64> = gauss(&mut rng, 1, h).row(0).to_owned();
        let w = &raw / (raw.mapv(f64::abs).sum() * rng.random_range(1.0..2.0));
        let out = reduce_combination(&z, &w, 1.0, 1e-10).unwrap();
        let v = z.dot(&w);
        let support = out.iter().filter(|x| **x != 0.0).count();
        if support > r + 1 {
            bad_support += 1;
        }
        let err = (&v - &z.dot(&out))
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        worst_err = worst_err.max(err / (1.0 + vmax));
        let (l1_in, l1_out) = (w.mapv(f64::abs).sum(), out.mapv(f64::abs).sum());
        worst_inc = worst_inc.max(l1_out - l1_in);
        if h <= 6 && r <= 2 {
            oracle_runs += 1;
            match subset_oracle(&z, &v) {
                Some(best) if best <= l1_in + 1e-10 && best <= l1_out + 1e-9 => {}
                _ => disagree += 1,
            }
        }
    }
    outcome(
        bad_support == 0 && worst_err <= 1e-9 && worst_inc <= 1e-10 && disagree == 0 && t.elapsed() < Duration::from_secs(20),
        format!(
            "1000 reductions, {bad_support} over r+1, max scaled error {worst_err:.2e}, max l1 increase {worst_inc:.2e}, oracle disagreements {disagree}/{oracle_runs}"
        ),
    )
}

/// Random block-reparametrization instances with their datasets.
fn step_instances(
    seed: u64,
    count: usize,
) -> Vec<(Architecture, Dataset, lossescape::blocks::BlockResult)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let linear = k % 4 == 3;
            let (m, n) = (rng.random_range(1..=2), rng.random_range(1..=3));
            let d = rng.random_range(1..=3);
            let l = if linear {
                rng.random_range(2..=3)
            } else {
                rng.random_range(1..=2)
            };
            let mut dims = vec![d];
            for j in 1..=l {
                let need = if linear {
                    if j == 1 {
                        m * (n + 1)
                    } else {
                        m * (n + 2)
                    }
                } else {
                    m * (n + 1usize).pow((l - j + 1) as u32)
                };
                dims.push(need + rng.random_range(1..=3));
            }
            dims.push(m);
            let act = if linear {
                ActivationKind::Identity
            } else {
                activation(&mut rng)
            };
            let arch = Architecture::uniform(dims, act).unwrap();
            let data = dataset(&mut rng, d, m, n);
            let spec = spec(&mut rng);
            let start = feasible(NetworkParams::random(&arch, &mut rng, 1.0), &spec);
            let side = if k % 2 == 0 {
                BlockSide::Upper
            } else {
                BlockSide::Lower
            };
            let res = if linear {
                to_block_linear(&arch, &start, &data, &spec, side)
            } else {
                to_block(&arch, &start, &data, &spec, side)
            }
            .unwrap();
            (arch, data, res)
        })
        .collect()
}

fn c3_constant_segments() -> Outcome {
    let (mut steps, mut failing) = (0, 0);
    let mut control_caught = true;
    for (arch, data, res) in step_instances(303, 24) {
        for step in &res.steps {
            steps += 1;
            let seg = PathSegment::from_step(step);
            if !is_path_constant(&seg, &arch, &data, LossKind::Squared, 1001, 1e-8).unwrap() {
                failing += 1;
            }
        }
        if let Some(step) = res.steps.first() {
            let mut bent = step.after.clone();
            let outer = bent.depth();
            bent.matrix_mut(outer).mapv_inplace(|v| v + 0.5);
            let control = PathSegment::constant(step.before.clone(), bent, "perturbed").unwrap();
            if is_path_constant(&control, &arch, &data, LossKind::Squared, 1001, 1e-8).unwrap() {
                control_caught = false;
            }
        }
    }
    outcome(
        failing == 0 && control_caught && steps > 0,
        format!(
            "{steps} steps, {failing} non-constant, perturbed controls rejected: {control_caught}"
        ),
    )
}

fn c4_mixed_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut worst_id, mut worst_mid, mut worst_excess) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    let (mut id_fail, mut convex_fail) = (0, 0);
    for k in 0..200 {
        let act = ACTIVATIONS[k % 4];
        let l = rng.random_range(1..=3);
        let s = rng.random_range(1..=4);
        let m = rng.random_range(1..=2);
        let d = rng.random_range(1..=3);
        let mut dims = vec![d];
        dims.extend((0..l).map(|_| 2 * s + rng.random_range(0..=2)));
        dims.push(m);
        let arch = Architecture::uniform(dims, act).unwrap();
        let spec = spec(&mut rng);
        let up = feasible(random_block(&arch, s, BlockSide::Upper, &mut rng), &spec);
        let lo = feasible(random_block(&arch, s, BlockSide::Lower, &mut rng), &spec);
        let (t2, g2) = embed_sum_hidden(&up, &lo, s).unwrap();
        let rep = verify_block_identity(&t2, &g2, &arch, 20, k as u64, 1e-9).unwrap();
        worst_id = worst_id.max(rep.max_deviation);
        if !rep.pass {
            id_fail += 1;
        }
        let n = rng.random_range(1..=4);
        let data = dataset(&mut rng, d, m, n);
        let loss = if m == 1 && k % 3 == 0 {
            LossKind::Absolute
        } else {
            LossKind::Squared
        };
        let seg = convex_outer_segment(&t2, &g2).unwrap();
        let profile = lossescape::paths::loss_profile(&seg, &arch, &data, loss, 1001).unwrap();
        let mid = lossescape::paths::max_midpoint_violation(&profile);
        worst_mid = worst_mid.max(mid);
        if !is_path_convex(&seg, &arch, &data, loss, 1001, 1e-9).unwrap() {
            convex_fail += 1;
        }
        let r = constraint_profile(&seg, &spec, 1001).unwrap();
        worst_excess = worst_excess.max(r.iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v)) - 1.0);
    }
    outcome(
        id_fail == 0 && convex_fail == 0 && worst_excess <= 1e-9,
        format!(
            "200 block pairs, identity max deviation {worst_id:.2e}, max midpoint violation {worst_mid:.2e}, max r - 1 = {worst_excess:.2e}"
        ),
    )
}

fn c5_escape() -> Outcome {
    let t = Instant::now();
    let tols = Tolerances::default();
    let (mut ok, mut worst_mono, mut worst_gap) = (true, 0.0f64, 0.0f64);
    for seed in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let arch = Architecture::uniform(vec![2, 8, 1], ActivationKind::Relu).unwrap();
        let data = dataset(&mut rng, 2, 1, 3);
        let spec = ConstraintSpec::unconstrained();
        let start = NetworkParams::random(&arch, &mut rng, 0.7);
        let inner = NetworkParams::random(&arch, &mut rng, 1.0).into_matrices();
        let oracle = outer_layer_solve(&arch, &inner[..1], &data, LossKind::Squared).unwrap();
        let esc = build_escape_path(
            &arch,
            &start,
            &oracle.params,
            &data,
            LossKind::Squared,
            &spec,
            EscapeOptions::default(),
        )
        .unwrap();
        let rep = verify_path(
            &esc.path,
            &arch,
            &data,
            LossKind::Squared,
            &spec,
            1001,
            tols,
            Some(seed),
        )
        .unwrap();
        worst_mono = worst_mono.max(rep.max_monotonicity_violation);
        let gap = (rep.end_loss.unwrap() - oracle.achieved_risk).abs();
        worst_gap = worst_gap.max(gap);
        ok &= rep.passed() && gap <= 1e-6;
    }
    let unconstrained_secs = t.elapsed().as_secs_f64() / 3.0;
    ok &= unconstrained_secs < 5.0;

    // constrained: grid-searched width-1 target padded to width 8
    let arch = Architecture::uniform(vec![1, 8, 1], ActivationKind::Identity).unwrap();
    let data = Dataset::new(array![[1.0, -0.5, 2.0]], array![[0.8, -0.3, 1.5]]).unwrap();
    let spec = ConstraintSpec::new(0.6, 0.6, 2.0).unwrap();
    let narrow = arch.with_hidden_width(1).unwrap();
    let oracle = brute_force_min(&narrow, &data, LossKind::Squared, &spec, 0.01, 2.0).unwrap();
    let target = embed_narrow(&oracle.params, &arch).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(555);
    let start = feasible(NetworkParams::random(&arch, &mut rng, 1.0), &spec);
    let esc = build_escape_path(
        &arch,
        &start,
        &target,
        &data,
        LossKind::Squared,
        &spec,
        EscapeOptions::default(),
    )
    .unwrap();
    let rep = verify_path(
        &esc.path,
        &arch,
        &data,
        LossKind::Squared,
        &spec,
        1001,
        tols,
        Some(5),
    )
    .unwrap();
    let end_ok = rep.end_loss.unwrap() <= oracle.achieved_risk + 1e-6;
    ok &= rep.passed() && rep.overall.feasible && end_ok;
    outcome(
        ok,
        format!(
            "unconstrained: max monotonicity violation {worst_mono:.2e}, max |end - oracle| {worst_gap:.2e}, {unconstrained_secs:.2} s per run; constrained: max constraint excess {:.2e}, end {:.6} vs grid optimum {:.6}",
            rep.max_constraint_excess,
            rep.end_loss.unwrap(),
            oracle.achieved_risk
        ),
    )
}

fn c6_linear() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let arch = Architecture::uniform(vec![2, 8, 8, 1], ActivationKind::Identity).unwrap();
    let data = dataset(&mut rng, 2, 1, 3);
    let spec = ConstraintSpec::unconstrained();
    let start = NetworkParams::random(&arch, &mut rng, 0.7);
    let target = NetworkParams::random(&arch, &mut rng, 0.7);
    let options = EscapeOptions {
        linear: true,
        ..EscapeOptions::default()
    };
    let esc = build_escape_path(
        &arch,
        &start,
        &target,
        &data,
        LossKind::Squared,
        &spec,
        options,
    )
    .unwrap();
    let rep = verify_path(
        &esc.path,
        &arch,
        &data,
        LossKind::Squared,
        &spec,
        1001,
        Tolerances::default(),
        Some(6),
    )
    .unwrap();
    let refused = matches!(
        build_escape_path(
            &arch,
            &start,
            &target,
            &data,
            LossKind::Squared,
            &spec,
            EscapeOptions::default()
        ),
        Err(Error::Capability(_))
    );

    let dir = tempfile::tempdir().unwrap();
    let cli = |extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_lossescape"))
            .args([
                "demo", "--depth", "2", "--width", "8", "--grid", "501", "--out",
            ])
            .arg(dir.path())
            .args(extra)
            .output()
            .unwrap()
            .status
            .code()
    };
    let linear_code = cli(&["--linear"]);
    let general_code = cli(&["--activation", "identity"]);
    outcome(
        rep.passed() && refused && linear_code == Some(0) && general_code == Some(2),
        format!(
            "linear path verifies: {}, max monotonicity violation {:.2e}; general construction refused: {refused}; cli exits {linear_code:?} / {general_code:?}",
            rep.passed(),
            rep.max_monotonicity_violation
        ),
    )
}

fn c7_outer_solve() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let (mut full_rank, mut nonzero, mut beaten, mut rank_mismatch) = (0, 0, 0, 0);
    let mut worst_excess = f64::NEG_INFINITY;
    for k in 0..20 {
        let (m, n) = (1, rng.random_range(1..=4));
        let d = rng.random_range(1..=3);
        let l = rng.random_range(1..=2);
        let act = [
            ActivationKind::Relu,
            ActivationKind::Sigmoid,
            ActivationKind::LeakyRelu { c: 0.1 },
        ][k % 3];
        let mut dims = vec![d];
        dims.extend(std::iter::repeat_n(2 * m * (n + 1), l));
        dims.push(m);
        let arch = Architecture::uniform(dims, act).unwrap();
        let data = dataset(&mut rng, d, m, n);
        let draw = NetworkParams::random(&arch, &mut rng, 1.0);
        let inner = &draw.matrices()[..l];
        let res = outer_layer_solve(&arch, inner, &data, LossKind::Squared).unwrap();
        let z = layer_input(&arch, &draw, data.x().view(), l).unwrap();
        let rank = elimination_rank(&z, 1e-10);
        if rank != feature_rank(&z) {
            rank_mismatch += 1;
        }
        if rank == n {
            full_rank += 1;
            if res.achieved_risk > 1e-9 {
                nonzero += 1;
            }
        }
        for _ in 0..1000 {
            let mut mats = inner.to_vec();
            mats.push(gauss(&mut rng, m, arch.dims()[l]));
            let p = NetworkParams::new(mats).unwrap();
            let risk = empirical_risk(&arch, &p, &data, LossKind::Squared).unwrap();
            let excess = res.achieved_risk - risk;
            worst_excess = worst_excess.max(excess);
            if excess > 1e-9 {
                beaten += 1;
            }
        }
    }
    outcome(
        nonzero == 0 && beaten == 0 && rank_mismatch == 0 && full_rank > 0,
        format!(
            "20 draws, {full_rank} full rank, {nonzero} full-rank draws with nonzero risk, {beaten} random outer layers doing better (max excess {worst_excess:.2e}), rank disagreements {rank_mismatch}"
        ),
    )
}

fn c8_symmetry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let l = rng.random_range(1..=3);
        let (d, m, n) = (
            rng.random_range(1..=3),
            rng.random_range(1..=2),
            rng.random_range(1..=5),
        );
        let mut dims = vec![d];
        dims.extend((0..l).map(|_| rng.random_range(1..=7)));
        dims.push(m);
        let acts = (0..l).map(|_| activation(&mut rng)).collect();
        let arch = Architecture::new(dims.clone(), acts).unwrap();
        let data = dataset(&mut rng, d, m, n);
        let p = NetworkParams::random(&arch, &mut rng, 1.0);
        let perms: Vec<Permutation> = (1..=l)
            .map(|j| Permutation::random(dims[j], &mut rng))
            .collect();
        let q = permute_hidden(&p, &perms).unwrap();
        let loss = *[LossKind::Squared, LossKind::Absolute]
            .choose(&mut rng)
            .unwrap();
        let a = empirical_risk(&arch, &p, &data, loss).unwrap();
        let b = empirical_risk(&arch, &q, &data, loss).unwrap();
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
    }
    outcome(
        worst <= 1e-10,
        format!("200 relabelings, max loss deviation {worst:.2e}"),
    )
}

fn c9_relations() -> Outcome {
    let (mut refl, mut symm, mut trans, mut order, mut tested) = (true, true, true, true, 0);
    for (arch, data, res) in step_instances(909, 12) {
        let loss = LossKind::Squared;
        let zero = PathSegment::constant(res.params.clone(), res.params.clone(), "stay").unwrap();
        refl &= is_path_constant(&zero, &arch, &data, loss, 1001, 1e-8).unwrap();
        for pair in res.steps.windows(2) {
            let (a, b) = (
                PathSegment::from_step(&pair[0]),
                PathSegment::from_step(&pair[1]),
            );
            symm &=
                is_path_constant(&a.reversed().unwrap(), &arch, &data, loss, 1001, 1e-8).unwrap();
            let joined = CompositePath::new(vec![a.clone(), b.clone()]).unwrap();
            let rep = verify_path(
                &joined,
                &arch,
                &data,
                loss,
                &ConstraintSpec::unconstrained(),
                1001,
                Tolerances::default(),
                None,
            )
            .unwrap();
            trans &= rep.overall.constant && rep.overall.continuous;
            for seg in [&a, &b] {
                tested += 1;
                if is_path_constant(seg, &arch, &data, loss, 1001, 1e-8).unwrap() {
                    order &= is_path_convex(seg, &arch, &data, loss, 1001, 1e-9).unwrap();
                }
            }
        }
    }
    outcome(
        refl && symm && trans && order && tested > 0,
        format!("reflexive {refl}, symmetric {symm}, transitive {trans}, constant implies convex on {tested} segments: {order}"),
    )
}

fn c10_restriction() -> Outcome {
    let profiles: [(fn(f64) -> f64, f64); 3] = [
        (|t| (t - 0.8) * (t - 0.8), 0.8),
        (|t| (-2.0 * t).exp(), 1.0),
        (|_| 3.0, 1.0),
    ];
    let mut ok = true;
    let mut found = Vec::new();
    for (f, expect) in profiles {
        let c = restrict_profile(|t| Ok(f(t)), 1e-12).unwrap();
        let grid: Vec<f64> = (0..1001).map(|k| f(c * k as f64 / 1000.0)).collect();
        ok &= (c - expect).abs() <= 1e-6 && grid.windows(2).all(|w| w[1] <= w[0]);
        found.push(c);
    }
    // the same shape on an actual network: output t on input 1, label 0.8
    let arch = Architecture::uniform(vec![1, 1, 1], ActivationKind::Identity).unwrap();
    let data = Dataset::new(array![[1.0]], array![[0.8]]).unwrap();
    let a = NetworkParams::new(vec![array![[1.0]], array![[0.0]]]).unwrap();
    let b = NetworkParams::new(vec![array![[1.0]], array![[1.0]]]).unwrap();
    let seg = PathSegment::new(a, b, SegmentKind::Convex, 1.0, "mix").unwrap();
    let restricted =
        restrict_nonincreasing(&seg, &arch, &data, LossKind::Squared, 1001, 1e-12).unwrap();
    let profile =
        lossescape::paths::loss_profile(&restricted, &arch, &data, LossKind::Squared, 1001)
            .unwrap();
    ok &=
        (restricted.scale - 0.8).abs() <= 1e-6 && profile.windows(2).all(|w| w[1] <= w[0] + 1e-15);
    outcome(
        ok,
        format!(
            "c = {:.8} / {:.8} / {:.8} for quadratic / decreasing / constant; network segment c = {:.8}",
            found[0], found[1], found[2], restricted.scale
        ),
    )
}
