//! Acceptance checks. Runs as a plain binary so every criterion prints its own
//! PASS/FAIL line under `cargo test`; exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use m2i_core::experiment::{conditional_ablation, evaluate_mode, relation_dataset, split_indices, accuracy, Mode};
use m2i_core::geom::{OrientedBox, Vec2};
use m2i_core::metrics::{
    footprints, joint_min_ade, joint_min_fde, joint_miss, mean_average_precision, sample_overlap, AgentTruth,
    GroundTruth, MatchThresholds,
};
use m2i_core::pipeline::{
    build_influence_graph, m2i_predict_multi, m2i_predict_pair, predict_marginal_pairs, predict_pair_with_relation,
    select_top_k, Component, JointPredictionSet, JointSample, Provenance,
};
use m2i_core::predict::{predict_marginal, PredictionSet, PredictorConfig};
use m2i_core::relation::{
    classify_pair, label_relation, train_relation_classifier, LossAndGradient, RelationClassifier,
    RelationType, TrainingOptions,
};
use m2i_core::scenario::{read_corpus, write_corpus, Scenario};
use m2i_core::scengen::{generate_chain, generate_corpus, is_edge_case, ChainShape, GeneratorConfig, TemplateKind};
use m2i_core::trajectory::{AgentFootprint, AgentState, Trajectory, FUTURE_LEN};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn default_corpus() -> Vec<Scenario> {
    generate_corpus(&GeneratorConfig::default()).unwrap().into_iter().map(|g| g.scenario).collect()
}

fn trained_classifier() -> RelationClassifier {
    let data = relation_dataset(&default_corpus()).unwrap();
    let (train, _) = split_indices(data.len(), 0.8, 0);
    let train: Vec<_> = train.iter().map(|&i| data[i].clone()).collect();
    train_relation_classifier(&train, TrainingOptions::default()).unwrap().0
}

// ---------------------------------------------------------------------------
// 1. closest-approach relation labels against a brute-force reference

fn random_pair_trajectory(rng: &mut ChaCha8Rng, lattice: bool) -> Trajectory {
    let len = rng.random_range(1..=FUTURE_LEN);
    let mut p = Vec2::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
    let v = Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    let states = (0..len)
        .map(|k| {
            let pos = if lattice {
                Vec2::new(rng.random_range(-4..=4) as f64, rng.random_range(-4..=4) as f64)
            } else {
                p = p + v * 0.1 + Vec2::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05));
                p
            };
            let speed = f64::from(rng.random_range(0..3u8));
            AgentState::new(pos, 0.0, speed, k == 0 || rng.random_bool(0.9))
        })
        .collect();
    Trajectory::new(states).unwrap()
}

/// Returns (d, t1, t2) from the full distance matrix over valid states.
fn brute_closest(a: &Trajectory, b: &Trajectory) -> (f64, usize, usize) {
    let sa = a.states();
    let sb = b.states();
    let mut matrix = vec![vec![f64::INFINITY; sb.len()]; sa.len()];
    for (i, p) in sa.iter().enumerate() {
        for (j, q) in sb.iter().enumerate() {
            if p.valid && q.valid {
                let (dx, dy) = (p.position.x - q.position.x, p.position.y - q.position.y);
                matrix[i][j] = dx * dx + dy * dy;
            }
        }
    }
    let min = matrix.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let t1 = (0..sa.len()).find(|&i| matrix[i].contains(&min)).unwrap();
    let t2 = (0..sb.len()).find(|&j| matrix.iter().any(|row| row[j] == min)).unwrap();
    (min.sqrt(), t1, t2)
}

fn brute_relation(a: &Trajectory, b: &Trajectory, fa: &AgentFootprint, fb: &AgentFootprint) -> (RelationType, f64, usize, usize) {
    let (d, t1, t2) = brute_closest(a, b);
    let eps = (fa.length.hypot(fa.width) + fb.length.hypot(fb.width)) / 2.0;
    let rel = if d > eps {
        RelationType::None
    } else if t1 < t2 {
        RelationType::Pass
    } else if t1 > t2 {
        RelationType::Yield
    } else if a.states()[t1].speed() >= b.states()[t2].speed() {
        RelationType::Pass
    } else {
        RelationType::Yield
    };
    (rel, d, t1, t2)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let mut agree = 0;
    let mut classes = BTreeMap::new();
    for n in 0..1000 {
        let lattice = n % 2 == 0;
        let a = random_pair_trajectory(&mut r, lattice);
        let b = random_pair_trajectory(&mut r, lattice);
        let fa = AgentFootprint::new(r.random_range(1.0..5.0), 1.0).unwrap();
        let fb = AgentFootprint::new(r.random_range(1.0..5.0), 1.0).unwrap();
        let (rel, g) = label_relation(&a, &b, &fa, &fb).unwrap();
        let (orel, d, t1, t2) = brute_relation(&a, &b, &fa, &fb);
        if rel == orel && g.d_i == d && g.t1 == t1 && g.t2 == t2 {
            agree += 1;
        }
        *classes.entry(orel.as_str()).or_insert(0) += 1;
    }
    let t = start.elapsed();
    outcome(
        agree == 1000 && t < Duration::from_secs(5),
        format!("{agree}/1000 exact matches, classes {classes:?}, {:.2}s", t.as_secs_f64()),
    )
}

// ---------------------------------------------------------------------------
// 2. generator intent vs heuristic label

fn criterion_2() -> Outcome {
    let corpus = generate_corpus(&GeneratorConfig::default()).unwrap();
    let (mut total, mut agree, mut edge) = (0, 0, 0);
    for g in &corpus {
        let (rel, geom) = g.heuristic_label().unwrap();
        if is_edge_case(&geom) {
            edge += 1;
            continue;
        }
        total += 1;
        agree += usize::from(rel == g.intended);
    }
    let rate = agree as f64 / total as f64;
    outcome(
        corpus.len() == 600 && rate >= 0.98,
        format!("{agree}/{total} non-edge agree ({rate:.4}), {edge} edge cases of {}", corpus.len()),
    )
}

// ---------------------------------------------------------------------------
// 3. classifier accuracy and gradient check

fn criterion_3() -> Outcome {
    let data = relation_dataset(&default_corpus()).unwrap();
    let (train_idx, held_idx) = split_indices(data.len(), 0.8, 0);
    let train: Vec<_> = train_idx.iter().map(|&i| data[i].clone()).collect();
    let held: Vec<_> = held_idx.iter().map(|&i| data[i].clone()).collect();
    let (clf, _) = train_relation_classifier(&train, TrainingOptions::default()).unwrap();
    let acc = accuracy(&clf, &held);

    let inputs: Vec<Vec<f64>> = train.iter().take(120).map(|(x, _)| clf.standardize(x)).collect();
    let labels: Vec<usize> = train.iter().take(120).map(|(_, y)| y.index()).collect();
    let dim = 3 * inputs[0].len() + 3;
    let mut r = rng(303);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let params: Vec<f64> = (0..dim).map(|_| r.random_range(-2.0..2.0)).collect();
        let analytic = LossAndGradient::evaluate(&params, &inputs, &labels).gradient;
        let numeric: Vec<f64> = (0..dim)
            .map(|k| {
                let mut p = params.clone();
                p[k] += h;
                let up = LossAndGradient::evaluate(&p, &inputs, &labels).loss;
                p[k] -= 2.0 * h;
                let down = LossAndGradient::evaluate(&p, &inputs, &labels).loss;
                (up - down) / (2.0 * h)
            })
            .collect();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        worst = worst.max(norm(&diff) / norm(&analytic).max(norm(&numeric)));
    }
    outcome(
        acc >= 0.85 && worst <= 1e-5,
        format!("held-out accuracy {acc:.4} on {} scenarios, worst gradient relative error {worst:.2e}", held.len()),
    )
}

// ---------------------------------------------------------------------------
// 4. conditional vs marginal reactor prediction

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let cfg = GeneratorConfig {
        seed: 4,
        count: 170,
        templates: vec![TemplateKind::CrossingYield, TemplateKind::MergeBehind, TemplateKind::UTurnYield],
        ..GeneratorConfig::default()
    };
    let corpus: Vec<Scenario> = generate_corpus(&cfg).unwrap().into_iter().map(|g| g.scenario).collect();
    let ab = conditional_ablation(&corpus, &PredictorConfig::default()).unwrap();
    let t = start.elapsed();
    let ratio = ab.conditional_gt_min_fde / ab.marginal_min_fde;
    let ordered = ab.conditional_p1_min_fde >= ab.conditional_gt_min_fde;
    outcome(
        ab.scenarios >= 500 && ratio <= 0.8 && t < Duration::from_secs(120),
        format!(
            "{} directed reactors: marginal {:.3}, conditional-gt {:.3} (ratio {ratio:.3}), conditional-p1 {:.3} ({}), {:.1}s",
            ab.scenarios,
            ab.marginal_min_fde,
            ab.conditional_gt_min_fde,
            ab.conditional_p1_min_fde,
            if ordered { "p1 >= gt as expected" } else { "p1 < gt" },
            t.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 5. scene compliance and mAP across the three modes

fn criterion_5(clf: &RelationClassifier) -> Outcome {
    let start = Instant::now();
    let cfg = GeneratorConfig {
        seed: 5,
        count: 167,
        ..GeneratorConfig::default()
    };
    let corpus: Vec<Scenario> = generate_corpus(&cfg).unwrap().into_iter().map(|g| g.scenario).collect();
    let p = PredictorConfig::default();
    let th = MatchThresholds::default();
    let run = |m: Mode| evaluate_mode(&corpus, m, Some(clf), &p, &th, false).unwrap();
    let (marg, joint, m2i) = (run(Mode::Marginal), run(Mode::Joint), run(Mode::M2i));
    let t = start.elapsed();
    let pass = m2i.overlap_rate <= 0.6 * marg.overlap_rate
        && m2i.map >= marg.map
        && m2i.map >= joint.map
        && t < Duration::from_secs(300)
        && p.samples == 6;
    outcome(
        pass,
        format!(
            "{} scenarios: OR marginal {:.3} joint {:.3} m2i {:.3}; mAP marginal {:.4} joint {:.4} m2i {:.4}; {:.1}s",
            corpus.len(),
            marg.overlap_rate,
            joint.overlap_rate,
            m2i.overlap_rate,
            marg.map,
            joint.map,
            m2i.map,
            t.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. top-k selection and probability factorization

fn candidate(i: usize, j: usize, ci: f64, cj: f64) -> JointSample {
    let provenance = Provenance::factored(vec![
        Component { agent_id: "a".into(), sample_index: i, confidence: ci },
        Component { agent_id: "b".into(), sample_index: j, confidence: cj },
    ]);
    JointSample {
        trajectories: BTreeMap::new(),
        probability: provenance.raw_probability,
        provenance,
    }
}

/// Repeatedly pull the best remaining candidate: highest raw probability, then
/// smallest (i, j). Renormalize over the kept ones in the order they were pulled.
fn selection_oracle(cands: &[JointSample], k: usize) -> Vec<((usize, usize), f64)> {
    let key = |c: &JointSample| (c.provenance.components[0].sample_index, c.provenance.components[1].sample_index);
    let mut left: Vec<&JointSample> = cands.iter().collect();
    let mut kept = Vec::new();
    for _ in 0..k {
        let mut best = 0;
        for m in 1..left.len() {
            let (a, b) = (left[m], left[best]);
            let (pa, pb) = (a.provenance.raw_probability, b.provenance.raw_probability);
            if pa > pb || (pa == pb && key(a) < key(b)) {
                best = m;
            }
        }
        kept.push(left.remove(best));
    }
    let mut total = 0.0;
    for c in &kept {
        total += c.provenance.raw_probability;
    }
    kept.iter().map(|c| (key(c), c.provenance.raw_probability / total)).collect()
}

fn factorization_error(set: &JointPredictionSet) -> f64 {
    let total: f64 = set.samples.iter().map(|s| s.provenance.raw_probability).sum();
    set.samples
        .iter()
        .map(|s| {
            let product: f64 = s.provenance.components.iter().map(|c| c.confidence).product();
            let raw = (s.provenance.raw_probability - product).abs();
            let renorm = (s.probability - s.provenance.raw_probability / total).abs();
            raw.max(renorm)
        })
        .fold(0.0, f64::max)
}

fn criterion_6(clf: &RelationClassifier) -> Outcome {
    let mut r = rng(606);
    let levels = [0.05, 0.1, 0.2, 0.25, 0.4];
    let mut agree = 0;
    for _ in 0..1000 {
        let (n1, n2) = (r.random_range(1..=7), r.random_range(1..=7));
        let mut cands = Vec::new();
        for i in 0..n1 {
            for j in 0..n2 {
                if r.random_bool(0.8) {
                    // discrete confidences produce many exact ties
                    let ci = levels[r.random_range(0..levels.len())];
                    let cj = if r.random_bool(0.5) { levels[r.random_range(0..levels.len())] } else { r.random_range(0.0..1.0) };
                    cands.push(candidate(i, j, ci, cj));
                }
            }
        }
        if cands.is_empty() {
            cands.push(candidate(0, 0, 0.5, 0.5));
        }
        // present the candidates in random order
        for m in (1..cands.len()).rev() {
            cands.swap(m, r.random_range(0..=m));
        }
        let k = r.random_range(1..=cands.len());
        let got = select_top_k(cands.clone(), k).unwrap();
        let want = selection_oracle(&cands, k);
        let got: Vec<((usize, usize), f64)> = got
            .iter()
            .map(|c| ((c.provenance.components[0].sample_index, c.provenance.components[1].sample_index), c.probability))
            .collect();
        agree += usize::from(got == want);
    }

    let p = PredictorConfig::default();
    let mut worst: f64 = 0.0;
    let mut sets = 0;
    let corpus = generate_corpus(&GeneratorConfig { seed: 6, count: 20, ..GeneratorConfig::default() }).unwrap();
    for g in &corpus {
        for set in [m2i_predict_pair(&g.scenario, clf, &p).unwrap(), predict_marginal_pairs(&g.scenario, &p).unwrap()] {
            worst = worst.max(factorization_error(&set));
            sets += 1;
        }
    }
    for i in 0..40 {
        let shape = if i % 2 == 0 { ChainShape::Chain } else { ChainShape::Fan };
        let n = if shape == ChainShape::Chain { 3 } else { 4 };
        let s = generate_chain(&GeneratorConfig::default(), shape, n, i).unwrap().scenario;
        let set = m2i_predict_multi(&s, &build_influence_graph(&s, clf).unwrap(), &p).unwrap();
        worst = worst.max(factorization_error(&set));
        sets += 1;
    }
    outcome(
        agree == 1000 && worst <= 1e-12,
        format!("{agree}/1000 selections match the oracle; worst factorization error {worst:.1e} over {sets} prediction sets"),
    )
}

// ---------------------------------------------------------------------------
// 7. metrics against brute-force references

fn wobble(t: &Trajectory, rng: &mut ChaCha8Rng, scale: f64) -> Trajectory {
    let off = Vec2::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale));
    Trajectory::from_poses(t.states().iter().enumerate().map(|(k, s)| {
        let drift = off * (k as f64 / t.len() as f64);
        let jitter = Vec2::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
        (s.position + drift + jitter, s.heading(), s.speed())
    }))
    .unwrap()
}

fn random_truth(rng: &mut ChaCha8Rng) -> AgentTruth {
    let heading: f64 = rng.random_range(-3.1..3.1);
    let v = rng.random_range(0.0..15.0);
    let start = Vec2::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
    let future = Trajectory::from_poses((1..=FUTURE_LEN).map(|k| {
        (start + Vec2::new(heading.cos(), heading.sin()) * (v * 0.1 * k as f64), heading, v)
    }))
    .unwrap();
    AgentTruth { future, initial_speed: v }
}

fn random_instance(rng: &mut ChaCha8Rng) -> Vec<(JointPredictionSet, GroundTruth)> {
    let scenes = rng.random_range(1..=8);
    let probs = [0.1, 0.2, 0.3, 0.5];
    (0..scenes)
        .map(|si| {
            let agents = rng.random_range(1..=3);
            let gt: GroundTruth = (0..agents).map(|a| (format!("agent-{a}"), random_truth(rng))).collect();
            let k = rng.random_range(1..=6);
            let samples = (0..k)
                .map(|_| {
                    let scale = rng.random_range(0.5..8.0);
                    let trajectories = gt.iter().map(|(id, t)| (id.clone(), wobble(&t.future, rng, scale))).collect();
                    let probability =
                        if rng.random_bool(0.5) { probs[rng.random_range(0..probs.len())] } else { rng.random_range(0.0..1.0) };
                    JointSample {
                        trajectories,
                        probability,
                        provenance: Provenance { components: vec![], raw_probability: probability, factored: false },
                    }
                })
                .collect();
            let set = JointPredictionSet {
                scenario_id: format!("s{si}"),
                relation: None,
                samples,
                removed_edges: vec![],
            };
            (set, gt)
        })
        .collect()
}

fn brute_sample_errors(s: &JointSample, gt: &GroundTruth) -> (f64, f64) {
    let mut sum = 0.0;
    let mut count = 0.0;
    let mut fde = 0.0;
    for (id, truth) in gt {
        let pred = s.trajectories[id].states();
        let real = truth.future.states();
        for k in 0..real.len() {
            sum += (pred[k].position.x - real[k].position.x).hypot(pred[k].position.y - real[k].position.y);
            count += 1.0;
        }
        let (p, q) = (pred[real.len() - 1].position, real[real.len() - 1].position);
        fde += (p.x - q.x).hypot(p.y - q.y);
    }
    (sum / count, fde / gt.len() as f64)
}

fn brute_hit(s: &JointSample, gt: &GroundTruth) -> bool {
    gt.iter().all(|(id, truth)| {
        let q = truth.future.states().last().unwrap();
        let p = s.trajectories[id].states().last().unwrap().position;
        let (dx, dy) = (p.x - q.position.x, p.y - q.position.y);
        let (c, sn) = (q.heading().cos(), q.heading().sin());
        let lon = dx * c + dy * sn;
        let lat = -dx * sn + dy * c;
        let v = truth.initial_speed;
        let scale = if v <= 1.4 {
            0.5
        } else if v >= 11.0 {
            1.0
        } else {
            0.5 + 0.5 * (v - 1.4) / (11.0 - 1.4)
        };
        lon.abs() <= 3.6 * scale && lat.abs() <= 1.8 * scale
    })
}

/// Explicit ranked list of true/false positives, then the interpolated area.
fn brute_map(corpus: &[(JointPredictionSet, GroundTruth)]) -> f64 {
    let mut ranked: Vec<(f64, usize, usize)> = Vec::new();
    for (si, (set, _)) in corpus.iter().enumerate() {
        for (k, s) in set.samples.iter().enumerate() {
            ranked.push((s.probability, si, k));
        }
    }
    ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut matched = BTreeSet::new();
    let mut flags = Vec::new();
    for &(_, si, k) in &ranked {
        let (set, gt) = &corpus[si];
        let tp = !matched.contains(&si) && brute_hit(&set.samples[k], gt);
        if tp {
            matched.insert(si);
        }
        flags.push(tp);
    }
    let precision: Vec<f64> = (0..flags.len())
        .map(|n| flags[..=n].iter().filter(|&&f| f).count() as f64 / (n + 1) as f64)
        .collect();
    let mut ap = 0.0;
    for (n, &tp) in flags.iter().enumerate() {
        if tp {
            let best = precision[n..].iter().copied().fold(0.0, f64::max);
            ap += best / corpus.len() as f64;
        }
    }
    ap
}

fn box_points(b: &OrientedBox, step: f64) -> impl Iterator<Item = Vec2> + '_ {
    let (hl, hw) = b.half_extents;
    let (nl, nw) = ((2.0 * hl / step).round() as i64, (2.0 * hw / step).round() as i64);
    let (c, s) = (b.heading.cos(), b.heading.sin());
    (0..=nl).flat_map(move |i| {
        (0..=nw).map(move |j| {
            let (u, v) = (-hl + 2.0 * hl * i as f64 / nl as f64, -hw + 2.0 * hw * j as f64 / nw as f64);
            Vec2::new(b.center.x + u * c - v * s, b.center.y + u * s + v * c)
        })
    })
}

/// Point-in-rectangle via the four edge half-planes.
fn inside(b: &OrientedBox, p: Vec2) -> bool {
    let (c, s) = (b.heading.cos(), b.heading.sin());
    let (dx, dy) = (p.x - b.center.x, p.y - b.center.y);
    let u = dx * c + dy * s;
    let v = -dx * s + dy * c;
    u.abs() <= b.half_extents.0 && v.abs() <= b.half_extents.1
}

/// Overlap decided by 1 cm grids over both boxes.
fn grid_overlap(p: &OrientedBox, q: &OrientedBox) -> bool {
    box_points(p, 0.01).any(|x| inside(q, x)) || box_points(q, 0.01).any(|x| inside(p, x))
}

fn grown(b: &OrientedBox, by: f64) -> OrientedBox {
    OrientedBox { half_extents: (b.half_extents.0 + by, b.half_extents.1 + by), ..*b }
}

fn one_step(center: Vec2, heading: f64) -> Trajectory {
    Trajectory::from_poses([(center, heading, 0.0)]).unwrap()
}

fn criterion_7() -> Outcome {
    let th = MatchThresholds::default();
    let mut r = rng(707);
    let (mut ok_dist, mut ok_miss, mut ok_map) = (0, 0, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let inst = random_instance(&mut r);
        let (mut dist_ok, mut miss_ok) = (true, true);
        for (set, gt) in &inst {
            let errs: Vec<(f64, f64)> = set.samples.iter().map(|s| brute_sample_errors(s, gt)).collect();
            let ade = errs.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
            let fde = errs.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
            let d = (joint_min_ade(set, gt).unwrap() - ade).abs().max((joint_min_fde(set, gt).unwrap() - fde).abs());
            worst = worst.max(d);
            dist_ok &= d <= 1e-9;
            miss_ok &= joint_miss(set, gt, &th).unwrap() == !set.samples.iter().any(|s| brute_hit(s, gt));
        }
        ok_dist += usize::from(dist_ok);
        ok_miss += usize::from(miss_ok);
        ok_map += usize::from((mean_average_precision(&inst, &th).unwrap() - brute_map(&inst)).abs() <= 1e-9);
    }

    let mut boxes_ok = 0;
    let mut overlapping = 0;
    let mut tested = 0;
    while tested < 1000 {
        let fa = AgentFootprint::new(r.random_range(3.5..5.0), r.random_range(1.6..2.2)).unwrap();
        let fb = AgentFootprint::new(r.random_range(3.5..5.0), r.random_range(1.6..2.2)).unwrap();
        let (ca, ha) = (Vec2::new(0.0, 0.0), r.random_range(-3.2..3.2));
        let (cb, hb) = (Vec2::new(r.random_range(-5.0..5.0), r.random_range(-5.0..5.0)), r.random_range(-3.2..3.2));
        let pa = OrientedBox::new(ca, ha, fa.length, fa.width);
        let pb = OrientedBox::new(cb, hb, fb.length, fb.width);
        // the grid cannot settle contacts thinner than its spacing; keep pairs whose
        // decision is unchanged when one box grows or shrinks by 3 cm
        let decided = grid_overlap(&grown(&pa, 0.03), &pb);
        if decided != grid_overlap(&grown(&pa, -0.03), &pb) {
            continue;
        }
        tested += 1;
        overlapping += usize::from(decided);
        let sample = JointSample {
            trajectories: BTreeMap::from([("a".to_string(), one_step(ca, ha)), ("b".to_string(), one_step(cb, hb))]),
            probability: 1.0,
            provenance: Provenance { components: vec![], raw_probability: 1.0, factored: false },
        };
        let fps = BTreeMap::from([("a".to_string(), fa), ("b".to_string(), fb)]);
        boxes_ok += usize::from(sample_overlap(&sample, &fps).unwrap() == grid_overlap(&pa, &pb));
    }
    outcome(
        ok_dist == 200 && ok_miss == 200 && ok_map == 200 && boxes_ok == 1000,
        format!(
            "distances {ok_dist}/200 (worst {worst:.1e}), miss {ok_miss}/200, mAP {ok_map}/200, overlap {boxes_ok}/1000 ({overlapping} overlapping)"
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. None relation reduces to the marginal pairing

fn same_samples(a: &JointPredictionSet, b: &JointPredictionSet) -> bool {
    let strip = |s: &JointPredictionSet| JointPredictionSet { relation: None, ..s.clone() }.to_json().unwrap();
    strip(a) == strip(b)
}

fn criterion_8(clf: &RelationClassifier) -> Outcome {
    let p = PredictorConfig::default();
    let corpus = generate_corpus(&GeneratorConfig { seed: 8, count: 40, ..GeneratorConfig::default() }).unwrap();
    let (mut ok, mut none_predicted, mut none_ok) = (0, 0, 0);
    for g in &corpus {
        let s = &g.scenario;
        let marg = predict_marginal_pairs(s, &p).unwrap();
        let with_none = predict_pair_with_relation(s, RelationType::None, &p).unwrap();
        let swapped = predict_pair_with_relation(&s.with_swapped_pair(), RelationType::None, &p).unwrap();
        ok += usize::from(same_samples(&marg, &with_none) && same_samples(&marg, &swapped));
        if classify_pair(s, clf, s.pair().0, s.pair().1).unwrap().argmax() == RelationType::None {
            none_predicted += 1;
            let m2i = m2i_predict_pair(s, clf, &p).unwrap();
            let m2i_swapped = m2i_predict_pair(&s.with_swapped_pair(), clf, &p).unwrap();
            none_ok += usize::from(
                m2i.relation == Some(RelationType::None) && same_samples(&m2i, &marg) && same_samples(&m2i_swapped, &marg),
            );
        }
    }
    outcome(
        ok == corpus.len() && none_ok == none_predicted && none_predicted > 0,
        format!(
            "forced-None path identical on {ok}/{}; classifier predicted None on {none_predicted}, identical on {none_ok}",
            corpus.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. three-agent chains

fn criterion_9(clf: &RelationClassifier) -> Outcome {
    let p = PredictorConfig::default();
    let (mut recovered, mut clean) = (0, 0);
    let n = 200;
    for i in 0..n {
        let g = generate_chain(&GeneratorConfig::default(), ChainShape::Chain, 3, i).unwrap();
        let graph = build_influence_graph(&g.scenario, clf).unwrap();
        let got: BTreeSet<(String, String)> = graph.edges.iter().map(|e| (e.influencer.clone(), e.reactor.clone())).collect();
        let want: BTreeSet<(String, String)> = g.edges.iter().cloned().collect();
        recovered += usize::from(got == want && graph.topological_order().is_ok());
        let set = m2i_predict_multi(&g.scenario, &graph, &p).unwrap();
        let ids = g.scenario.interacting.iter().map(String::as_str);
        clean += usize::from(!sample_overlap(set.top(), &footprints(&g.scenario, ids).unwrap()).unwrap());
    }
    let (rr, cr) = (recovered as f64 / n as f64, clean as f64 / n as f64);
    outcome(
        rr >= 0.95 && cr >= 0.9,
        format!("graph recovered {recovered}/{n} ({rr:.3}), overlap-free top-1 {clean}/{n} ({cr:.3})"),
    )
}

// ---------------------------------------------------------------------------
// 10. CLI determinism and JSON round-trips

fn run_cli(out: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_m2i"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn pipeline_run(dir: &Path, config: &Path) -> bool {
    let _ = std::fs::remove_dir_all(dir);
    let c = config.to_str().unwrap();
    let pair = dir.join("pair");
    let multi = dir.join("multi");
    let steps: [(&Path, Vec<&str>); 10] = [
        (&pair, vec!["generate", "--config", c]),
        (&pair, vec!["label", "--config", c]),
        (&pair, vec!["train-relation", "--config", c]),
        (&pair, vec!["predict", "--config", c]),
        (&pair, vec!["evaluate", "--config", c, "--teacher-forcing"]),
        (&pair, vec!["report", "--config", c]),
        (&multi, vec!["generate", "--config", c, "--multi-agent"]),
        (&multi, vec!["label", "--config", c]),
        (&multi, vec!["predict", "--config", c, "--multi-agent", "--mode", "marginal"]),
        (&multi, vec!["evaluate", "--config", c, "--multi-agent", "--mode", "marginal", "--workers", "2"]),
    ];
    steps.iter().all(|(out, args)| run_cli(out, args))
        // m2i on multi-agent scenes with the classifier trained on the pair corpus
        && std::fs::copy(pair.join("classifier.json"), multi.join("classifier.json")).is_ok()
        && run_cli(&multi, &["predict", "--config", c, "--multi-agent", "--mode", "m2i"])
        && run_cli(&multi, &["evaluate", "--config", c, "--multi-agent", "--mode", "m2i"])
}

fn round_trips() -> Result<(), String> {
    let gen = generate_corpus(&GeneratorConfig { seed: 10, count: 5, ..GeneratorConfig::default() }).unwrap();
    let corpus: Vec<Scenario> = gen.into_iter().map(|g| g.scenario).collect();
    for s in &corpus {
        let back = Scenario::from_json(&s.to_json().unwrap()).unwrap();
        if &back != s || back.to_json().unwrap() != s.to_json().unwrap() {
            return Err(format!("scenario {} changed on round-trip", s.id));
        }
    }
    let mut first = Vec::new();
    write_corpus(&mut first, &corpus).unwrap();
    let mut second = Vec::new();
    write_corpus(&mut second, &read_corpus(first.as_slice()).unwrap()).unwrap();
    if first != second {
        return Err("corpus write-read-write differs".into());
    }
    let clf = trained_classifier();
    if RelationClassifier::from_json(&clf.to_json().unwrap()).unwrap() != clf {
        return Err("classifier changed on round-trip".into());
    }
    let p = PredictorConfig::default();
    for s in &corpus {
        let set = m2i_predict_pair(s, &clf, &p).unwrap();
        if JointPredictionSet::from_json(&set.to_json().unwrap()).unwrap() != set {
            return Err(format!("joint prediction of {} changed on round-trip", s.id));
        }
        let (a, _) = s.pair();
        let m: PredictionSet = predict_marginal(s, a, &p).unwrap();
        if PredictionSet::from_json(&m.to_json().unwrap()).unwrap() != m {
            return Err(format!("marginal prediction of {} changed on round-trip", s.id));
        }
    }
    Ok(())
}

fn criterion_10() -> Outcome {
    let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-cli");
    std::fs::create_dir_all(&root).unwrap();
    let config = root.join("run.toml");
    std::fs::write(&config, "seed = 7\n[generator]\ncount = 10\n[training]\nepochs = 300\n").unwrap();
    let (a, b) = (root.join("a"), root.join("b"));
    let ran = pipeline_run(&a, &config) && pipeline_run(&b, &config);
    let (ta, tb) = if ran { (tree(&a), tree(&b)) } else { (BTreeMap::new(), BTreeMap::new()) };
    let identical = ran && !ta.is_empty() && ta == tb;
    let trips = round_trips();
    outcome(
        identical && trips.is_ok(),
        format!(
            "cli pipeline ran: {ran}, {} artifacts byte-identical across reruns: {identical}; round-trips: {}",
            ta.len(),
            trips.err().unwrap_or_else(|| "exact".into())
        ),
    )
}

fn main() {
    let clf = trained_classifier();
    type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("relation heuristic vs brute force", Box::new(criterion_1)),
        ("generator vs heuristic agreement", Box::new(criterion_2)),
        ("relation classifier", Box::new(criterion_3)),
        ("conditional vs marginal reactor minFDE", Box::new(criterion_4)),
        ("scene compliance and mAP", Box::new(|| criterion_5(&clf))),
        ("selector and factorization", Box::new(|| criterion_6(&clf))),
        ("metric oracles", Box::new(criterion_7)),
        ("None-relation consistency", Box::new(|| criterion_8(&clf))),
        ("three-agent chains", Box::new(|| criterion_9(&clf))),
        ("determinism and round-trips", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("criterion {:>2} {:<40} {}  {}", n + 1, name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
