use std::collections::BTreeMap;

use m2i_core::geom::{boxes_overlap, OrientedBox, RigidTransform, Vec2};
use m2i_core::metrics::{
    average_precision, joint_min_ade, joint_min_fde, mean_average_precision, sample_ade, sample_fde, AgentTruth,
    GroundTruth, MatchThresholds,
};
use m2i_core::pipeline::{
    select_top_k, Component, InfluenceEdge, InfluenceGraph, JointPredictionSet, JointSample, Provenance,
};
use m2i_core::predict::profile::{profile_for_distance, reachable_distance};
use m2i_core::relation::{label_relation, softmax, RelationClassifier, RelationType};
use m2i_core::scengen::{generate_corpus, GeneratorConfig, TemplateKind};
use m2i_core::scenario::Scenario;
use m2i_core::trajectory::{pairwise_min_distance, AgentFootprint, Trajectory, DT, FUTURE_LEN};
use proptest::prelude::*;

fn vec2() -> impl Strategy<Value = Vec2> {
    (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(x, y)| Vec2::new(x, y))
}

/// Straight constant-speed future.
fn straight() -> impl Strategy<Value = Trajectory> {
    (vec2(), -3.2..3.2f64, 0.0..15.0f64).prop_map(|(start, heading, speed)| {
        let d = Vec2::from_heading(heading);
        Trajectory::from_poses((1..=FUTURE_LEN).map(|k| (start + d * (speed * k as f64 * DT), heading, speed))).unwrap()
    })
}

/// Straight future passing near the origin after `arrival` seconds.
fn through_origin() -> impl Strategy<Value = Trajectory> {
    (-3.2..3.2f64, 1.0..15.0f64, 0.5..7.5f64, -2.0..2.0f64).prop_map(|(heading, speed, arrival, lateral)| {
        let d = Vec2::from_heading(heading);
        let start = d.perp() * lateral - d * (speed * arrival);
        Trajectory::from_poses((1..=FUTURE_LEN).map(|k| (start + d * (speed * k as f64 * DT), heading, speed))).unwrap()
    })
}

fn future() -> impl Strategy<Value = Trajectory> {
    prop_oneof![straight(), through_origin()]
}

fn short_path(len: usize) -> impl Strategy<Value = Trajectory> {
    prop::collection::vec(vec2(), len).prop_map(|ps| Trajectory::from_poses(ps.into_iter().map(|p| (p, 0.0, 1.0))).unwrap())
}

fn footprint() -> impl Strategy<Value = AgentFootprint> {
    (1.0..3.0f64, 1.0..2.5f64).prop_map(|(w, extra)| AgentFootprint::new(w * extra.max(1.0), w).unwrap())
}

fn candidate(p: f64, idx: usize) -> JointSample {
    JointSample {
        trajectories: BTreeMap::new(),
        probability: 0.0,
        provenance: Provenance::factored(vec![Component {
            agent_id: "a".into(),
            sample_index: idx,
            confidence: p,
        }]),
    }
}

fn single_agent_sample(t: Trajectory, p: f64) -> JointSample {
    JointSample {
        trajectories: BTreeMap::from([("a".to_string(), t)]),
        probability: p,
        provenance: Provenance::factored(vec![]),
    }
}

fn set(samples: Vec<JointSample>) -> JointPredictionSet {
    JointPredictionSet {
        scenario_id: "s".into(),
        relation: None,
        samples,
        removed_edges: vec![],
    }
}

fn truth(t: Trajectory) -> GroundTruth {
    BTreeMap::from([(
        "a".to_string(),
        AgentTruth {
            future: t,
            initial_speed: 5.0,
        },
    )])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn softmax_is_a_distribution(l in prop::array::uniform3(-500.0..500.0f64)) {
        let p = softmax(&l);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn classifier_output_is_a_distribution(
        w in prop::collection::vec(-5.0..5.0f64, 27),
        b in prop::array::uniform3(-5.0..5.0f64),
        x in prop::collection::vec(-100.0..100.0f64, 9),
    ) {
        let mut clf = RelationClassifier::zeros(9);
        clf.weights = w.chunks(9).map(<[f64]>::to_vec).collect();
        clf.bias = b.to_vec();
        let d = clf.predict(&x);
        prop_assert!((d.0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((d.swapped().0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn top_k_selection(probs in prop::collection::vec(0.0..1.0f64, 1..40), k_frac in 0.0..1.0f64) {
        let k = 1 + ((probs.len() - 1) as f64 * k_frac) as usize;
        let cands: Vec<_> = probs.iter().enumerate().map(|(i, &p)| candidate(p, i)).collect();
        let top = select_top_k(cands, k).unwrap();
        prop_assert_eq!(top.len(), k);
        prop_assert!((top.iter().map(|s| s.probability).sum::<f64>() - 1.0).abs() < 1e-9);
        for w in top.windows(2) {
            prop_assert!(w[0].provenance.raw_probability >= w[1].provenance.raw_probability);
        }
        let kept: Vec<usize> = top.iter().map(|s| s.provenance.components[0].sample_index).collect();
        let mut unique = kept.clone();
        unique.sort_unstable();
        unique.dedup();
        prop_assert_eq!(unique.len(), k);
        let min_kept = top.last().unwrap().provenance.raw_probability;
        for (i, &p) in probs.iter().enumerate() {
            if !kept.contains(&i) {
                prop_assert!(p <= min_kept);
            }
        }
    }

    #[test]
    fn top_k_rejects_bad_k(n in 0usize..10, extra in 1usize..5) {
        let cands: Vec<_> = (0..n).map(|i| candidate(0.5, i)).collect();
        prop_assert!(select_top_k(cands.clone(), n + extra).is_err());
        prop_assert!(select_top_k(cands, 0).is_err());
    }

    #[test]
    fn provenance_is_the_product(c in prop::collection::vec(0.0..1.0f64, 0..6)) {
        let comps: Vec<_> = c.iter().enumerate().map(|(i, &p)| Component { agent_id: format!("v{i}"), sample_index: i, confidence: p }).collect();
        let prov = Provenance::factored(comps);
        let expected: f64 = c.iter().product();
        prop_assert!((prov.raw_probability - expected).abs() <= 1e-15);
        prop_assert!(prov.factored);
    }

    #[test]
    fn min_distance_symmetric_and_bounded(a in short_path(12), b in short_path(9)) {
        let (d, i, j) = pairwise_min_distance(&a, &b).unwrap();
        let (d2, j2, i2) = pairwise_min_distance(&b, &a).unwrap();
        prop_assert_eq!(d, d2);
        let pa = a.states()[i].position;
        let pb = b.states()[j].position;
        prop_assert_eq!(pa.dist(pb), d);
        prop_assert_eq!(a.states()[i2].position.dist(b.states()[j2].position), d);
        for p in a.positions() {
            for q in b.positions() {
                prop_assert!(p.dist(q) >= d);
            }
        }
    }

    #[test]
    fn relation_swaps_with_agent_order(y1 in future(), y2 in future(), f1 in footprint(), f2 in footprint()) {
        let (r12, g12) = label_relation(&y1, &y2, &f1, &f2).unwrap();
        let (r21, g21) = label_relation(&y2, &y1, &f2, &f1).unwrap();
        prop_assert_eq!(g12.d_i, g21.d_i);
        prop_assert_eq!(g12.epsilon_d, g21.epsilon_d);
        prop_assert_eq!((g12.t1, g12.t2), (g21.t2, g21.t1));
        let equal_speed_tie = g12.t1 == g12.t2 && y1.states()[g12.t1].speed() == y2.states()[g12.t2].speed();
        if equal_speed_tie && r12 != RelationType::None {
            prop_assert_eq!(r12, RelationType::Pass);
            prop_assert_eq!(r21, RelationType::Pass);
        } else {
            prop_assert_eq!(r21, r12.swapped());
        }
        prop_assert_eq!(r12 == RelationType::None, g12.d_i > g12.epsilon_d);
    }

    #[test]
    fn min_ade_fde_bounds(
        gt in short_path(FUTURE_LEN),
        preds in prop::collection::vec(short_path(FUTURE_LEN), 1..5),
        extra in short_path(FUTURE_LEN),
    ) {
        let gt = truth(gt);
        let samples: Vec<_> = preds.into_iter().map(|t| single_agent_sample(t, 0.1)).collect();
        let base = set(samples.clone());
        let ade = joint_min_ade(&base, &gt).unwrap();
        let fde = joint_min_fde(&base, &gt).unwrap();
        for s in &samples {
            prop_assert!(ade <= sample_ade(s, &gt).unwrap());
            prop_assert!(fde <= sample_fde(s, &gt).unwrap());
        }
        let mut dup = samples.clone();
        dup.push(samples[0].clone());
        prop_assert_eq!(joint_min_ade(&set(dup.clone()), &gt).unwrap(), ade);
        prop_assert_eq!(joint_min_fde(&set(dup), &gt).unwrap(), fde);
        let mut sup = samples;
        sup.push(single_agent_sample(extra, 0.1));
        prop_assert!(joint_min_ade(&set(sup.clone()), &gt).unwrap() <= ade);
        prop_assert!(joint_min_fde(&set(sup), &gt).unwrap() <= fde);
    }

    #[test]
    fn map_is_bounded(
        cases in prop::collection::vec((straight(), prop::collection::vec((straight(), 0.01..1.0f64), 1..4)), 1..6),
    ) {
        let th = MatchThresholds::default();
        let corpus: Vec<_> = cases
            .into_iter()
            .map(|(gt, preds)| (set(preds.into_iter().map(|(t, p)| single_agent_sample(t, p)).collect()), truth(gt)))
            .collect();
        let map = mean_average_precision(&corpus, &th).unwrap();
        prop_assert!((0.0..=1.0).contains(&map));
        let perfect: Vec<_> = corpus
            .iter()
            .map(|(_, gt)| (set(vec![single_agent_sample(gt["a"].future.clone(), 1.0)]), gt.clone()))
            .collect();
        prop_assert_eq!(mean_average_precision(&perfect, &th).unwrap(), 1.0);
        prop_assert_eq!(average_precision(&[]), 0.0);
    }

    #[test]
    fn threshold_scale_monotone(a in 0.0..30.0f64, b in 0.0..30.0f64) {
        let th = MatchThresholds::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(th.scale(lo) <= th.scale(hi));
        for v in [a, b] {
            prop_assert!((th.min_scale..=1.0).contains(&th.scale(v)));
        }
    }

    #[test]
    fn box_overlap_symmetric_and_rigid(
        c1 in vec2(), h1 in -3.2..3.2f64, l1 in 1.0..6.0f64, w1 in 0.5..3.0f64,
        off in (-6.0..6.0f64, -6.0..6.0f64), h2 in -3.2..3.2f64, l2 in 1.0..6.0f64, w2 in 0.5..3.0f64,
        rot in -3.2..3.2f64, shift in vec2(),
    ) {
        let p = OrientedBox::new(c1, h1, l1, w1);
        let q = OrientedBox::new(c1 + Vec2::new(off.0, off.1), h2, l2, w2);
        let o = boxes_overlap(&p, &q);
        prop_assert_eq!(o, boxes_overlap(&q, &p));
        prop_assert!(boxes_overlap(&p, &p));
        let tf = RigidTransform::new(rot, shift);
        let move_box = |b: &OrientedBox| OrientedBox::new(tf.apply(b.center), tf.apply_heading(b.heading), 2.0 * b.half_extents.0, 2.0 * b.half_extents.1);
        // Transforms round; only decisions clear of contact are compared.
        let margin = m2i_core::geom::separation_margin(&p, &q);
        if margin.abs() > 1e-6 {
            prop_assert_eq!(o, boxes_overlap(&move_box(&p), &move_box(&q)));
        }
    }

    #[test]
    fn influence_graph_is_acyclic(raw in prop::collection::vec((0usize..6, 0usize..6, 0.0..1.0f64), 0..20)) {
        let nodes: Vec<String> = (0..6).map(|i| format!("v{i}")).collect();
        let edges: Vec<InfluenceEdge> = raw
            .into_iter()
            .filter(|(a, b, _)| a != b)
            .map(|(a, b, c)| InfluenceEdge { influencer: nodes[a].clone(), reactor: nodes[b].clone(), confidence: c })
            .collect();
        let g = InfluenceGraph::new(nodes.clone(), edges.clone());
        let order = g.topological_order().unwrap();
        prop_assert_eq!(order.len(), nodes.len());
        let pos = |n: &str| order.iter().position(|o| o == n).unwrap();
        for e in &g.edges {
            prop_assert!(pos(&e.influencer) < pos(&e.reactor));
        }
        prop_assert_eq!(g.edges.len() + g.removed.len(), edges.len());
        for e in g.edges.iter().chain(&g.removed) {
            prop_assert!(edges.contains(e));
        }
    }

    #[test]
    fn ramp_profiles_are_physical(v0 in 0.0..20.0f64, frac in 0.0..1.0f64) {
        let (accel, decel) = (2.0, 3.0);
        let (lo, hi) = reachable_distance(v0, accel, decel);
        let d = lo + frac * (hi - lo);
        let plan = profile_for_distance(v0, d, accel, decel).sample();
        prop_assert!((plan.arcs.last().unwrap() - d).abs() < 1e-6 * d.max(1.0));
        let mut prev = v0;
        for &v in &plan.speeds {
            prop_assert!(v >= 0.0);
            prop_assert!((v - prev) / DT <= accel + 1e-9);
            prop_assert!((prev - v) / DT <= decel + 1e-9);
            prev = v;
        }
        for w in plan.arcs.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generation_is_deterministic_and_serializable(seed in any::<u64>(), kind in prop::sample::select(TemplateKind::ALL.to_vec())) {
        let cfg = GeneratorConfig { seed, count: 2, templates: vec![kind], ..GeneratorConfig::default() };
        let a = generate_corpus(&cfg).unwrap();
        prop_assert_eq!(&a, &generate_corpus(&cfg).unwrap());
        for g in &a {
            let s = &g.scenario;
            prop_assert_eq!(&Scenario::from_json(&s.to_json().unwrap()).unwrap(), s);
            let (a_id, b_id) = s.pair();
            let (x, y) = (s.agent(a_id).unwrap(), s.agent(b_id).unwrap());
            let overlap = x.future.boxes(&x.footprint).zip(y.future.boxes(&y.footprint)).any(|(p, q)| boxes_overlap(&p, &q));
            prop_assert!(!overlap, "{} futures overlap", s.id);
        }
    }
}
