//! Browser demo: generate a scene, compare marginal, joint and factored
//! predictions on it, and re-run the reactor's conditional prediction with a
//! different safety gap.

use m2i_core::experiment::{predict_scenario, relation_dataset, Mode};
use m2i_core::metrics::{ground_truth, joint_min_ade, joint_min_fde, joint_miss, MatchThresholds};
use m2i_core::pipeline::JointPredictionSet;
use m2i_core::predict::{predict_conditional, predict_marginal, PredictorConfig};
use m2i_core::relation::{
    assign_roles, classify_pair, train_relation_classifier, RelationClassifier, RelationType, Roles, TrainingOptions,
};
use m2i_core::scengen::{generate_corpus, GeneratorConfig, TemplateKind};
use m2i_core::scenario::Scenario;
use m2i_core::trajectory::Trajectory;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

type DemoResult<T> = Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn points(t: &Trajectory) -> Value {
    t.positions().map(|p| [p.x, p.y]).collect::<Vec<_>>().into()
}

#[wasm_bindgen]
pub struct Demo {
    classifier: RelationClassifier,
    cfg: PredictorConfig,
    scene: Option<Scenario>,
}

#[wasm_bindgen]
impl Demo {
    /// Trains the relation classifier on a small generated corpus.
    #[wasm_bindgen(constructor)]
    pub fn new() -> Result<Demo, String> {
        let gen = GeneratorConfig {
            seed: 0,
            count: 40,
            ..GeneratorConfig::default()
        };
        let corpus: Vec<Scenario> = generate_corpus(&gen).map_err(err)?.into_iter().map(|g| g.scenario).collect();
        let data = relation_dataset(&corpus).map_err(err)?;
        let (classifier, _) = train_relation_classifier(&data, TrainingOptions::default()).map_err(err)?;
        Ok(Demo {
            classifier,
            cfg: PredictorConfig::default(),
            scene: None,
        })
    }

    pub fn templates() -> Vec<String> {
        TemplateKind::ALL.iter().map(|t| t.as_str().to_string()).collect()
    }

    /// Generates scene `seed` of a template and makes it current.
    pub fn scene(&mut self, template: &str, seed: u64) -> Result<String, String> {
        let kind: TemplateKind = template.parse().map_err(err)?;
        let gen = GeneratorConfig {
            seed,
            count: 1,
            templates: vec![kind],
            ..GeneratorConfig::default()
        };
        let g = generate_corpus(&gen).map_err(err)?.remove(0);
        let (label, geom) = g.heuristic_label().map_err(err)?;
        let s = &g.scenario;
        let (a, b) = s.pair();
        let predicted = classify_pair(s, &self.classifier, a, b).map_err(err)?;
        let out = json!({
            "id": s.id,
            "template": kind.as_str(),
            "pair": [a, b],
            "intended": g.intended.as_str(),
            "label": label.as_str(),
            "predicted": predicted.argmax().as_str(),
            "probabilities": predicted.0,
            "closest_approach": geom.d_i,
            "threshold": geom.epsilon_d,
            "lanes": s.lanes.iter().map(|l| l.centerline.points().iter().map(|p| [p.x, p.y]).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "agents": s.agents.iter().map(|ag| json!({
                "id": ag.id,
                "length": ag.footprint.length,
                "width": ag.footprint.width,
                "history": points(&ag.history),
                "future": points(&ag.future),
            })).collect::<Vec<_>>(),
        });
        self.scene = Some(g.scenario);
        Ok(out.to_string())
    }

    /// Joint prediction of the current scene in `mode` (marginal, joint or m2i).
    pub fn predict(&self, mode: &str) -> Result<String, String> {
        let s = self.current()?;
        let mode: Mode = mode.parse().map_err(err)?;
        let set = predict_scenario(s, mode, Some(&self.classifier), &self.cfg, false).map_err(err)?;
        Ok(joint_json(s, &set)?.to_string())
    }

    /// Reactor samples conditioned on the influencer's true future with the given
    /// safety gap (s), next to the reactor's marginal samples.
    pub fn conditional(&self, gap_time: f64) -> Result<String, String> {
        let s = self.current()?;
        if !(gap_time.is_finite() && gap_time >= 0.0) {
            return Err("gap must be a non-negative number of seconds".into());
        }
        let (a, b) = s.pair();
        let relation = classify_pair(s, &self.classifier, a, b).map_err(err)?.argmax();
        // Without a predicted interaction the second agent is shown as influencer.
        let directed = if relation == RelationType::None { RelationType::Yield } else { relation };
        let Roles::Directed { influencer, reactor } = assign_roles(directed, (a, b)) else {
            unreachable!("directed relation")
        };
        let cfg = PredictorConfig {
            safety_gap_time: gap_time,
            ..self.cfg.clone()
        };
        let inf = s.agent(&influencer).map_err(err)?;
        let cond = predict_conditional(s, &reactor, &inf.future, inf.footprint, &cfg).map_err(err)?;
        let marg = predict_marginal(s, &reactor, &cfg).map_err(err)?;
        let samples = |set: &m2i_core::predict::PredictionSet| {
            set.samples
                .iter()
                .map(|p| json!({ "confidence": p.confidence, "trajectory": points(&p.trajectory) }))
                .collect::<Vec<_>>()
        };
        Ok(json!({
            "relation": relation.as_str(),
            "influencer": influencer,
            "reactor": reactor,
            "gap_time": gap_time,
            "conditional": samples(&cond),
            "marginal": samples(&marg),
        })
        .to_string())
    }
}

impl Demo {
    fn current(&self) -> DemoResult<&Scenario> {
        self.scene.as_ref().ok_or_else(|| "generate a scene first".to_string())
    }
}

fn joint_json(s: &Scenario, set: &JointPredictionSet) -> DemoResult<Value> {
    let (a, b) = s.pair();
    let gt = ground_truth(s, [a, b]).map_err(err)?;
    Ok(json!({
        "relation": set.relation.map(|r| r.as_str()),
        "minADE": joint_min_ade(set, &gt).map_err(err)?,
        "minFDE": joint_min_fde(set, &gt).map_err(err)?,
        "miss": joint_miss(set, &gt, &MatchThresholds::default()).map_err(err)?,
        "samples": set.samples.iter().map(|j| json!({
            "probability": j.probability,
            "trajectories": j.trajectories.iter().map(|(id, t)| (id.clone(), points(t))).collect::<serde_json::Map<_, _>>(),
        })).collect::<Vec<_>>(),
    }))
}
