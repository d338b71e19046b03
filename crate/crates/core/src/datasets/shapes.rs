use serde::{Deserialize, Serialize};

use super::scene::{gold_attributes, AttributeSet, ObjectId, ObjectSpec, Scene, SceneSet};
use super::schema::AttributeSchema;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngStream, RNG_ALGORITHM};

/// How synthetic feature vectors are derived from an object's attribute bundle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMode {
    /// Binary bundle, zero-padded to the feature dimension, plus Gaussian noise.
    OneHotNoisy,
    /// Bundle mapped through a fixed seeded Gaussian projection, plus noise.
    RandomProjection,
}

impl FeatureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::OneHotNoisy => "one-hot-noisy",
            FeatureMode::RandomProjection => "random-projection",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureMode> {
        match s {
            "one-hot-noisy" => Some(FeatureMode::OneHotNoisy),
            "random-projection" => Some(FeatureMode::RandomProjection),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapesConfig {
    pub n_scenes: usize,
    pub feature_mode: FeatureMode,
    pub dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for ShapesConfig {
    fn default() -> Self {
        ShapesConfig {
            n_scenes: 100_000,
            feature_mode: FeatureMode::OneHotNoisy,
            dim: 64,
            noise_sigma: 0.1,
            seed: 0,
        }
    }
}

/// Global attribute indices of a value bundle, one per group.
pub fn attributes_of(values: &[usize], schema: &AttributeSchema) -> AttributeSet {
    values.iter().enumerate().map(|(g, &v)| schema.offset(g) + v).collect()
}

struct FeatureSynth<'a> {
    dim: usize,
    sigma: f64,
    schema: &'a AttributeSchema,
    projection: Option<Matrix>,
}

impl FeatureSynth<'_> {
    fn synthesize(&self, attrs: &AttributeSet, rng: &mut RngStream) -> Vec<f64> {
        let total = self.schema.total();
        let mut bundle = vec![0.0; total];
        for &a in attrs {
            bundle[a] = 1.0;
        }
        let mut feature = match &self.projection {
            None => {
                let mut f = vec![0.0; self.dim];
                f[..total].copy_from_slice(&bundle);
                f
            }
            // projection is total x dim, so the bundle is a row vector
            Some(p) => p.vecmat(&bundle).expect("projection shape fixed at construction"),
        };
        for x in &mut feature {
            *x += self.sigma * rng.standard_normal();
            // Rounded to f32, the stored precision.
            *x = f64::from(*x as f32);
        }
        feature
    }
}

fn sample_values(schema: &AttributeSchema, rng: &mut RngStream) -> Vec<usize> {
    schema.groups().iter().map(|g| rng.below(g.values.len())).collect()
}

/// Generates `n_scenes` Shapes scenes. Referent and context are sampled
/// independently; pairs with identical attribute bundles are resampled.
pub fn generate_shapes(schema: &AttributeSchema, config: &ShapesConfig) -> Result<SceneSet> {
    if config.n_scenes == 0 {
        return Err(Error::invalid("n_scenes must be positive"));
    }
    if config.dim == 0 {
        return Err(Error::invalid("feature dimension must be positive"));
    }
    if !(config.noise_sigma >= 0.0 && config.noise_sigma.is_finite()) {
        return Err(Error::invalid("noise sigma must be finite and non-negative"));
    }
    if config.feature_mode == FeatureMode::OneHotNoisy && config.dim < schema.total() {
        return Err(Error::invalid(format!(
            "one-hot-noisy features need dim >= {} attributes, got {}",
            schema.total(),
            config.dim
        )));
    }
    if schema.object_count() < 2 {
        return Err(Error::invalid("schema admits fewer than two distinct objects"));
    }

    let mut rng = RngStream::new(config.seed);
    let projection = match config.feature_mode {
        FeatureMode::OneHotNoisy => None,
        FeatureMode::RandomProjection => {
            let mut prng = rng.substream(0);
            let scale = 1.0 / (config.dim as f64).sqrt();
            Some(Matrix::from_fn(schema.total(), config.dim, |_, _| scale * prng.standard_normal()))
        }
    };
    let synth = FeatureSynth {
        dim: config.dim,
        sigma: config.noise_sigma,
        schema,
        projection,
    };

    let mut scenes = Vec::with_capacity(config.n_scenes);
    for id in 0..config.n_scenes as u64 {
        let (ref_values, ctx_values) = loop {
            let r = sample_values(schema, &mut rng);
            let c = sample_values(schema, &mut rng);
            if r != c {
                break (r, c);
            }
        };
        let ref_attrs = attributes_of(&ref_values, schema);
        let ctx_attrs = attributes_of(&ctx_values, schema);
        let gold = gold_attributes(&ref_attrs, &ctx_attrs);
        debug_assert!(!gold.is_empty());
        let referent = ObjectSpec {
            id: ObjectId(schema.object_code(&ref_values)),
            feature: synth.synthesize(&ref_attrs, &mut rng),
            values: Some(ref_values),
        };
        let context = ObjectSpec {
            id: ObjectId(schema.object_code(&ctx_values)),
            feature: synth.synthesize(&ctx_attrs, &mut rng),
            values: Some(ctx_values),
        };
        scenes.push(Scene { id, referent, context, gold });
    }
    let provenance = format!(
        "shapes seed={} rng={} n={} mode={} dim={} noise={}",
        config.seed,
        RNG_ALGORITHM,
        config.n_scenes,
        config.feature_mode.as_str(),
        config.dim,
        config.noise_sigma
    );
    SceneSet::new(schema.clone(), config.dim, scenes, provenance)
}
