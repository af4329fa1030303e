//! The multi-encoder embedding network.
//!
//! Time, space and space-time features each pass through their own encoder.
//! The three embeddings are concatenated into a joint encoder whose embedding
//! feeds the prediction head:
//!
//! ```text
//! x_t  -> dense(H, relu) -> dense(E)  \
//! x_s  -> dense(H, relu) -> dense(E)   > concat(3E) -> dense(H, relu) -> dense(E) -> dense(H, relu) -> dense(D_y)
//! x_st -> conv1d(F, K, relu) -> dense(E) /
//! ```
//!
//! Every encoder is a view into the same parameters as the full predictor, so
//! embeddings always reflect the current trained weights.

mod weights;

use serde::{Deserialize, Serialize};

use crate::dataset::{Schema, WEATHER_CHANNELS, WEATHER_HOURS};
use crate::nn::{self, Activation, LayerSpec, ParameterSet, Trainable};
use crate::seed;
use crate::{Error, Result};

pub use weights::{load_weights, save_weights};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingNetConfig {
    pub d_t: usize,
    pub d_s: usize,
    pub d_st: usize,
    pub d_y: usize,
    /// Time steps of the space-time block; channels are `d_st / weather_steps`.
    pub weather_steps: usize,
    pub hidden_width: usize,
    pub embedding_dim: usize,
    pub conv_filters: usize,
    pub conv_kernel: usize,
}

impl Default for EmbeddingNetConfig {
    fn default() -> Self {
        EmbeddingNetConfig::for_schema(&Schema::STANDARD)
    }
}

impl EmbeddingNetConfig {
    pub fn for_schema(schema: &Schema) -> Self {
        EmbeddingNetConfig {
            d_t: schema.d_t,
            d_s: schema.d_s,
            d_st: schema.d_st,
            d_y: schema.d_y,
            weather_steps: if schema.d_st == WEATHER_CHANNELS * WEATHER_HOURS {
                WEATHER_HOURS
            } else {
                schema.d_st
            },
            hidden_width: 1000,
            embedding_dim: 100,
            conv_filters: 16,
            conv_kernel: 3,
        }
    }

    pub fn d_x(&self) -> usize {
        self.d_t + self.d_s + self.d_st
    }

    pub fn weather_channels(&self) -> usize {
        self.d_st / self.weather_steps.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("d_t", self.d_t),
            ("d_s", self.d_s),
            ("d_st", self.d_st),
            ("d_y", self.d_y),
            ("weather_steps", self.weather_steps),
            ("hidden_width", self.hidden_width),
            ("embedding_dim", self.embedding_dim),
            ("conv_filters", self.conv_filters),
            ("conv_kernel", self.conv_kernel),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be >= 1")));
            }
        }
        if !self.d_st.is_multiple_of(self.weather_steps) {
            return Err(Error::invalid(format!(
                "d_st {} is not a multiple of weather_steps {}",
                self.d_st, self.weather_steps
            )));
        }
        if self.conv_kernel > self.weather_steps {
            return Err(Error::invalid(format!(
                "conv_kernel {} exceeds weather_steps {}",
                self.conv_kernel, self.weather_steps
            )));
        }
        Ok(())
    }
}

/// Which representation of a candidate is used for clustering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EncoderId {
    Time,
    Space,
    SpaceTime,
    Joint,
    PredictedLabel,
    TrueLabel,
}

impl EncoderId {
    pub fn name(&self) -> &'static str {
        match self {
            EncoderId::Time => "x_t",
            EncoderId::Space => "x_s",
            EncoderId::SpaceTime => "x_st",
            EncoderId::Joint => "x_ts",
            EncoderId::PredictedLabel => "y_hat",
            EncoderId::TrueLabel => "y",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "x_t" | "time" => Some(EncoderId::Time),
            "x_s" | "space" => Some(EncoderId::Space),
            "x_st" | "space_time" => Some(EncoderId::SpaceTime),
            "x_ts" | "joint" => Some(EncoderId::Joint),
            "y_hat" | "predicted_label" => Some(EncoderId::PredictedLabel),
            "y" | "true_label" => Some(EncoderId::TrueLabel),
            _ => None,
        }
    }

    pub fn output_len(&self, cfg: &EmbeddingNetConfig) -> usize {
        match self {
            EncoderId::PredictedLabel | EncoderId::TrueLabel => cfg.d_y,
            _ => cfg.embedding_dim,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Part {
    Time = 0,
    Space = 1,
    SpaceTime = 2,
    Joint = 3,
    Head = 4,
}

const PARTS: [Part; 5] = [Part::Time, Part::Space, Part::SpaceTime, Part::Joint, Part::Head];

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingNetwork {
    cfg: EmbeddingNetConfig,
    specs: [Vec<LayerSpec>; 5],
    /// Layer index range of each part within `params`.
    ranges: [(usize, usize); 5],
    params: ParameterSet,
}

fn part_specs(cfg: &EmbeddingNetConfig) -> [Vec<LayerSpec>; 5] {
    let (h, e) = (cfg.hidden_width, cfg.embedding_dim);
    let conv = LayerSpec::conv1d(
        cfg.weather_steps,
        cfg.weather_channels(),
        cfg.conv_filters,
        cfg.conv_kernel,
        Activation::Relu,
    );
    let conv_out = conv.output_len();
    [
        vec![
            LayerSpec::dense(cfg.d_t, h, Activation::Relu),
            LayerSpec::dense(h, e, Activation::Linear),
        ],
        vec![
            LayerSpec::dense(cfg.d_s, h, Activation::Relu),
            LayerSpec::dense(h, e, Activation::Linear),
        ],
        vec![conv, LayerSpec::dense(conv_out, e, Activation::Linear)],
        vec![
            LayerSpec::dense(3 * e, h, Activation::Relu),
            LayerSpec::dense(h, e, Activation::Linear),
        ],
        vec![
            LayerSpec::dense(e, h, Activation::Relu),
            LayerSpec::dense(h, cfg.d_y, Activation::Linear),
        ],
    ]
}

struct Traces {
    parts: Vec<nn::Trace>,
}

impl EmbeddingNetwork {
    /// Builds the network with Glorot-uniform weights drawn from `seed`.
    pub fn build(cfg: EmbeddingNetConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let specs = part_specs(&cfg);
        let mut rng = seed::rng(seed);
        let mut params = ParameterSet::default();
        let mut ranges = [(0, 0); 5];
        for p in PARTS {
            let start = params.layers.len();
            for s in &specs[p as usize] {
                s.validate()?;
                params.layers.push(s.init(&mut rng));
            }
            ranges[p as usize] = (start, params.layers.len());
        }
        let net = EmbeddingNetwork {
            cfg,
            specs,
            ranges,
            params,
        };
        log::debug!("embedding network with {} trainable parameters", net.param_count());
        Ok(net)
    }

    /// Rebuilds a network around existing parameters.
    pub fn from_parameters(cfg: EmbeddingNetConfig, params: ParameterSet) -> Result<Self> {
        let mut net = EmbeddingNetwork::build(cfg, 0)?;
        if params.layers.len() != net.params.layers.len()
            || params
                .layers
                .iter()
                .zip(&net.params.layers)
                .any(|(a, b)| a.weights.len() != b.weights.len() || a.bias.len() != b.bias.len())
        {
            return Err(Error::invalid("parameters do not match the network config"));
        }
        net.params = params;
        Ok(net)
    }

    pub fn config(&self) -> &EmbeddingNetConfig {
        &self.cfg
    }

    /// All layer specs in parameter order.
    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        self.specs.iter().flatten().cloned().collect()
    }

    fn layers(&self, p: Part) -> &[nn::LayerParams] {
        let (a, b) = self.ranges[p as usize];
        &self.params.layers[a..b]
    }

    fn run(&self, p: Part, x: &[f64]) -> Result<Vec<f64>> {
        nn::forward_layers(&self.specs[p as usize], self.layers(p), x)
    }

    fn trace(&self, p: Part, x: &[f64]) -> Result<nn::Trace> {
        nn::forward_trace(&self.specs[p as usize], self.layers(p), x)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.cfg.d_x() {
            return Err(Error::ShapeMismatch {
                expected: self.cfg.d_x(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64]) {
        let (xt, rest) = x.split_at(self.cfg.d_t);
        let (xs, xst) = rest.split_at(self.cfg.d_s);
        (xt, xs, xst)
    }

    fn joint_input(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (xt, xs, xst) = self.split(x);
        let mut cat = self.run(Part::Time, xt)?;
        cat.extend(self.run(Part::Space, xs)?);
        cat.extend(self.run(Part::SpaceTime, xst)?);
        Ok(cat)
    }

    /// Predicted label for a full feature vector.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let joint = self.run(Part::Joint, &self.joint_input(x)?)?;
        self.run(Part::Head, &joint)
    }

    /// Embeds a point with the chosen encoder. `label` is only consulted for
    /// [`EncoderId::TrueLabel`], which fails when it is absent.
    pub fn encode(&self, id: EncoderId, x: &[f64], label: Option<&[f64]>) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let (xt, xs, xst) = self.split(x);
        match id {
            EncoderId::Time => self.run(Part::Time, xt),
            EncoderId::Space => self.run(Part::Space, xs),
            EncoderId::SpaceTime => self.run(Part::SpaceTime, xst),
            EncoderId::Joint => self.run(Part::Joint, &self.joint_input(x)?),
            EncoderId::PredictedLabel => self.predict(x),
            EncoderId::TrueLabel => match label {
                Some(y) if y.len() == self.cfg.d_y => Ok(y.to_vec()),
                Some(y) => Err(Error::ShapeMismatch {
                    expected: self.cfg.d_y,
                    got: y.len(),
                }),
                None => Err(Error::invalid("true-label encoding requested for an unlabeled point")),
            },
        }
    }

    fn forward_traces(&self, x: &[f64]) -> Result<Traces> {
        let (xt, xs, xst) = self.split(x);
        let t = self.trace(Part::Time, xt)?;
        let s = self.trace(Part::Space, xs)?;
        let st = self.trace(Part::SpaceTime, xst)?;
        let mut cat = t.output().to_vec();
        cat.extend_from_slice(s.output());
        cat.extend_from_slice(st.output());
        let j = self.trace(Part::Joint, &cat)?;
        let h = self.trace(Part::Head, j.output())?;
        Ok(Traces {
            parts: vec![t, s, st, j, h],
        })
    }

    fn backward_part(&self, p: Part, trace: &nn::Trace, grad: &[f64], grads: &mut ParameterSet) -> Vec<f64> {
        let (a, b) = self.ranges[p as usize];
        nn::backward(
            &self.specs[p as usize],
            self.layers(p),
            trace,
            grad,
            &mut grads.layers[a..b],
        )
    }
}

impl Trainable for EmbeddingNetwork {
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        EmbeddingNetwork::predict(self, x)
    }

    fn accumulate_gradient(&self, x: &[f64], y: &[f64], grads: &mut ParameterSet) -> Result<f64> {
        self.check_input(x)?;
        let tr = self.forward_traces(x)?;
        let out = tr.parts[Part::Head as usize].output();
        let loss = nn::mse_loss(out, y)?;
        let g_out = nn::mse_gradient(out, y)?;
        let g_joint = self.backward_part(Part::Head, &tr.parts[Part::Head as usize], &g_out, grads);
        let g_cat = self.backward_part(Part::Joint, &tr.parts[Part::Joint as usize], &g_joint, grads);
        let e = self.cfg.embedding_dim;
        for (k, p) in [Part::Time, Part::Space, Part::SpaceTime].into_iter().enumerate() {
            self.backward_part(p, &tr.parts[p as usize], &g_cat[k * e..(k + 1) * e], grads);
        }
        Ok(loss)
    }

    fn parameters(&self) -> &ParameterSet {
        &self.params
    }

    fn parameters_mut(&mut self) -> &mut ParameterSet {
        &mut self.params
    }
}

#[cfg(test)]
mod tests;
