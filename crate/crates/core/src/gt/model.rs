use super::featurize::GraphInput;
use super::tensor::{layer_norm, layer_norm_backward, linear, linear_backward, LayerNormCache, Mat};
use super::GtError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GtConfig {
    pub layers: usize,
    pub heads: usize,
    pub hidden_dim: usize,
    pub head_hidden: usize,
    pub n_tasks: usize,
    pub dropout: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for GtConfig {
    fn default() -> Self {
        GtConfig {
            layers: 4,
            heads: 4,
            hidden_dim: 128,
            head_hidden: 64,
            n_tasks: 1,
            dropout: 0.1,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            max_epochs: 450,
            patience: 20,
            batch_size: 64,
            seed: 0,
        }
    }
}

impl GtConfig {
    pub fn validate(&self) -> Result<(), GtError> {
        let bad = |m: &str| Err(GtError::InvalidConfig(m.to_string()));
        if self.heads == 0 || self.hidden_dim == 0 || !self.hidden_dim.is_multiple_of(self.heads) {
            return bad("hidden_dim must be a positive multiple of heads");
        }
        if self.head_hidden == 0 || self.n_tasks == 0 {
            return bad("head_hidden and n_tasks must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return bad("batch_size and max_epochs must be positive");
        }
        if !(self.lr > 0.0) {
            return bad("lr must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub wq: Mat,
    pub bq: Mat,
    pub wk: Mat,
    pub bk: Mat,
    pub wv: Mat,
    pub bv: Mat,
    pub wo: Mat,
    pub bo: Mat,
    pub ln1_gamma: Mat,
    pub ln1_beta: Mat,
    pub w1: Mat,
    pub b1: Mat,
    pub w2: Mat,
    pub b2: Mat,
    pub ln2_gamma: Mat,
    pub ln2_beta: Mat,
}

/// All trainable tensors. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct GtWeights {
    pub embed_w: Mat,
    pub embed_b: Mat,
    pub layers: Vec<LayerWeights>,
    pub head_w: Mat,
    pub head_b: Mat,
    /// Final projection `head_hidden × n_tasks`: the only task-count-dependent shapes.
    pub out_w: Mat,
    pub out_b: Mat,
}

const LAYER_TENSOR_NAMES: [&str; 16] = [
    "wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo", "ln1_gamma", "ln1_beta", "w1", "b1", "w2",
    "b2", "ln2_gamma", "ln2_beta",
];

impl LayerWeights {
    fn tensors(&self) -> [&Mat; 16] {
        [
            &self.wq,
            &self.bq,
            &self.wk,
            &self.bk,
            &self.wv,
            &self.bv,
            &self.wo,
            &self.bo,
            &self.ln1_gamma,
            &self.ln1_beta,
            &self.w1,
            &self.b1,
            &self.w2,
            &self.b2,
            &self.ln2_gamma,
            &self.ln2_beta,
        ]
    }
}

impl GtWeights {
    /// Tensors in a fixed order with stable names.
    pub fn tensors(&self) -> Vec<(String, &Mat)> {
        let mut out = vec![("embed_w".to_string(), &self.embed_w), ("embed_b".to_string(), &self.embed_b)];
        for (l, lw) in self.layers.iter().enumerate() {
            for (name, m) in LAYER_TENSOR_NAMES.iter().zip(lw.tensors()) {
                out.push((format!("layer{l}.{name}"), m));
            }
        }
        out.push(("head_w".into(), &self.head_w));
        out.push(("head_b".into(), &self.head_b));
        out.push(("out_w".into(), &self.out_w));
        out.push(("out_b".into(), &self.out_b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Mat> {
        let mut out = vec![&mut self.embed_w, &mut self.embed_b];
        for lw in &mut self.layers {
            out.extend([
                &mut lw.wq,
                &mut lw.bq,
                &mut lw.wk,
                &mut lw.bk,
                &mut lw.wv,
                &mut lw.bv,
                &mut lw.wo,
                &mut lw.bo,
                &mut lw.ln1_gamma,
                &mut lw.ln1_beta,
                &mut lw.w1,
                &mut lw.b1,
                &mut lw.w2,
                &mut lw.b2,
                &mut lw.ln2_gamma,
                &mut lw.ln2_beta,
            ]);
        }
        out.extend([&mut self.head_w, &mut self.head_b, &mut self.out_w, &mut self.out_b]);
        out
    }

    pub fn zeros_like(&self) -> GtWeights {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.data.iter_mut().for_each(|v| *v = 0.0);
        }
        z
    }

    pub fn add_assign(&mut self, other: &GtWeights) {
        let theirs: Vec<&Mat> = other.tensors().into_iter().map(|t| t.1).collect();
        for (a, b) in self.tensors_mut().into_iter().zip(theirs) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += y;
            }
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.1.len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.1.data.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GtModel {
    pub config: GtConfig,
    pub n_features: usize,
    pub weights: GtWeights,
}

struct LayerCache {
    x: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// Attention weights, `heads × n × n` (zero outside the neighborhood).
    attn: Vec<f64>,
    o: Vec<f64>,
    mask1: Option<Vec<f64>>,
    ln1: LayerNormCache,
    h1: Vec<f64>,
    f1: Vec<f64>,
    r: Vec<f64>,
    mask2: Option<Vec<f64>>,
    ln2: LayerNormCache,
}

/// Everything the backward pass needs from one molecule's forward pass.
pub struct ForwardCache {
    n: usize,
    layers: Vec<LayerCache>,
    readout: Vec<f64>,
    z: Vec<f64>,
    a: Vec<f64>,
}

fn dropout_mask(len: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let keep = 1.0 / (1.0 - p);
    (0..len).map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep }).collect()
}

impl GtModel {
    /// Xavier-initialized model. The final projection is drawn last so that
    /// every other tensor is independent of `n_tasks` for a given seed.
    pub fn new(config: GtConfig, n_features: usize) -> Result<GtModel, GtError> {
        config.validate()?;
        let d = config.hidden_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let embed_w = Mat::xavier(n_features, d, &mut rng);
        let layers = (0..config.layers)
            .map(|_| LayerWeights {
                wq: Mat::xavier(d, d, &mut rng),
                bq: Mat::zeros(1, d),
                wk: Mat::xavier(d, d, &mut rng),
                bk: Mat::zeros(1, d),
                wv: Mat::xavier(d, d, &mut rng),
                bv: Mat::zeros(1, d),
                wo: Mat::xavier(d, d, &mut rng),
                bo: Mat::zeros(1, d),
                ln1_gamma: Mat::filled(1, d, 1.0),
                ln1_beta: Mat::zeros(1, d),
                w1: Mat::xavier(d, 2 * d, &mut rng),
                b1: Mat::zeros(1, 2 * d),
                w2: Mat::xavier(2 * d, d, &mut rng),
                b2: Mat::zeros(1, d),
                ln2_gamma: Mat::filled(1, d, 1.0),
                ln2_beta: Mat::zeros(1, d),
            })
            .collect();
        let head_w = Mat::xavier(d + 1, config.head_hidden, &mut rng);
        let out_w = Mat::xavier(config.head_hidden, config.n_tasks, &mut rng);
        let weights = GtWeights {
            embed_w,
            embed_b: Mat::zeros(1, d),
            layers,
            head_w,
            head_b: Mat::zeros(1, config.head_hidden),
            out_w,
            out_b: Mat::zeros(1, config.n_tasks),
        };
        Ok(GtModel {
            config,
            n_features,
            weights,
        })
    }

    pub fn n_tasks(&self) -> usize {
        self.config.n_tasks
    }

    fn check_input(&self, g: &GraphInput) -> Result<(), GtError> {
        if g.n_nodes == 0 {
            return Err(GtError::DimensionMismatch("molecule has no heavy atoms".into()));
        }
        if g.features.len() != g.n_nodes * self.n_features {
            return Err(GtError::DimensionMismatch(format!(
                "expected {} features per node",
                self.n_features
            )));
        }
        Ok(())
    }

    /// Eval-mode prediction (standardized target space) for one molecule.
    pub fn predict(&self, g: &GraphInput) -> Result<Vec<f64>, GtError> {
        self.check_input(g)?;
        Ok(self.forward(g, None).0)
    }

    pub fn predict_many(&self, graphs: &[GraphInput]) -> Result<Vec<Vec<f64>>, GtError> {
        use rayon::prelude::*;
        graphs.par_iter().map(|g| self.predict(g)).collect()
    }

    /// Forward pass; dropout is active only when an RNG is supplied.
    pub fn forward(&self, g: &GraphInput, mut dropout: Option<&mut ChaCha8Rng>) -> (Vec<f64>, ForwardCache) {
        let w = &self.weights;
        let cfg = &self.config;
        let n = g.n_nodes;
        let d = cfg.hidden_dim;
        let heads = cfg.heads;
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let p = cfg.dropout;

        let mut h = linear(&g.features, n, &w.embed_w, &w.embed_b);
        let mut caches = Vec::with_capacity(cfg.layers);
        for lw in &w.layers {
            let x = h;
            let q = linear(&x, n, &lw.wq, &lw.bq);
            let k = linear(&x, n, &lw.wk, &lw.bk);
            let v = linear(&x, n, &lw.wv, &lw.bv);
            let mut attn = vec![0.0; heads * n * n];
            let mut o = vec![0.0; n * d];
            let mut scores = Vec::new();
            for hd in 0..heads {
                let off = hd * dh;
                for i in 0..n {
                    let qi = &q[i * d + off..i * d + off + dh];
                    scores.clear();
                    for &j in &g.neighbors[i] {
                        let kj = &k[j * d + off..j * d + off + dh];
                        scores.push(qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale);
                    }
                    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let mut total = 0.0;
                    for s in scores.iter_mut() {
                        *s = (*s - max).exp();
                        total += *s;
                    }
                    let row = &mut attn[(hd * n + i) * n..(hd * n + i + 1) * n];
                    for (&j, s) in g.neighbors[i].iter().zip(&scores) {
                        let a = s / total;
                        row[j] = a;
                        let vj = &v[j * d + off..j * d + off + dh];
                        for (ov, vv) in o[i * d + off..i * d + off + dh].iter_mut().zip(vj) {
                            *ov += a * vv;
                        }
                    }
                }
            }
            let mut att = linear(&o, n, &lw.wo, &lw.bo);
            let mask1 = match dropout.as_deref_mut() {
                Some(rng) if p > 0.0 => {
                    let m = dropout_mask(n * d, p, rng);
                    att.iter_mut().zip(&m).for_each(|(a, m)| *a *= m);
                    Some(m)
                }
                _ => None,
            };
            let y1: Vec<f64> = x.iter().zip(&att).map(|(a, b)| a + b).collect();
            let (h1, ln1) = layer_norm(&y1, n, &lw.ln1_gamma, &lw.ln1_beta);
            let f1 = linear(&h1, n, &lw.w1, &lw.b1);
            let r: Vec<f64> = f1.iter().map(|&v| v.max(0.0)).collect();
            let mut f2 = linear(&r, n, &lw.w2, &lw.b2);
            let mask2 = match dropout.as_deref_mut() {
                Some(rng) if p > 0.0 => {
                    let m = dropout_mask(n * d, p, rng);
                    f2.iter_mut().zip(&m).for_each(|(a, m)| *a *= m);
                    Some(m)
                }
                _ => None,
            };
            let y2: Vec<f64> = h1.iter().zip(&f2).map(|(a, b)| a + b).collect();
            let (h2, ln2) = layer_norm(&y2, n, &lw.ln2_gamma, &lw.ln2_beta);
            caches.push(LayerCache {
                x,
                q,
                k,
                v,
                attn,
                o,
                mask1,
                ln1,
                h1,
                f1,
                r,
                mask2,
                ln2,
            });
            h = h2;
        }

        let mut readout = vec![0.0; d + 1];
        for i in 0..n {
            for j in 0..d {
                readout[j] += h[i * d + j];
            }
        }
        readout[..d].iter_mut().for_each(|v| *v /= n as f64);
        readout[d] = (n as f64).ln();
        let z = linear(&readout, 1, &w.head_w, &w.head_b);
        let a: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
        let out = linear(&a, 1, &w.out_w, &w.out_b);
        (
            out,
            ForwardCache {
                n,
                layers: caches,
                readout,
                z,
                a,
            },
        )
    }

    /// Accumulates parameter gradients for one molecule given d(loss)/d(output).
    pub fn backward(&self, g: &GraphInput, cache: &ForwardCache, dout: &[f64], grads: &mut GtWeights) {
        let w = &self.weights;
        let cfg = &self.config;
        let n = cache.n;
        let d = cfg.hidden_dim;
        let heads = cfg.heads;
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();

        let da = linear_backward(&cache.a, 1, &w.out_w, dout, &mut grads.out_w, &mut grads.out_b);
        let dz: Vec<f64> = da.iter().zip(&cache.z).map(|(g, &z)| if z > 0.0 { *g } else { 0.0 }).collect();
        let dread = linear_backward(&cache.readout, 1, &w.head_w, &dz, &mut grads.head_w, &mut grads.head_b);
        let mut dh_out = vec![0.0; n * d];
        for i in 0..n {
            for j in 0..d {
                dh_out[i * d + j] = dread[j] / n as f64;
            }
        }

        for (l, lw) in w.layers.iter().enumerate().rev() {
            let c = &cache.layers[l];
            let gl = &mut grads.layers[l];
            let dy2 = layer_norm_backward(&c.ln2, n, &lw.ln2_gamma, &dh_out, &mut gl.ln2_gamma, &mut gl.ln2_beta);
            let mut dh1 = dy2.clone();
            let mut df2 = dy2;
            if let Some(m) = &c.mask2 {
                df2.iter_mut().zip(m).for_each(|(g, m)| *g *= m);
            }
            let mut dr = linear_backward(&c.r, n, &lw.w2, &df2, &mut gl.w2, &mut gl.b2);
            dr.iter_mut().zip(&c.f1).for_each(|(g, &f)| {
                if f <= 0.0 {
                    *g = 0.0
                }
            });
            let dh1_ffn = linear_backward(&c.h1, n, &lw.w1, &dr, &mut gl.w1, &mut gl.b1);
            dh1.iter_mut().zip(&dh1_ffn).for_each(|(a, b)| *a += b);
            let dy1 = layer_norm_backward(&c.ln1, n, &lw.ln1_gamma, &dh1, &mut gl.ln1_gamma, &mut gl.ln1_beta);
            let mut dx = dy1.clone();
            let mut datt = dy1;
            if let Some(m) = &c.mask1 {
                datt.iter_mut().zip(m).for_each(|(g, m)| *g *= m);
            }
            let d_o = linear_backward(&c.o, n, &lw.wo, &datt, &mut gl.wo, &mut gl.bo);

            let mut dq = vec![0.0; n * d];
            let mut dk = vec![0.0; n * d];
            let mut dv = vec![0.0; n * d];
            let mut dattn = Vec::new();
            for hd in 0..heads {
                let off = hd * dh;
                for i in 0..n {
                    let row = &c.attn[(hd * n + i) * n..(hd * n + i + 1) * n];
                    let doi = &d_o[i * d + off..i * d + off + dh];
                    dattn.clear();
                    let mut weighted = 0.0;
                    for &j in &g.neighbors[i] {
                        let vj = &c.v[j * d + off..j * d + off + dh];
                        let d_a: f64 = doi.iter().zip(vj).map(|(a, b)| a * b).sum();
                        weighted += row[j] * d_a;
                        dattn.push(d_a);
                        for (g, &o) in dv[j * d + off..j * d + off + dh].iter_mut().zip(doi) {
                            *g += row[j] * o;
                        }
                    }
                    for (&j, &d_a) in g.neighbors[i].iter().zip(&dattn) {
                        let ds = row[j] * (d_a - weighted) * scale;
                        if ds == 0.0 {
                            continue;
                        }
                        for t in 0..dh {
                            dq[i * d + off + t] += ds * c.k[j * d + off + t];
                            dk[j * d + off + t] += ds * c.q[i * d + off + t];
                        }
                    }
                }
            }
            for (dproj, wm, gw, gb) in [
                (&dq, &lw.wq, &mut gl.wq, &mut gl.bq),
                (&dk, &lw.wk, &mut gl.wk, &mut gl.bk),
                (&dv, &lw.wv, &mut gl.wv, &mut gl.bv),
            ] {
                let dxp = linear_backward(&c.x, n, wm, dproj, gw, gb);
                dx.iter_mut().zip(&dxp).for_each(|(a, b)| *a += b);
            }
            dh_out = dx;
        }
        linear_backward(&g.features, n, &w.embed_w, &dh_out, &mut grads.embed_w, &mut grads.embed_b);
    }
}
