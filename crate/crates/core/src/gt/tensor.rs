//! Small dense row-major helpers for the transformer's forward and backward passes.

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, v: f64) -> Mat {
        Mat {
            rows,
            cols,
            data: vec![v; rows * cols],
        }
    }

    /// Glorot/Xavier uniform initialization.
    pub fn xavier(rows: usize, cols: usize, rng: &mut impl Rng) -> Mat {
        let a = (6.0 / (rows + cols) as f64).sqrt();
        Mat {
            rows,
            cols,
            data: (0..rows * cols).map(|_| rng.gen_range(-a..a)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// `x (n × w.rows) · w + b` into a new `n × w.cols` buffer.
pub fn linear(x: &[f64], n: usize, w: &Mat, b: &Mat) -> Vec<f64> {
    let (k, m) = (w.rows, w.cols);
    debug_assert_eq!(x.len(), n * k);
    let mut y = Vec::with_capacity(n * m);
    for _ in 0..n {
        y.extend_from_slice(&b.data);
    }
    for i in 0..n {
        let yi = &mut y[i * m..(i + 1) * m];
        for (p, &xv) in x[i * k..(i + 1) * k].iter().enumerate() {
            if xv != 0.0 {
                for (yv, &wv) in yi.iter_mut().zip(&w.data[p * m..(p + 1) * m]) {
                    *yv += xv * wv;
                }
            }
        }
    }
    y
}

/// Accumulates weight and bias gradients of `linear` and returns the input gradient.
pub fn linear_backward(x: &[f64], n: usize, w: &Mat, dy: &[f64], gw: &mut Mat, gb: &mut Mat) -> Vec<f64> {
    let (k, m) = (w.rows, w.cols);
    let mut dx = vec![0.0; n * k];
    for i in 0..n {
        let dyi = &dy[i * m..(i + 1) * m];
        for (g, &d) in gb.data.iter_mut().zip(dyi) {
            *g += d;
        }
        let xi = &x[i * k..(i + 1) * k];
        let dxi = &mut dx[i * k..(i + 1) * k];
        for p in 0..k {
            let wrow = &w.data[p * m..(p + 1) * m];
            let grow = &mut gw.data[p * m..(p + 1) * m];
            let xv = xi[p];
            let mut acc = 0.0;
            for j in 0..m {
                grow[j] += xv * dyi[j];
                acc += wrow[j] * dyi[j];
            }
            dxi[p] = acc;
        }
    }
    dx
}

pub const LN_EPS: f64 = 1e-5;

/// Per-row normalization statistics kept for the backward pass.
pub struct LayerNormCache {
    pub xhat: Vec<f64>,
    pub inv_std: Vec<f64>,
}

pub fn layer_norm(x: &[f64], n: usize, gamma: &Mat, beta: &Mat) -> (Vec<f64>, LayerNormCache) {
    let d = gamma.len();
    let mut y = vec![0.0; n * d];
    let mut xhat = vec![0.0; n * d];
    let mut inv_std = vec![0.0; n];
    for i in 0..n {
        let row = &x[i * d..(i + 1) * d];
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d as f64;
        let s = 1.0 / (var + LN_EPS).sqrt();
        inv_std[i] = s;
        for j in 0..d {
            let h = (row[j] - mean) * s;
            xhat[i * d + j] = h;
            y[i * d + j] = gamma.data[j] * h + beta.data[j];
        }
    }
    (y, LayerNormCache { xhat, inv_std })
}

pub fn layer_norm_backward(
    cache: &LayerNormCache,
    n: usize,
    gamma: &Mat,
    dy: &[f64],
    ggamma: &mut Mat,
    gbeta: &mut Mat,
) -> Vec<f64> {
    let d = gamma.len();
    let mut dx = vec![0.0; n * d];
    let mut dxhat = vec![0.0; d];
    for i in 0..n {
        let xh = &cache.xhat[i * d..(i + 1) * d];
        let dyi = &dy[i * d..(i + 1) * d];
        let (mut mean_d, mut mean_dx) = (0.0, 0.0);
        for j in 0..d {
            ggamma.data[j] += dyi[j] * xh[j];
            gbeta.data[j] += dyi[j];
            dxhat[j] = dyi[j] * gamma.data[j];
            mean_d += dxhat[j];
            mean_dx += dxhat[j] * xh[j];
        }
        mean_d /= d as f64;
        mean_dx /= d as f64;
        for j in 0..d {
            dx[i * d + j] = cache.inv_std[i] * (dxhat[j] - mean_d - xh[j] * mean_dx);
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_matches_hand_product() {
        let w = Mat {
            rows: 2,
            cols: 3,
            data: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        };
        let b = Mat {
            rows: 1,
            cols: 3,
            data: vec![0.5, 0.0, -0.5],
        };
        let y = linear(&[1.0, -1.0, 2.0, 0.0], 2, &w, &b);
        assert_eq!(y, vec![-2.5, -3.0, -3.5, 2.5, 4.0, 5.5]);
    }

    #[test]
    fn layer_norm_rows_are_standardized() {
        let g = Mat::filled(1, 4, 1.0);
        let b = Mat::zeros(1, 4);
        let (y, _) = layer_norm(&[1.0, 2.0, 3.0, 4.0], 1, &g, &b);
        let mean: f64 = y.iter().sum::<f64>() / 4.0;
        let var: f64 = y.iter().map(|v| v * v).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.25 / (1.25 + LN_EPS)).abs() < 1e-12);
    }
}
