//! AdamW with decoupled weight decay and a linear warmup/decay schedule.

use serde::{Deserialize, Serialize};

use crate::tensor::Mat;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub lr: f64,
    pub warmup: usize,
    pub total: usize,
}

impl Schedule {
    /// Rises linearly from 0 at step 0 to `lr` at `warmup`, then falls
    /// linearly to 0 at `total`.
    pub fn lr_at(&self, step: usize) -> f64 {
        if step >= self.total {
            return 0.0;
        }
        if step < self.warmup {
            return self.lr * step as f64 / self.warmup as f64;
        }
        let rest = (self.total - self.warmup).max(1) as f64;
        self.lr * (self.total - step) as f64 / rest
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.01 }
    }
}

/// Moment estimates for one group of tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamW {
    pub config: AdamWConfig,
    pub t: u64,
    m: Vec<Mat>,
    v: Vec<Mat>,
}

impl AdamW {
    pub fn new(config: AdamWConfig, shapes: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let (m, v) = shapes.into_iter().map(|(r, c)| (Mat::zeros(r, c), Mat::zeros(r, c))).unzip();
        AdamW { config, t: 0, m, v }
    }

    /// One update. `decay[k]` says whether tensor `k` gets weight decay.
    pub fn step(&mut self, params: &mut [&mut Mat], grads: &[Mat], decay: &[bool], lr: f64) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        for k in 0..params.len() {
            let (p, g) = (&mut params[k].data, &grads[k].data);
            let (m, v) = (&mut self.m[k].data, &mut self.v[k].data);
            let wd = if decay[k] { c.weight_decay } else { 0.0 };
            for j in 0..p.len() {
                m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
                v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
                let mh = m[j] / bc1;
                let vh = v[j] / bc2;
                p[j] -= lr * (mh / (vh.sqrt() + c.eps) + wd * p[j]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_endpoints() {
        let s = Schedule { lr: 2e-4, warmup: 12_000, total: 165_000 };
        assert_eq!(s.lr_at(0), 0.0);
        assert_eq!(s.lr_at(12_000), 2e-4);
        assert_eq!(s.lr_at(165_000), 0.0);
        assert!((s.lr_at(6_000) - 1e-4).abs() < 1e-18);
        assert!(s.lr_at(100_000) < 2e-4);
    }

    #[test]
    fn zero_warmup_starts_at_peak() {
        let s = Schedule { lr: 1.0, warmup: 0, total: 10 };
        assert_eq!(s.lr_at(0), 1.0);
        assert_eq!(s.lr_at(5), 0.5);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // With bias correction the first update is lr·sign(g) (up to eps).
        let mut p = Mat::from_vec(1, 2, vec![1.0, -1.0]);
        let mut opt = AdamW::new(AdamWConfig { weight_decay: 0.0, ..Default::default() }, [(1, 2)]);
        opt.step(&mut [&mut p], &[Mat::from_vec(1, 2, vec![0.3, -5.0])], &[true], 0.1);
        assert!((p.data[0] - 0.9).abs() < 1e-6);
        assert!((p.data[1] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn decay_is_decoupled() {
        let mut p = Mat::from_vec(1, 1, vec![2.0]);
        let mut q = Mat::from_vec(1, 1, vec![2.0]);
        let mut opt = AdamW::new(AdamWConfig { weight_decay: 0.5, ..Default::default() }, [(1, 1), (1, 1)]);
        opt.step(&mut [&mut p, &mut q], &[Mat::zeros(1, 1), Mat::zeros(1, 1)], &[true, false], 0.1);
        assert!((p.data[0] - 1.9).abs() < 1e-12);
        assert_eq!(q.data[0], 2.0);
    }
}
