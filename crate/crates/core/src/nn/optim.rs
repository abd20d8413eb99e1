use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::ndcore::{Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 coefficient added to the gradient (`g += wd·θ`) before the moment update.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 1e-4 }
    }
}

/// Bias-corrected Adam with first/second moments mirroring each parameter.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
    t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new<'a>(config: AdamConfig, params: impl IntoIterator<Item = &'a Tensor<T>>) -> Self {
        let (m, v) = params.into_iter().map(|p| (Tensor::zeros(p.shape()), Tensor::zeros(p.shape()))).unzip();
        AdamState { config, m, v, t: 0 }
    }

    pub fn timestep(&self) -> u64 {
        self.t
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.config.lr = lr;
    }

    pub fn step(&mut self, params: Vec<&mut Tensor<T>>, grads: &[Tensor<T>]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Dimension(format!(
                "adam tracks {} tensors, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.t += 1;
        let c = self.config;
        let b1 = T::from_f64(c.beta1);
        let b2 = T::from_f64(c.beta2);
        let one = T::one();
        let wd = T::from_f64(c.weight_decay);
        let lr = T::from_f64(c.lr);
        let eps = T::from_f64(c.eps);
        let bc1 = T::from_f64(1.0 - c.beta1.powi(self.t as i32));
        let bc2 = T::from_f64(1.0 - c.beta2.powi(self.t as i32));

        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(Error::Dimension(format!(
                    "adam: parameter {:?}, gradient {:?}, moment {:?}",
                    p.shape(),
                    g.shape(),
                    m.shape()
                )));
            }
            let (pd, md, vd) = (p.data_mut(), m.data_mut(), v.data_mut());
            for i in 0..pd.len() {
                let gi = g.data()[i] + wd * pd[i];
                md[i] = b1 * md[i] + (one - b1) * gi;
                vd[i] = b2 * vd[i] + (one - b2) * gi * gi;
                let m_hat = md[i] / bc1;
                let v_hat = vd[i] / bc2;
                pd[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            p.check_finite("adam")?;
        }
        Ok(())
    }
}

/// Cosine annealing from `base_lr` to `eta_min` over `total_epochs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LrSchedule {
    pub base_lr: f64,
    pub eta_min: f64,
    pub total_epochs: usize,
}

impl Default for LrSchedule {
    /// Base and floor are both 1e-3, which makes the schedule constant.
    fn default() -> Self {
        LrSchedule { base_lr: 1e-3, eta_min: 1e-3, total_epochs: 300 }
    }
}

impl LrSchedule {
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let total = self.total_epochs.max(1) as f64;
        self.eta_min + 0.5 * (self.base_lr - self.eta_min) * (1.0 + (PI * epoch as f64 / total).cos())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_decay(lr: f64) -> AdamConfig {
        AdamConfig { lr, weight_decay: 0.0, ..AdamConfig::default() }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = Tensor::<f64>::from_f64(&[3], &[1., -2., 3.]).unwrap();
        let before = p.clone();
        let mut adam = AdamState::new(no_decay(1e-3), [&p]);
        adam.step(vec![&mut p], &[Tensor::zeros(&[3])]).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut p = Tensor::<f64>::zeros(&[4]);
        let g = Tensor::from_f64(&[4], &[0.3, -2.0, 1e-2, -7.0]).unwrap();
        let mut adam = AdamState::new(no_decay(1e-3), [&p]);
        adam.step(vec![&mut p], std::slice::from_ref(&g)).unwrap();
        for (pi, gi) in p.data().iter().zip(g.data()) {
            assert!((pi + 1e-3 * gi.signum()).abs() < 1e-9);
        }
    }

    #[test]
    fn first_step_is_scale_invariant() {
        let g = Tensor::<f64>::from_f64(&[3], &[0.05, -0.4, 2.0]).unwrap();
        let run = |scale: f64| {
            let mut p = Tensor::<f64>::zeros(&[3]);
            let mut adam = AdamState::new(no_decay(1e-3), [&p]);
            adam.step(vec![&mut p], &[g.scale(scale)]).unwrap();
            p
        };
        let (p1, p10) = (run(1.0), run(10.0));
        for ((a, b), gi) in p1.data().iter().zip(p10.data()).zip(g.data()) {
            // Only ε separates the two updates: |Δ| ≤ lr·ε/|g|.
            assert!((a - b).abs() <= 1e-3 * 1e-8 / gi.abs());
        }
    }

    #[test]
    fn weight_decay_is_coupled_into_gradient() {
        let mut p = Tensor::<f64>::from_f64(&[1], &[2.0]).unwrap();
        let cfg = AdamConfig { weight_decay: 0.5, ..no_decay(0.1) };
        let mut adam = AdamState::new(cfg, [&p]);
        // g = 0 + 0.5·2 = 1 → first step moves by lr·sign(1).
        adam.step(vec![&mut p], &[Tensor::zeros(&[1])]).unwrap();
        assert!((p.data()[0] - 1.9).abs() < 1e-8);
    }

    #[test]
    fn repeated_runs_are_bit_identical() {
        let run = || {
            let mut p = Tensor::<f32>::from_f64(&[2], &[0.1, 0.2]).unwrap();
            let mut adam = AdamState::new(AdamConfig::default(), [&p]);
            for i in 0..50 {
                let g = Tensor::from_f64(&[2], &[(i as f64).sin(), (i as f64 * 0.3).cos()]).unwrap();
                adam.step(vec![&mut p], &[g]).unwrap();
            }
            p
        };
        assert_eq!(run().data(), run().data());
    }

    #[test]
    fn schedule_values() {
        let s = LrSchedule::default();
        assert_eq!(s.lr_at(0), 1e-3);
        assert_eq!(s.lr_at(150), 1e-3);
        assert_eq!(s.lr_at(300), 1e-3);
        let s = LrSchedule { base_lr: 1e-3, eta_min: 1e-5, total_epochs: 300 };
        assert!((s.lr_at(0) - 1e-3).abs() < 1e-18);
        assert!((s.lr_at(300) - 1e-5).abs() < 1e-18);
        assert!((s.lr_at(150) - (1e-5 + 0.5 * (1e-3 - 1e-5))).abs() < 1e-15);
    }
}
