use crate::scalar::Scalar;

use super::model::{Grads, Tensor};

/// Adaptive-moment optimizer with bias correction.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    step: i32,
    m: Grads<T>,
    v: Grads<T>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(tensors: &[Tensor<T>], learning_rate: T, beta1: T, beta2: T, epsilon: T) -> Self {
        let zeros: Grads<T> = tensors
            .iter()
            .map(|t| {
                if t.trainable {
                    vec![T::zero(); t.data.len()]
                } else {
                    Vec::new()
                }
            })
            .collect();
        Adam {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    pub fn step(&mut self, tensors: &mut [Tensor<T>], grads: &Grads<T>) {
        self.step += 1;
        let c1 = T::one() - self.beta1.powi(self.step);
        let c2 = T::one() - self.beta2.powi(self.step);
        for (k, t) in tensors.iter_mut().enumerate() {
            if !t.trainable {
                continue;
            }
            let (m, v, g) = (&mut self.m[k], &mut self.v[k], &grads[k]);
            for i in 0..t.data.len() {
                m[i] = self.beta1 * m[i] + (T::one() - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (T::one() - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                t.data[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
    }
}

pub fn global_norm<T: Scalar>(grads: &Grads<T>) -> T {
    grads.iter().flatten().map(|&g| g * g).sum::<T>().sqrt()
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`.
/// Returns the norm before and after clipping.
pub fn clip_global_norm<T: Scalar>(grads: &mut Grads<T>, max_norm: T) -> (T, T) {
    let norm = global_norm(grads);
    if norm > max_norm {
        let scale = max_norm / norm;
        grads.iter_mut().flatten().for_each(|g| *g *= scale);
    }
    (norm, global_norm(grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tensor(data: Vec<f64>) -> Tensor<f64> {
        Tensor {
            name: "w".into(),
            shape: vec![data.len()],
            data,
            trainable: true,
        }
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut ts = vec![
            tensor(vec![1.0, -1.0]),
            Tensor {
                trainable: false,
                ..tensor(vec![5.0])
            },
        ];
        let mut opt = Adam::new(&ts, 0.1, 0.9, 0.999, 1e-8);
        opt.step(&mut ts, &vec![vec![2.0, -0.5], Vec::new()]);
        assert!((ts[0].data[0] - 0.9).abs() < 1e-6);
        assert!((ts[0].data[1] + 0.9).abs() < 1e-6);
        assert_eq!(ts[1].data, [5.0]);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut ts = vec![tensor(vec![3.0, -2.0])];
        let mut opt = Adam::new(&ts, 0.05, 0.9, 0.999, 1e-8);
        for _ in 0..2000 {
            let g = vec![ts[0].data.iter().map(|x| 2.0 * x).collect()];
            opt.step(&mut ts, &g);
        }
        assert!(ts[0].data.iter().all(|x| x.abs() < 1e-3));
    }

    proptest! {
        #[test]
        fn clipping_bounds_norm(gs in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 0..20), 1..5),
                                max in 0.01f64..10.0) {
            let mut grads = gs.clone();
            let (before, after) = clip_global_norm(&mut grads, max);
            prop_assert!(after <= max + 1e-9);
            if before <= max {
                prop_assert_eq!(grads, gs);
            }
        }
    }
}
