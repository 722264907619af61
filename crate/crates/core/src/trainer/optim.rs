use crate::numerics::{Gradients, Matrix, ParamStore};
use crate::scalar::Scalar;

/// Adam with bias correction. Parameters without a gradient are left untouched.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first: Vec<Matrix<T>>,
    second: Vec<Matrix<T>>,
    steps: u64,
}

impl<T: Scalar> Adam<T> {
    pub fn new(store: &ParamStore<T>) -> Self {
        let zeros = || store.iter().map(|(_, _, m)| Matrix::zeros(m.rows(), m.cols())).collect();
        Adam { beta1: 0.9, beta2: 0.999, epsilon: 1e-8, first: zeros(), second: zeros(), steps: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, store: &mut ParamStore<T>, grads: &Gradients<T>, learning_rate: f64) {
        self.steps += 1;
        let t = self.steps as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (id, g) in grads.iter() {
            let i = id.index();
            let (m, v) = (self.first[i].data_mut(), self.second[i].data_mut());
            let p = store.get_mut(id).data_mut();
            for (k, gk) in g.data().iter().enumerate() {
                let gk = gk.widen();
                let mk = self.beta1 * m[k].widen() + (1.0 - self.beta1) * gk;
                let vk = self.beta2 * v[k].widen() + (1.0 - self.beta2) * gk * gk;
                m[k] = T::narrow(mk);
                v[k] = T::narrow(vk);
                let update = learning_rate * (mk / c1) / ((vk / c2).sqrt() + self.epsilon);
                if update != 0.0 {
                    p[k] = T::narrow(p[k].widen() - update);
                }
            }
        }
    }
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`. Returns the norm before clipping.
pub fn clip_global_norm<T: Scalar>(grads: &mut Gradients<T>, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm {
        grads.scale(T::narrow(max_norm / norm));
    }
    norm
}
