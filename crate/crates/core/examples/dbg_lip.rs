use nalgebra::DMatrix;
use nsgcca::hsic_sgcca::HsicSgccaState;
use nsgcca::simulate::{SimModel, SimSpec};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() {
    let spec = SimSpec::new(SimModel::Linear, 30, 100, 5, 7000);
    let data = spec.generate().unwrap();
    let mut state = HsicSgccaState::new(&data).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 0..3 {
        let g0 = state.bpl_gradient(k);
        let bound = state.lipschitz_bound(k);
        let base = state.pi(k).clone();
        let p = base.nrows();
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let mut d = DMatrix::from_fn(p, p, |_, _| {
                let z: f64 = rng.sample(StandardNormal);
                z
            });
            d = (&d + d.transpose()) * 0.5;
            let scale = 1e-4 / d.norm();
            let d = d * scale;
            state.set_pi(k, &base + &d);
            let g1 = state.bpl_gradient(k);
            worst = worst.max((&g1 - &g0).norm() / d.norm());
        }
        state.set_pi(k, base);
        println!("view {k}: eq9 bound {bound:?}, empirical local Lipschitz {worst:.4}");
    }
}
