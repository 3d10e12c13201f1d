use nsgcca::hsic_sgcca::{fit_hsic_sgcca, rank_one_init, HsicSgccaConfig};
use nsgcca::metrics::joint_label_confusion;
use nalgebra::DVector;
use nsgcca::simulate::{SimModel, SimSpec};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::time::Instant;

fn random_dirs(p: usize, k: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k)
        .map(|_| DVector::from_fn(p, |_, _| rng.sample(StandardNormal)))
        .collect()
}

fn main() {
    for model in [SimModel::Linear, SimModel::Nonlinear] {
        for rep in 0..2u64 {
            let spec = SimSpec::new(model, 30, 100, 5, 7000 + rep);
            let data = spec.generate().unwrap();
            let dirs = random_dirs(30, 3, 42 + rep);
            for (tol, outer) in [(5e-3, 20usize), (1e-6, 100)] {
                for lambda in [1e-4, 1e-2, 1e-1] {
                    let t = Instant::now();
                    let mut cfg = HsicSgccaConfig::new(vec![lambda; 3]);
                    cfg.epsilon_tol = tol;
                    cfg.max_outer = outer;
                    let init = rank_one_init(&data, &dirs).unwrap();
                    let sol = fit_hsic_sgcca(&data, &cfg, Some(init)).unwrap();
                    let r = joint_label_confusion(&sol.selected, 30, 5);
                    println!(
                        "{model:?} rep {rep} tol={tol:<6} outer={outer:<3} lambda={lambda:<6} iters={:<3} conv={} f1={:.3} obj={:.5} {:.2}s",
                        sol.objective_trace.len() - 1,
                        sol.converged,
                        r.f1,
                        sol.objective(),
                        t.elapsed().as_secs_f64()
                    );
                }
            }
        }
    }
}
