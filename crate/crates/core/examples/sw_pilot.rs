use sbnn_core::calibrate::{calibrate, CalibrationConfig, Critic};
use sbnn_core::copula::A2Params;
use sbnn_core::field::{make_grid, synthesize_target, FieldConfig};
use sbnn_core::model::{ModelConfig, SbnnModel};
use sbnn_core::rng::RngStream;
use sbnn_core::shapiro::shapiro_wilk;
use sbnn_core::stats::{pearson, rmse};

fn main() {
    let grid = make_grid(32).unwrap();
    for seed in [1u64, 2, 3] {
        for theta in [1.5, 6.0] {
            let target = synthesize_target(&grid, &FieldConfig { seed, t_dof: 25.0, noise_scale: 0.25, ..FieldConfig::default() }).unwrap();
            let a2 = A2Params::new(theta).unwrap();
            let mut model = SbnnModel::init(&ModelConfig::default(), &a2, &mut RngStream::new(seed, 16)).unwrap();
            let mut critic = Critic::init(64, &a2, &mut RngStream::new(seed, 17)).unwrap();
            let cfg = CalibrationConfig { iterations: 2000, seed: (theta * 1000.0) as u64 + seed, ..CalibrationConfig::default() };
            calibrate(&target, &mut model, &mut critic, &cfg).unwrap();
            let pred = model.predict(target.grid.coords()).unwrap();
            let resid: Vec<f64> = pred.iter().zip(&target.values).map(|(p, t)| p - t).collect();
            let mut rng = RngStream::new(seed, 18);
            let sample: Vec<f64> = rng.sample_indices(resid.len(), 500).into_iter().map(|i| resid[i]).collect();
            let (w, p) = shapiro_wilk(&sample).unwrap();
            println!("seed {seed} theta {theta}: corr {:.4} rmse {:.4} | SW W={w:.4} p={p:.4}",
                pearson(&pred, &target.values).unwrap(), rmse(&pred, &target.values).unwrap());
        }
    }
}
