use sbnn_core::calibrate::{train_critic_only, Critic};
use sbnn_core::copula::A2Params;
use sbnn_core::rng::RngStream;
use sbnn_core::stats::{mean, wasserstein1_exact};

fn main() {
    let t0 = std::time::Instant::now();
    let a2 = A2Params::new(2.0).unwrap();
    let mut rng = RngStream::new(0, 0);
    let mut critic = Critic::init(64, &a2, &mut rng).unwrap();
    let a: Vec<f64> = (0..1024).map(|_| rng.next_f64()).collect();
    let b: Vec<f64> = a.iter().map(|v| v + 0.5).collect();
    let mut interp = RngStream::new(0, 1);
    train_critic_only(&mut critic, &a, &b, 500, 1e-3, 10.0, &mut interp).unwrap();
    let exact = wasserstein1_exact(&a, &b).unwrap();
    let est = mean(&critic.score(&b).unwrap()) - mean(&critic.score(&a).unwrap());
    println!("exact {exact:.4}, estimate {est:.4}, rel {:.4}, in {:.1} s",
        (est - exact).abs() / exact, t0.elapsed().as_secs_f64());
}
