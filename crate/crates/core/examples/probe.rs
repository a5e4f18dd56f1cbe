use swarm_mec::{run_training, Mode, SimConfig};

fn main() {
    let mut series = vec![0.0f64; 200];
    for seed in 1..=5u64 {
        let cfg = SimConfig {
            devices: 300,
            slots_per_episode: 50,
            episodes: 200,
            seed,
            ..SimConfig::default()
        };
        let out = run_training(&cfg, Mode::Rldc).unwrap();
        for (i, e) in out.episodes.iter().enumerate() {
            series[i] += e.effi_mean / 5.0;
        }
    }
    for w in [10usize, 20, 30] {
        let wmean: Vec<f64> = (w..=series.len())
            .map(|i| series[i - w..i].iter().sum::<f64>() / w as f64)
            .collect();
        let steps = wmean.len() - 1;
        let up = wmean.windows(2).filter(|p| p[1] >= p[0]).count();
        println!("window {w}: {up}/{steps} non-decreasing = {:.3}", up as f64 / steps as f64);
    }
    println!("first {:?}", &series[..5]);
    println!("last  {:?}", &series[195..]);
}
