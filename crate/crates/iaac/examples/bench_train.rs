use iaac::envs::{Env, HeavenHell};
use iaac::rng::stream;
use rand::Rng;

fn main() {
    let mut env = HeavenHell::new(100);
    let mut rng = stream(0, "walk");
    for cap in [30usize, 50, 100] {
        let (mut heaven, mut hell, mut timeout, mut informed_win) = (0, 0, 0, 0);
        let n = 20_000;
        for _ in 0..n {
            env.reset(&mut rng);
            let mut saw_priest = false;
            let mut outcome = 0i32;
            for _ in 0..cap {
                let out = env.step(rng.gen_range(0..4), &mut rng);
                if out.point.obs[14] == 1.0 || out.point.obs[15] == 1.0 {
                    saw_priest = true;
                }
                if out.terminal {
                    outcome = if out.reward > 0.0 { 1 } else { -1 };
                    break;
                }
            }
            match outcome {
                1 => {
                    heaven += 1;
                    if saw_priest {
                        informed_win += 1;
                    }
                }
                -1 => hell += 1,
                _ => timeout += 1,
            }
        }
        println!(
            "cap={cap}: heaven {:.1}% hell {:.1}% timeout {:.1}% | priest-then-heaven {:.2}%",
            100.0 * heaven as f64 / n as f64,
            100.0 * hell as f64 / n as f64,
            100.0 * timeout as f64 / n as f64,
            100.0 * informed_win as f64 / n as f64
        );
    }
}
