use fuzzypose::filter::*;
use fuzzypose::se3::Twist;
use fuzzypose::sim::*;
use fuzzypose::tuning::*;
use rand::SeedableRng;

fn run_const(k_op: f64, gamma: f64, seed: u64) -> (f64, f64, f64, f64) {
    let scenario = ScenarioConfig::reference(seed);
    let gains = FilterGains {
        gamma,
        landmark_weights: vec![],
        vector_weights: vec![],
        use_normalized_vectors: false,
        gain: GainMode::Constant(k_op),
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut truth = TrueState::initial();
    let mut state = FilterState::new(reference_initial_estimate(), Twist::zero());
    let (mut etr, mut ess, mut ma, mut mp) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..=1500 {
        let t = i as f64 * 0.01;
        let frame = gen_measurements(&truth, &scenario, &mut rng).unwrap();
        let (rt, pt) = fuzzypose::se3::pose_error(&truth.pose, &state.pose);
        let att = fuzzypose::se3::attitude_error_norm(&rt);
        let pos = pt.norm();
        let v = att + 0.2 * pos;
        if t <= 1.0 + 1e-9 { etr += v; }
        if t >= 4.0 - 1e-9 && t <= 14.0 + 1e-9 { ess += v; }
        if t >= 4.0 - 1e-9 { ma = ma.max(att); mp = mp.max(pos); }
        if i < 1500 {
            state = filter_step(&state, &frame, &gains, ErrorSignals { e: 0.0, de: 0.0 }, 0.01);
            truth = step_true_pose(&truth, 0.01);
        }
    }
    (etr, ess, ma, mp)
}

fn main() {
    for gamma in [2.0, 3.0, 5.0, 8.0] {
        println!("== gamma={gamma} (s=1) ==");
        for k_op in [0.0, 5.0, 10.0, 25.0, 50.0, 100.0] {
            let mut conv = 0;
            let (mut etr_s, mut ess_s, mut wp) = (0.0, 0.0, 0.0f64);
            for seed in [301u64, 302, 303, 304, 305, 306] {
                let (etr, ess, ma, mp) = run_const(k_op, gamma, seed);
                etr_s += etr; ess_s += ess; wp = wp.max(mp);
                if ma < 0.1 && mp < 0.5 { conv += 1; }
            }
            println!("  K={:5}: conv {conv}/6 avg e_tr {:8.2} avg e_ss {:8.2} worst pos {:8.3}",
                1.0 + k_op, etr_s / 6.0, ess_s / 6.0, wp);
        }
    }
}
