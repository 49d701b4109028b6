use mcla_core::capacity::{alpha_opt, c_hat};
use mcla_core::channel::{sample_channel, ChannelPoint, Symbol};
use mcla_core::density::{
    de_step, iterations_to_target, quantize_channel_pdf, DeConfig, DeEngine, QuantGrid, ThresholdMode, ThresholdSearch,
};
use mcla_core::ensemble::DegreeDistribution;
use mcla_core::llr::LlrModel;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALPHA_STAR: f64 = 2.9634;

fn three_six() -> DegreeDistribution {
    DegreeDistribution::regular(3, 6).unwrap()
}

#[test]
fn optimum_alpha_converges_below_threshold_and_not_above() {
    let model = LlrModel::linear(ALPHA_STAR).unwrap();
    let below = iterations_to_target(&three_six(), &ChannelPoint::rayleigh(0.60).unwrap(), &model, 1e-6, 300).unwrap();
    assert!(below.converged);
    assert!(below.ell_star().unwrap() < 100);
    let above = iterations_to_target(&three_six(), &ChannelPoint::rayleigh(0.70).unwrap(), &model, 1e-6, 300).unwrap();
    assert!(!above.converged);
    assert_eq!(above.ell_star(), None);
}

#[test]
fn quantized_channel_keeps_mean_and_capacity() {
    for sigma in [0.6, 0.7436, 0.9] {
        let point = ChannelPoint::rayleigh(sigma).unwrap();
        let alpha = alpha_opt(sigma, point.fading()).unwrap();
        let q = quantize_channel_pdf(&point, &LlrModel::linear(alpha).unwrap()).unwrap();
        let mean_gain = std::f64::consts::PI.sqrt() / 2.0;
        assert!((q.total() - 1.0).abs() < 1e-12, "mass {}", q.total());
        assert!((q.mean() - alpha * mean_gain).abs() <= q.grid().step(), "σ={sigma}: mean {}", q.mean());
        let exact = c_hat(&point, alpha).unwrap();
        assert!((q.capacity_bits() - exact).abs() < 2e-3, "σ={sigma}: {} vs {exact}", q.capacity_bits());
    }
}

#[test]
fn trajectories_conserve_mass() {
    for sigma in [0.6, 0.66, 0.8] {
        let point = ChannelPoint::rayleigh(sigma).unwrap();
        let channel = quantize_channel_pdf(&point, &LlrModel::linear(ALPHA_STAR).unwrap()).unwrap();
        let traj = DeEngine::standard().run(&three_six(), &channel, &DeConfig::default()).unwrap();
        assert!(traj.max_mass_defect <= 1e-12, "σ={sigma}: {:e}", traj.max_mass_defect);
    }
}

/// Error rate of a sample population, counting zeros as half errors.
fn sample_mer(pop: &[f64]) -> f64 {
    pop.iter().map(|&l| if l < 0.0 { 1.0 } else if l == 0.0 { 0.5 } else { 0.0 }).sum::<f64>() / pop.len() as f64
}

#[test]
fn matches_monte_carlo_density_evolution() {
    // population dynamics on the (3,6) tree with the tanh rule
    let sigma = 0.62;
    let point = ChannelPoint::rayleigh(sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 200_000;
    let channel_sample =
        |rng: &mut ChaCha8Rng| ALPHA_STAR * sample_channel(&point, Symbol::Plus, rng).y;
    let mut v2c: Vec<f64> = (0..n).map(|_| channel_sample(&mut rng)).collect();
    let mut mc = Vec::new();
    for _ in 0..6 {
        let c2v: Vec<f64> = (0..n)
            .map(|_| {
                let prod: f64 = (0..5).map(|_| (v2c[rng.gen_range(0..n)] / 2.0).tanh()).product();
                2.0 * prod.clamp(-1.0 + 1e-15, 1.0 - 1e-15).atanh()
            })
            .collect();
        v2c = (0..n)
            .map(|_| channel_sample(&mut rng) + c2v[rng.gen_range(0..n)] + c2v[rng.gen_range(0..n)])
            .collect();
        mc.push(sample_mer(&v2c));
    }
    let channel = quantize_channel_pdf(&point, &LlrModel::linear(ALPHA_STAR).unwrap()).unwrap();
    let traj = DeEngine::standard()
        .run(&three_six(), &channel, &DeConfig { target_mer: 1e-12, max_iter: 6 })
        .unwrap();
    for (t, (&m, &d)) in mc.iter().zip(&traj.mer).enumerate() {
        let se = (m * (1.0 - m) / n as f64).sqrt();
        assert!((m - d).abs() < 4.0 * se + 0.02 * d, "iteration {}: MC {m} DE {d}", t + 1);
    }
}

#[test]
fn threshold_certificate_replays() {
    let search = ThresholdSearch {
        lo: 0.5,
        hi: 0.8,
        tol: 1e-3,
        ..ThresholdSearch::default()
    };
    let fading = mcla_core::channel::FadingDistribution::RayleighNormalized;
    let result = search.run(&three_six(), &ThresholdMode::LinearMcla, &fading).unwrap();
    assert!(result.certificate.converged.converged);
    assert!(!result.certificate.diverged.converged);
    assert!(result.certificate.diverged.sigma_n - result.certificate.converged.sigma_n <= 1e-3);
    assert_eq!(search.replay(&result, &three_six(), &fading).unwrap(), (true, true));
    // inverted bracket is rejected
    let bad = ThresholdSearch { lo: 0.8, hi: 0.5, ..search };
    assert!(bad.run(&three_six(), &ThresholdMode::LinearMcla, &fading).is_err());
}

#[test]
fn coarse_grid_engine_runs() {
    let grid = QuantGrid::new(255, 25.0).unwrap();
    let point = ChannelPoint::rayleigh(0.6).unwrap();
    let channel = mcla_core::density::quantize_channel_pdf_on(grid, &point, &LlrModel::IdealSi).unwrap();
    let next = de_step(&three_six(), &channel, &channel).unwrap();
    assert!(next.message_error_rate() < channel.message_error_rate());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn one_step_keeps_unit_nonnegative_mass(
        sigma in 0.4f64..0.6,
        dv in 3u32..5,
        extra in 0u32..3,
    ) {
        let dd = DegreeDistribution::regular(dv, 2 * dv + extra).unwrap();
        let point = ChannelPoint::rayleigh(sigma).unwrap();
        let channel = quantize_channel_pdf(&point, &LlrModel::IdealSi).unwrap();
        let next = de_step(&dd, &channel, &channel).unwrap();
        prop_assert!((next.total() - 1.0).abs() < 1e-12);
        prop_assert!(next.masses().iter().all(|&m| m >= 0.0));
    }
}
