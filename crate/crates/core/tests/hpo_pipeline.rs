use hpo_core::hpo::{
    analytic_gradient, fit_baseline, fit_residual, fit_residual_audited, generate_probes, mse_loss, run_hpo, HpoConfig,
    ProbeRecord,
};
use hpo_core::mask::{materialize, MaskSpec};
use hpo_core::noise::{edge_block_ptm, synthesize, GroundTruth, NoiseParams, SeededStream};
use hpo_core::ptm::{effective_ptm, Coo, SparsePtm, TopologyGraph};

fn params(residual: f64) -> NoiseParams {
    NoiseParams {
        p_depol: 0.02,
        gamma_ad: 0.02,
        theta_zz: 0.2,
        residual_magnitude: residual,
        seed: 7,
        ..NoiseParams::default()
    }
}

fn residual_model(frozen: &SparsePtm, values: &[Coo]) -> SparsePtm {
    let mask = materialize(&MaskSpec::residual(frozen.num_qubits())).unwrap();
    effective_ptm(frozen, values, &mask).unwrap()
}

#[test]
fn gradient_matches_central_differences() {
    for n in [3, 4] {
        let truth = synthesize(&TopologyGraph::chain(n).unwrap(), &params(0.02)).unwrap();
        let mask = materialize(&MaskSpec::residual(n)).unwrap();
        let probes = generate_probes(&truth.channel, &mask, 8, 3, 0.0).unwrap();
        let all: Vec<ProbeRecord> = probes.training.iter().chain(&probes.validation).cloned().collect();

        // evaluate away from the optimum so every gradient is nonzero
        let mut rng = SeededStream::new(99);
        let point: Vec<Coo> = mask.pairs().iter().map(|&(i, j)| (i, j, rng.symmetric(0.05))).collect();
        let model = residual_model(&truth.base, &point);
        let grad = analytic_gradient(&model, &all, &mask).unwrap();
        assert_eq!(grad.len(), mask.len());

        let h = 1e-6;
        for _ in 0..60 {
            let p = rng.below(mask.len());
            let mut plus = point.clone();
            plus[p].2 += h;
            let mut minus = point.clone();
            minus[p].2 -= h;
            let lp = mse_loss(&residual_model(&truth.base, &plus), &all).unwrap();
            let lm = mse_loss(&residual_model(&truth.base, &minus), &all).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let rel = (grad[p].2 - fd).abs() / grad[p].2.abs().max(fd.abs());
            assert!(rel < 1e-5, "n={n} coord {:?}: analytic {} fd {fd} rel {rel}", mask.pairs()[p], grad[p].2);
        }
    }
}

#[test]
fn baseline_reaches_machine_precision() {
    let truth = edge_block_ptm(&params(0.0)).unwrap();
    let fit = fit_baseline(&truth, &HpoConfig::default()).unwrap();
    assert!(fit.trace.final_mse <= 1e-12, "{}", fit.trace.final_mse);
    assert!(fit.trace.converged);
    assert!(fit.validation_mse.unwrap() <= 1e-10);
}

#[test]
fn loss_descends_over_fifty_epoch_windows() {
    let config = HpoConfig { convergence_threshold: 1e-24, ..HpoConfig::default() };
    let truth = edge_block_ptm(&params(0.0)).unwrap();
    let fit = fit_baseline(&truth, &config).unwrap();
    let rows = &fit.trace.rows;
    assert!(rows.len() > 200);
    for t in 100..rows.len().saturating_sub(50) {
        assert!(rows[t + 50].mse <= rows[t].mse, "epoch {t}: {} -> {}", rows[t].mse, rows[t + 50].mse);
    }
}

#[test]
fn residual_stage_recovers_injection_and_keeps_frozen() {
    let truth = synthesize(&TopologyGraph::chain(3).unwrap(), &params(0.02)).unwrap();
    assert!(!truth.residual.is_empty());
    let frozen_before = truth.base.clone();
    let config = HpoConfig { convergence_threshold: 1e-16, ..HpoConfig::default() };
    let fit = fit_residual(&truth.channel, &truth.base, 3, &config).unwrap();
    assert_eq!(truth.base, frozen_before);
    for &(i, j, v) in &truth.residual {
        let got = fit.model.delta_at(i, j) - truth.base.delta_at(i, j);
        assert!((got - v).abs() <= 1e-6, "({i},{j}) {got} vs {v}");
    }
    assert!(fit.validation_mse.unwrap() <= 1e-10);
    assert_eq!(fit.active_parameters, 1485);
}

#[test]
fn zero_residual_truth_gives_zero_residual() {
    let truth = synthesize(&TopologyGraph::chain(3).unwrap(), &params(0.0)).unwrap();
    let fit = fit_residual(&truth.channel, &truth.base, 3, &HpoConfig::default()).unwrap();
    assert!(fit.trace.final_mse <= 1e-12);
    assert!(fit.residual.iter().all(|c| c.2.abs() < 1e-6));
}

#[test]
fn audit_sees_only_mask_coordinates() {
    let truth = synthesize(&TopologyGraph::chain(3).unwrap(), &params(0.02)).unwrap();
    let config = HpoConfig { convergence_threshold: 0.0, epochs: 600, ..HpoConfig::default() };
    let mut calls = 0;
    let mut audit = |_epoch: usize, mask: &hpo_core::mask::MaskSet, values: &[f64]| {
        calls += 1;
        assert_eq!(values.len(), mask.len());
        let coords: Vec<Coo> = mask.pairs().iter().zip(values).map(|(&(i, j), &v)| (i, j, v)).collect();
        let model = effective_ptm(&truth.base, &coords, mask).unwrap();
        for &(i, j, d) in model.delta() {
            if !mask.contains(i, j) {
                assert_eq!(d.to_bits(), truth.base.delta_at(i, j).to_bits());
            }
        }
        for &(i, j, d) in truth.base.delta() {
            if !mask.contains(i, j) {
                assert_eq!(model.delta_at(i, j).to_bits(), d.to_bits());
            }
        }
    };
    fit_residual_audited(&truth.channel, &truth.base, 3, &config, &mut audit).unwrap();
    assert_eq!(calls, 7);
}

#[test]
fn pipeline_without_residual_leaves_stage_two_empty() {
    let truth = synthesize(&TopologyGraph::chain(3).unwrap(), &params(0.0)).unwrap();
    let run = run_hpo(&truth, &HpoConfig::default()).unwrap();
    let norm = run.residual.as_ref().unwrap().residual.iter().map(|c| c.2 * c.2).sum::<f64>().sqrt();
    assert!(norm <= 1e-6, "{norm}");
    assert!(run.model.max_abs_diff(&truth.channel).unwrap() < 1e-5);
}

#[test]
fn pipeline_identity_and_five_qubit_count() {
    let graph = TopologyGraph::chain(5).unwrap();
    let run = run_hpo(&GroundTruth::identity(&graph).unwrap(), &HpoConfig::default()).unwrap();
    assert!(run.model.is_identity());
    assert_eq!(run.active_parameters, 39123);
    assert_eq!(run.traces().len(), 5);
}

#[test]
fn runs_are_deterministic() {
    let truth = synthesize(&TopologyGraph::chain(3).unwrap(), &params(0.02)).unwrap();
    let config = HpoConfig { seed: 5, observation_noise: 1e-4, ..HpoConfig::default() };
    let a = run_hpo(&truth, &config).unwrap();
    let b = run_hpo(&truth, &config).unwrap();
    assert_eq!(a, b);
    let bits = |run: &hpo_core::hpo::HpoRun| -> Vec<u64> { run.model.delta().iter().map(|c| c.2.to_bits()).collect() };
    assert_eq!(bits(&a), bits(&b));
}
