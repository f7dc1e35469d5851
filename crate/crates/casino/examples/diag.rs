// scratch diagnostics for tuning the synthetic generator defaults
use std::time::Instant;

use casino::pipeline::{train, PipelineConfig, SplitSel};
use casino::predictor::Variant;
use casino::synth::{generate, SynthConfig};

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va.sqrt() * vb.sqrt())
}

fn main() {
    let t0 = Instant::now();
    let cfg = SynthConfig::default();
    let (dataset, truth) = generate(&cfg).unwrap();
    eprintln!("generate: {:?}", t0.elapsed());
    eprintln!(
        "events {} rsvps {}",
        dataset.events().len(),
        dataset.rsvps().len()
    );
    eprintln!(
        "influence raw: mean {:.3} std {:.3} max {:.3}",
        truth.influence_mean,
        truth.influence_std,
        truth
            .records
            .iter()
            .map(|r| r.influence_raw)
            .fold(f64::MIN, f64::max)
    );
    let ps: Vec<f64> = truth.records.iter().map(|r| r.realized_p).collect();
    let mean_p = ps.iter().sum::<f64>() / ps.len() as f64;
    let var_p = ps.iter().map(|p| (p - mean_p).powi(2)).sum::<f64>() / ps.len() as f64;
    eprintln!("P: mean {:.3} var {:.4}", mean_p, var_p);
    let ctx_var = {
        let c: Vec<f64> = truth.records.iter().map(|r| r.contextual_part).collect();
        let m = c.iter().sum::<f64>() / c.len() as f64;
        c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / c.len() as f64
    };
    let noise_var = {
        let c: Vec<f64> = truth.records.iter().map(|r| r.noise_total).collect();
        let m = c.iter().sum::<f64>() / c.len() as f64;
        c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / c.len() as f64
    };
    eprintln!("ctx var {:.4} | noise_total var {:.4}", ctx_var, noise_var);
    // feature stds from plant pass
    for (i, (m, s)) in truth
        .feature_means
        .iter()
        .zip(&truth.feature_stds)
        .enumerate()
    {
        if truth.feature_weights[i] != 0.0 {
            eprintln!("  feat {i}: mean {m:.4} std {s:.4} w {}", truth.feature_weights[i]);
        }
    }

    let t1 = Instant::now();
    let pcfg = PipelineConfig::default();
    let (ctx, report) = train(&dataset, &pcfg).unwrap();
    eprintln!("train: {:?}", t1.elapsed());
    eprintln!(
        "residual fit: alpha {:.4} beta {:.4} ls {:.4} lc {:.4} ratio {:.3} converged {} iters {}",
        ctx.bundle.residual.params.alpha,
        ctx.bundle.residual.params.beta,
        ctx.bundle.residual.params.lambda_same,
        ctx.bundle.residual.params.lambda_cross,
        ctx.bundle.residual.params.lambda_same / ctx.bundle.residual.params.lambda_cross,
        ctx.bundle.residual.converged,
        ctx.bundle.residual.iterations,
    );
    eprintln!("train_r2: {:?}", report.train_r2);
    let t2 = Instant::now();
    for variant in Variant::ALL {
        let rep = ctx.evaluate(SplitSel::Test, variant).unwrap();
        eprintln!("test {}: r2 {:.4}", rep.variant, rep.r2);
    }
    eprintln!("evaluate: {:?}", t2.elapsed());

    // correlation of pipeline влияние vs planted influence part on test events
    let test = &ctx.test;
    let mut pipeline_influence = Vec::new();
    let mut planted = Vec::new();
    for ev in 0..test.events().len() {
        let structure = casino::influence::build_event_influence(
            test,
            ev,
            &ctx.train,
            &ctx.stats,
            ctx.bundle.residual.params.seed_horizon_secs,
            true,
        );
        pipeline_influence.push(structure.influence(truth.lambda_same, truth.lambda_cross));
        let rec = truth
            .records
            .iter()
            .find(|r| r.event_id == test.events()[ev].event_id)
            .unwrap();
        planted.push(rec.influence_raw);
    }
    eprintln!(
        "pipeline-vs-planted influence pearson: {:.6}",
        pearson(&pipeline_influence, &planted)
    );

    // oracle ceiling: score the true decomposition on the test split
    let mut p_real = Vec::new();
    let mut p_oracle = Vec::new();
    for ev in 0..test.events().len() {
        let rec = truth
            .records
            .iter()
            .find(|r| r.event_id == test.events()[ev].event_id)
            .unwrap();
        p_real.push(rec.realized_p);
        p_oracle.push(truth.alpha + rec.contextual_part + rec.influence_part);
    }
    let oracle_r2 = casino::predictor::r_squared(&p_real, &p_oracle).unwrap();
    eprintln!("oracle ceiling test r2: {:.4}", oracle_r2);

    // direct residual-plant recovery on the training structures
    let structures: Vec<_> = (0..ctx.train.events().len())
        .map(|ev| {
            casino::influence::build_event_influence(
                &ctx.train, ev, &ctx.train, &ctx.stats, 86_400, true,
            )
        })
        .collect();
    let planted_y: Vec<f64> = structures.iter().map(|s| 0.3 + 0.7 * s.influence(1.0, 1.0)).collect();
    let fit = casino::predictor::fit_residual_model(&structures, &planted_y, (1.0, 1.0), 86_400, false)
        .unwrap();
    eprintln!(
        "plant at init recovery: alpha {:.6} beta {:.6} (want 0.3, 0.7)",
        fit.params.alpha, fit.params.beta
    );
    let planted_y2: Vec<f64> = structures
        .iter()
        .map(|s| 0.1 + 0.5 * s.influence(0.45, 0.15))
        .collect();
    let fit2 = casino::predictor::fit_residual_model(&structures, &planted_y2, (1.0, 1.0), 86_400, false)
        .unwrap();
    eprintln!(
        "ratio-3 plant recovery: ls {:.4} lc {:.4} ratio {:.4} beta {:.4} converged {}",
        fit2.params.lambda_same,
        fit2.params.lambda_cross,
        fit2.params.lambda_same / fit2.params.lambda_cross,
        fit2.params.beta,
        fit2.converged
    );
    // contextual learnability probe: fit the tree on the noiseless planted
    // contextual part and score it on the test split
    use std::collections::HashMap;
    let by_id: HashMap<&str, &casino::synth::GroundTruthRecord> = truth
        .records
        .iter()
        .map(|r| (r.event_id.as_str(), r))
        .collect();
    let mk = |ds: &casino::data::Dataset| -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        let mut x = Vec::new();
        let mut ctx_t = Vec::new();
        let mut real = Vec::new();
        for e in ds.events() {
            let rec = by_id[e.event_id.as_str()];
            x.push(rec.features.clone());
            ctx_t.push(rec.contextual_part);
            real.push(rec.realized_p);
        }
        (x, ctx_t, real)
    };
    let (x_tr, ctx_tr, real_tr) = mk(&ctx.train);
    let (x_te, ctx_te, _real_te) = mk(&ctx.test);
    for (md, ml) in [(8, 20), (8, 10), (6, 20), (10, 40), (8, 40)] {
        let params = casino::tree::CartParams { max_depth: md, min_samples_leaf: ml };
        let t_ctx = casino::tree::fit_cart(&x_tr, &ctx_tr, &params).unwrap();
        let pred_te: Vec<f64> = x_te.iter().map(|r| casino::tree::predict_cart(&t_ctx, r)).collect();
        let r2_ctx = casino::predictor::r_squared(&ctx_te, &pred_te).unwrap();
        let t_real = casino::tree::fit_cart(&x_tr, &real_tr, &params).unwrap();
        let pred2: Vec<f64> = x_te.iter().map(|r| casino::tree::predict_cart(&t_real, r)).collect();
        let r2_real_ctx = casino::predictor::r_squared(&ctx_te, &pred2);
        eprintln!(
            "tree({md},{ml}): noiseless-ctx test r2 {:.4}; real-target tree vs ctx trend {:?}",
            r2_ctx, r2_real_ctx.map(|v| (v * 1e4).round() / 1e4)
        );
    }
    // error decomposition on the test split
    let (_, _, real_te2) = mk(&ctx.test);
    let params = casino::tree::CartParams { max_depth: 8, min_samples_leaf: 20 };
    let t_real = casino::tree::fit_cart(&x_tr, &real_tr, &params).unwrap();
    let tree_pred: Vec<f64> = x_te.iter().map(|r| casino::tree::predict_cart(&t_real, r)).collect();
    let mut inf_true = Vec::new();
    let mut ctx_true = Vec::new();
    for e in ctx.test.events() {
        let rec = by_id[e.event_id.as_str()];
        inf_true.push(rec.influence_part);
        ctx_true.push(rec.contextual_part);
    }
    // tree + oracle influence
    let pred1: Vec<f64> = tree_pred.iter().zip(&inf_true).map(|(t, i)| t + i).collect();
    eprintln!(
        "tree + oracle-influence test r2: {:.4}",
        casino::predictor::r_squared(&real_te2, &pred1).unwrap()
    );
    // oracle context + fitted residual
    let fitp = &ctx.bundle.residual.params;
    let mut fitted_resid = Vec::new();
    for ev in 0..ctx.test.events().len() {
        let s = casino::influence::build_event_influence(
            &ctx.test, ev, &ctx.train, &ctx.stats, fitp.seed_horizon_secs, true,
        );
        fitted_resid.push(fitp.alpha + fitp.beta * s.influence(fitp.lambda_same, fitp.lambda_cross));
    }
    let pred2: Vec<f64> = ctx_true
        .iter()
        .zip(&fitted_resid)
        .map(|(c, y)| truth.alpha + c + y - fitp.alpha)
        .collect();
    eprintln!(
        "oracle-ctx + fitted-residual-shape test r2: {:.4}",
        casino::predictor::r_squared(&real_te2, &pred2).unwrap()
    );
    eprintln!(
        "fitted residual vs true influence_part pearson: {:.4}",
        pearson(&fitted_resid, &inf_true)
    );
    // tree-only prediction vs contextual truth
    eprintln!(
        "tree(real targets) vs realized test r2: {:.4}",
        casino::predictor::r_squared(&real_te2, &tree_pred).unwrap()
    );
    eprintln!("total: {:?}", t0.elapsed());
}
