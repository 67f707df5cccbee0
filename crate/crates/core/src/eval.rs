//! Model selection and evaluation: k-fold grid search, RMSE metrics with
//! the worst-decile variant, and Welch's two-sample t-test.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::features::LabeledSample;
use crate::seeds;
use crate::svr::{
    assemble_model, solve_dual, FeatureScaling, Gram, SolverOpts, SvrKernel, SvrModel, SvrParams,
};

/// Cross-validated score of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvEntry {
    pub params: SvrParams,
    pub mean_rmse: f64,
}

/// Grid-search result: the winning parameters plus the full CV table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: SvrParams,
    pub table: Vec<CvEntry>,
}

/// Estimation metrics over a test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rmse: f64,
    /// RMSE over the decile of test samples with the largest absolute
    /// error (the worst-case metric).
    pub worst10_rmse: f64,
    pub per_material_rmse: BTreeMap<String, f64>,
    /// Welch t statistic against the reference method, when compared.
    pub t_stat: Option<f64>,
    /// Two-sided p-value of that comparison.
    pub p_value: Option<f64>,
    pub n_test: usize,
}

fn rmse_of(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

/// Evaluate a trained model: overall RMSE, worst-decile RMSE, and the
/// per-material breakdown. Predictions are clamped to [0, 1] by the model.
pub fn evaluate(model: &SvrModel, test_set: &[LabeledSample]) -> Result<MetricsReport> {
    if test_set.is_empty() {
        return Err(Error::Config("evaluate: empty test set".into()));
    }
    let mut errors = Vec::with_capacity(test_set.len());
    let mut by_material: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for sample in test_set {
        let e = model.predict(&sample.feature)? - sample.label_s;
        errors.push(e);
        by_material
            .entry(sample.material.clone())
            .or_default()
            .push(e);
    }
    let rmse = rmse_of(&errors);
    let mut abs: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
    abs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let k = ((test_set.len() as f64) * 0.1).ceil() as usize;
    let worst10_rmse = rmse_of(&abs[..k.max(1).min(abs.len())]);
    let per_material_rmse = by_material
        .into_iter()
        .map(|(m, es)| (m, rmse_of(&es)))
        .collect();
    Ok(MetricsReport {
        rmse,
        worst10_rmse,
        per_material_rmse,
        t_stat: None,
        p_value: None,
        n_test: test_set.len(),
    })
}

/// Absolute prediction errors of a model over a sample set.
pub fn abs_errors(model: &SvrModel, samples: &[LabeledSample]) -> Result<Vec<f64>> {
    samples
        .iter()
        .map(|s| Ok((model.predict(&s.feature)? - s.label_s).abs()))
        .collect()
}

/// Welch's unequal-variance two-sample t-test (two-sided, unpaired).
pub fn welch_t_test(sample_a: &[f64], sample_b: &[f64]) -> Result<(f64, f64)> {
    if sample_a.len() < 2 || sample_b.len() < 2 {
        return Err(Error::Config(
            "welch t-test needs at least 2 observations per sample".into(),
        ));
    }
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let var = |x: &[f64], m: f64| {
        x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
    };
    let (ma, mb) = (mean(sample_a), mean(sample_b));
    let (va, vb) = (var(sample_a, ma), var(sample_b, mb));
    let (na, nb) = (sample_a.len() as f64, sample_b.len() as f64);
    let sa = va / na;
    let sb = vb / nb;
    let se2 = sa + sb;
    if se2 <= 0.0 {
        return Err(Error::Config(
            "welch t-test degenerate: both samples have zero variance".into(),
        ));
    }
    let t = (ma - mb) / se2.sqrt();
    // Welch-Satterthwaite degrees of freedom.
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::Config(format!("t-distribution: {e}")))?;
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok((t, p.clamp(0.0, 1.0)))
}

/// Ordinary least-squares R^2 of y against x.
pub fn linear_fit_r2(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    (sxy * sxy) / (sxx * syy)
}

/// Canonical dataset order: (material, trial, step). Fold assignment is
/// performed after this sort, so shuffling input rows cannot change the
/// selected parameters.
fn canonical_order(samples: &[LabeledSample]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    idx.sort_by(|&a, &b| {
        let sa = &samples[a];
        let sb = &samples[b];
        (&sa.material, sa.trial_id, sa.step).cmp(&(&sb.material, sb.trial_id, sb.step))
    });
    idx
}

/// K-fold cross-validated grid search over SVR hyperparameters.
///
/// Returns the grid point minimizing mean validation RMSE; ties break
/// toward smaller C, then larger epsilon. The Gram matrix is rebuilt once
/// per (fold, kernel) and shared across the C/epsilon sweep.
pub fn grid_search(
    dataset: &[LabeledSample],
    grid: &[SvrParams],
    folds: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    if grid.is_empty() {
        return Err(Error::Config("grid search: empty grid".into()));
    }
    if folds < 2 {
        return Err(Error::Config("grid search: folds must be >= 2".into()));
    }
    if folds > dataset.len() {
        return Err(Error::Config(format!(
            "grid search: {folds} folds exceed {} samples",
            dataset.len()
        )));
    }
    for p in grid {
        p.validate()?;
    }

    let mut order = canonical_order(dataset);
    let mut rng = seeds::rng(seed, &[0xCF]);
    order.shuffle(&mut rng);

    // Distinct kernels in the grid, preserving first-seen order.
    let mut kernels: Vec<SvrKernel> = Vec::new();
    for p in grid {
        if !kernels.contains(&p.kernel) {
            kernels.push(p.kernel);
        }
    }

    let mut sums = vec![0.0f64; grid.len()];
    for fold in 0..folds {
        let val_idx: Vec<usize> = order
            .iter()
            .copied()
            .skip(fold)
            .step_by(folds)
            .collect();
        let train_idx: Vec<usize> = order
            .iter()
            .copied()
            .enumerate()
            .filter(|(i, _)| i % folds != fold)
            .map(|(_, v)| v)
            .collect();

        let train_features: Vec<Vec<f64>> =
            train_idx.iter().map(|&i| dataset[i].feature.clone()).collect();
        let train_labels: Vec<f64> = train_idx.iter().map(|&i| dataset[i].label_s).collect();
        let scaling = FeatureScaling::fit(&train_features);
        let train_scaled: Vec<Vec<f64>> =
            train_features.iter().map(|f| scaling.transform(f)).collect();
        let val_scaled: Vec<Vec<f64>> = val_idx
            .iter()
            .map(|&i| scaling.transform(&dataset[i].feature))
            .collect();
        let val_labels: Vec<f64> = val_idx.iter().map(|&i| dataset[i].label_s).collect();

        for kernel in &kernels {
            let gram = Gram::compute(kernel, &train_scaled);
            // Kernel rows between validation and training points.
            let cross: Vec<Vec<f64>> = val_scaled
                .iter()
                .map(|v| train_scaled.iter().map(|t| kernel.eval(v, t)).collect())
                .collect();
            for (gi, p) in grid.iter().enumerate() {
                if p.kernel != *kernel {
                    continue;
                }
                let sol = solve_dual(&gram, &train_labels, p.c, p.epsilon, &SolverOpts::default());
                let mut se = 0.0;
                for (row, &label) in cross.iter().zip(&val_labels) {
                    let f: f64 = row.iter().zip(&sol.coefs).map(|(k, d)| k * d).sum::<f64>()
                        + sol.bias;
                    let e = f.clamp(0.0, 1.0) - label;
                    se += e * e;
                }
                sums[gi] += (se / val_labels.len().max(1) as f64).sqrt();
            }
        }
    }

    let table: Vec<CvEntry> = grid
        .iter()
        .zip(&sums)
        .map(|(p, s)| CvEntry {
            params: *p,
            mean_rmse: s / folds as f64,
        })
        .collect();
    let best = table
        .iter()
        .min_by(|a, b| {
            (a.mean_rmse, a.params.c, -a.params.epsilon)
                .partial_cmp(&(b.mean_rmse, b.params.c, -b.params.epsilon))
                .unwrap()
        })
        .unwrap()
        .params;
    Ok(GridSearchResult { best, table })
}

/// Convenience: grid-search, then fit the winning parameters on the full
/// dataset.
pub fn fit_best(
    dataset: &[LabeledSample],
    grid: &[SvrParams],
    folds: usize,
    seed: u64,
) -> Result<(SvrModel, GridSearchResult)> {
    let search = grid_search(dataset, grid, folds, seed)?;
    let features: Vec<Vec<f64>> = dataset.iter().map(|s| s.feature.clone()).collect();
    let labels: Vec<f64> = dataset.iter().map(|s| s.label_s).collect();
    let scaling = FeatureScaling::fit(&features);
    let scaled: Vec<Vec<f64>> = features.iter().map(|f| scaling.transform(f)).collect();
    let gram = Gram::compute(&search.best.kernel, &scaled);
    let sol = solve_dual(
        &gram,
        &labels,
        search.best.c,
        search.best.epsilon,
        &SolverOpts::default(),
    );
    Ok((assemble_model(&scaled, &sol, search.best, scaling), search))
}
