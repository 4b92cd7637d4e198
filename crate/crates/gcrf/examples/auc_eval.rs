//! Frame-level detection scoring: fit a model, predict the first output
//! channel on held-out inputs and measure the area under the ROC curve
//! against the thresholded truth.

use gcrf::datagen::{sample_dataset, sample_ground_truth};
use gcrf::eval::roc_auc;
use gcrf::{compute_stats, fit_admm, predict, SolverConfig};

fn main() {
    let gt = sample_ground_truth(5, 2, 1.0, 0.8, 3).expect("ground truth");
    let train = sample_dataset(&gt, 4000, 10).expect("train data");
    let test = sample_dataset(&gt, 2000, 11).expect("test data");

    let stats = compute_stats(&train).expect("stats");
    let fit = fit_admm(&stats, &SolverConfig::default(), None).expect("fit");
    println!(
        "fit: {} iterations, converged = {}",
        fit.iterations, fit.converged
    );

    // score = predicted first channel; label = observed channel above zero
    let mut scores = Vec::with_capacity(test.len());
    let mut labels = Vec::with_capacity(test.len());
    for i in 0..test.len() {
        let x = test.x().row(i).transpose();
        let y_hat = predict(&fit.params, &x).expect("predict");
        scores.push(y_hat[0]);
        labels.push(test.y()[(i, 0)] > 0.0);
    }
    let auc = roc_auc(&scores, &labels).expect("both classes present");
    println!(
        "held-out frame-level auc = {auc:.4} over {} samples",
        test.len()
    );
}
