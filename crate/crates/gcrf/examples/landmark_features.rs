//! Similarity registration of a landmark sequence: every frame is mapped
//! onto a reference shape, removing camera scale, rotation and translation,
//! then flattened into solver-ready feature rows.

use gcrf::landmarks::{
    alignment_residual, build_feature_matrix, mean_reference, similarity_align, LandmarkFrame,
    SimilarityTransform,
};
use nalgebra::{Matrix2, Vector2};

/// A 68-point closed curve standing in for a tracked face shape.
fn base_shape() -> LandmarkFrame {
    let points = (0..68)
        .map(|i| {
            let t = i as f64 / 68.0 * std::f64::consts::TAU;
            [
                320.0 + 100.0 * t.cos() + 6.0 * (4.0 * t).sin(),
                240.0 + 80.0 * t.sin() + 5.0 * (2.0 * t).cos() + 0.4 * i as f64,
            ]
        })
        .collect();
    LandmarkFrame::new(0, points).expect("valid shape")
}

fn main() {
    let base = base_shape();
    // a "video": the base shape drifting in pose, scale and position
    let sequence: Vec<LandmarkFrame> = (0..8)
        .map(|k| {
            let a = 0.12 * k as f64;
            let xf = SimilarityTransform {
                scale: 1.0 + 0.08 * k as f64,
                rotation: Matrix2::new(a.cos(), -a.sin(), a.sin(), a.cos()),
                translation: Vector2::new(6.0 * k as f64, -4.0 * k as f64),
            };
            let mut frame = xf.apply(&base);
            frame.frame_id = k;
            frame
        })
        .collect();

    let reference = mean_reference(&sequence).expect("reference");
    for frame in &sequence {
        let (aligned, xf) = similarity_align(frame, &reference).expect("alignment");
        println!(
            "frame {}: scale {:.3}, residual after alignment {:.3e}",
            frame.frame_id,
            xf.scale,
            alignment_residual(&aligned, &reference)
        );
    }

    let features = build_feature_matrix(&sequence, &reference).expect("features");
    println!(
        "feature matrix: {} frames x {} columns (2 per landmark)",
        features.nrows(),
        features.ncols()
    );
}
