//! Tracked landmark sequences and least-squares similarity registration.
//!
//! A frame is an ordered list of 2-D points (68 for the usual face layout).
//! Aligning a frame to a reference removes scale, rotation and translation
//! by solving the Procrustes problem restricted to proper rotations — faces
//! should not be mirrored. Aligned frames flatten into feature rows of
//! length `2 * point count` for the solvers.
//!
//! CSV layout: one row per frame, `frame_id, x1, y1, ..., xK, yK`,
//! comma-separated, with an optional single header row beginning `frame_id`.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, Matrix2, Vector2};

use crate::error::{Error, Result};

/// One tracked frame: an identifier plus its ordered 2-D points.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkFrame {
    pub frame_id: i64,
    pub points: Vec<[f64; 2]>,
}

impl LandmarkFrame {
    pub fn new(frame_id: i64, points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Degenerate(
                "a frame needs at least two points".into(),
            ));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("frame {frame_id}")));
        }
        Ok(Self { frame_id, points })
    }

    pub fn centroid(&self) -> [f64; 2] {
        let k = self.points.len() as f64;
        let (sx, sy) = self
            .points
            .iter()
            .fold((0.0, 0.0), |(ax, ay), p| (ax + p[0], ay + p[1]));
        [sx / k, sy / k]
    }
}

/// Scale, proper rotation and translation mapping one shape onto another.
#[derive(Clone, Debug)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: Matrix2<f64>,
    pub translation: Vector2<f64>,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: Matrix2::identity(),
            translation: Vector2::zeros(),
        }
    }

    pub fn apply_point(&self, p: [f64; 2]) -> [f64; 2] {
        let v = self.scale * self.rotation * Vector2::new(p[0], p[1]) + self.translation;
        [v.x, v.y]
    }

    pub fn apply(&self, frame: &LandmarkFrame) -> LandmarkFrame {
        LandmarkFrame {
            frame_id: frame.frame_id,
            points: frame.points.iter().map(|&p| self.apply_point(p)).collect(),
        }
    }
}

/// Sum of squared point distances between two equally sized frames.
pub fn alignment_residual(a: &LandmarkFrame, b: &LandmarkFrame) -> f64 {
    a.points
        .iter()
        .zip(&b.points)
        .map(|(p, q)| {
            let dx = p[0] - q[0];
            let dy = p[1] - q[1];
            dx * dx + dy * dy
        })
        .sum()
}

/// Least-squares similarity registration of `frame` onto `reference`.
///
/// Centers both shapes, accumulates the 2-D cross-correlation
/// `a = Σ <p̃, r̃>`, `b = Σ p̃ × r̃`, and takes the proper rotation with
/// `cos θ ∝ a`, `sin θ ∝ b` and scale `√(a² + b²) / Σ|p̃|²` — the global
/// optimum over all proper similarity transforms.
pub fn similarity_align(
    frame: &LandmarkFrame,
    reference: &LandmarkFrame,
) -> Result<(LandmarkFrame, SimilarityTransform)> {
    if frame.points.len() != reference.points.len() {
        return Err(Error::DimensionMismatch(format!(
            "frame has {} points, reference has {}",
            frame.points.len(),
            reference.points.len()
        )));
    }
    let cf = frame.centroid();
    let cr = reference.centroid();

    let mut a = 0.0;
    let mut b = 0.0;
    let mut var_f = 0.0;
    for (p, r) in frame.points.iter().zip(&reference.points) {
        let px = p[0] - cf[0];
        let py = p[1] - cf[1];
        let rx = r[0] - cr[0];
        let ry = r[1] - cr[1];
        a += px * rx + py * ry;
        b += px * ry - py * rx;
        var_f += px * px + py * py;
    }
    if var_f == 0.0 {
        return Err(Error::Degenerate(
            "frame points are coincident, scale is undefined".into(),
        ));
    }
    let cross = a.hypot(b);
    if cross <= f64::EPSILON * var_f {
        return Err(Error::Degenerate(
            "shapes are uncorrelated, rotation is undefined".into(),
        ));
    }
    let cos = a / cross;
    let sin = b / cross;
    let scale = cross / var_f;
    let rotation = Matrix2::new(cos, -sin, sin, cos);
    let translation = Vector2::new(cr[0], cr[1]) - scale * rotation * Vector2::new(cf[0], cf[1]);
    let transform = SimilarityTransform {
        scale,
        rotation,
        translation,
    };
    Ok((transform.apply(frame), transform))
}

/// Reference shape for a sequence: every frame is aligned to the first
/// frame, then the aligned points are averaged.
pub fn mean_reference(sequence: &[LandmarkFrame]) -> Result<LandmarkFrame> {
    let first = sequence
        .first()
        .ok_or_else(|| Error::Degenerate("empty sequence".into()))?;
    let k = first.points.len();
    let mut acc = vec![[0.0f64; 2]; k];
    for frame in sequence {
        let (aligned, _) = similarity_align(frame, first)?;
        for (s, p) in acc.iter_mut().zip(&aligned.points) {
            s[0] += p[0];
            s[1] += p[1];
        }
    }
    let m = sequence.len() as f64;
    for s in &mut acc {
        s[0] /= m;
        s[1] /= m;
    }
    LandmarkFrame::new(0, acc)
}

/// Aligns every frame to the reference and flattens each into a row
/// `(x1, y1, x2, y2, ...)`; row order preserves time order.
pub fn build_feature_matrix(
    sequence: &[LandmarkFrame],
    reference: &LandmarkFrame,
) -> Result<DMatrix<f64>> {
    if sequence.is_empty() {
        return Err(Error::Degenerate("empty sequence".into()));
    }
    let k = reference.points.len();
    let mut out = DMatrix::zeros(sequence.len(), 2 * k);
    for (row, frame) in sequence.iter().enumerate() {
        if frame.points.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "frame {} has {} points, expected {}",
                frame.frame_id,
                frame.points.len(),
                k
            )));
        }
        let (aligned, _) = similarity_align(frame, reference)?;
        for (col, p) in aligned.points.iter().enumerate() {
            out[(row, 2 * col)] = p[0];
            out[(row, 2 * col + 1)] = p[1];
        }
    }
    Ok(out)
}

/// Parses a landmark CSV; see the module docs for the layout. An empty file
/// yields an empty sequence. Malformed rows are reported with their line
/// number.
pub fn load_landmark_csv(path: impl AsRef<Path>) -> Result<Vec<LandmarkFrame>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut frames = Vec::new();
    let mut expected_cols: Option<usize> = None;
    let mut header_allowed = true;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if header_allowed && line.starts_with("frame_id") {
            header_allowed = false;
            continue;
        }
        header_allowed = false;

        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        match expected_cols {
            None => {
                if cells.len() < 5 {
                    return Err(Error::parse(
                        path,
                        line_no,
                        format!(
                            "expected at least 5 columns (frame_id plus two points), got {}",
                            cells.len()
                        ),
                    ));
                }
                if !(cells.len() - 1).is_multiple_of(2) {
                    return Err(Error::parse(
                        path,
                        line_no,
                        "coordinate columns must come in x,y pairs",
                    ));
                }
                expected_cols = Some(cells.len());
            }
            Some(k) if cells.len() != k => {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("expected {} columns, got {}", k, cells.len()),
                ));
            }
            _ => {}
        }

        let frame_id: i64 = cells[0]
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("invalid frame_id {:?}", cells[0])))?;
        let mut points = Vec::with_capacity((cells.len() - 1) / 2);
        for pair in cells[1..].chunks_exact(2) {
            let x: f64 = pair[0].parse().map_err(|_| {
                Error::parse(path, line_no, format!("non-numeric cell {:?}", pair[0]))
            })?;
            let y: f64 = pair[1].parse().map_err(|_| {
                Error::parse(path, line_no, format!("non-numeric cell {:?}", pair[1]))
            })?;
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::parse(path, line_no, "non-finite coordinate"));
            }
            points.push([x, y]);
        }
        frames.push(
            LandmarkFrame::new(frame_id, points)
                .map_err(|e| Error::parse(path, line_no, e.to_string()))?,
        );
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn square_frame(id: i64) -> LandmarkFrame {
        LandmarkFrame::new(
            id,
            vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0], [0.5, 0.25]],
        )
        .unwrap()
    }

    fn rotated_scaled(frame: &LandmarkFrame, angle: f64, scale: f64, t: [f64; 2]) -> LandmarkFrame {
        let rot = Matrix2::new(angle.cos(), -angle.sin(), angle.sin(), angle.cos());
        let xf = SimilarityTransform {
            scale,
            rotation: rot,
            translation: Vector2::new(t[0], t[1]),
        };
        xf.apply(frame)
    }

    #[test]
    fn self_alignment_is_identity() {
        let f = square_frame(0);
        let (aligned, xf) = similarity_align(&f, &f).unwrap();
        assert!((xf.scale - 1.0).abs() < 1e-12);
        assert!((xf.rotation - Matrix2::identity()).amax() < 1e-12);
        assert!(xf.translation.amax() < 1e-12);
        assert!(alignment_residual(&aligned, &f) < 1e-20);
    }

    #[test]
    fn recovers_rotation_and_scale() {
        let reference = square_frame(0);
        let moved = rotated_scaled(&reference, std::f64::consts::FRAC_PI_2, 2.0, [5.0, -3.0]);
        let (aligned, xf) = similarity_align(&moved, &reference).unwrap();
        assert!((xf.scale - 0.5).abs() < 1e-12);
        for (p, r) in aligned.points.iter().zip(&reference.points) {
            assert!((p[0] - r[0]).abs() < 1e-8);
            assert!((p[1] - r[1]).abs() < 1e-8);
        }
        // orthogonality with determinant +1
        let rtr = xf.rotation.transpose() * xf.rotation;
        assert!((rtr - Matrix2::identity()).amax() < 1e-10);
        assert!((xf.rotation.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reflected_shape_keeps_positive_residual() {
        let reference = square_frame(0);
        let reflected =
            LandmarkFrame::new(1, reference.points.iter().map(|p| [-p[0], p[1]]).collect())
                .unwrap();
        let (aligned, _) = similarity_align(&reflected, &reference).unwrap();
        // an asymmetric shape cannot be matched by a proper rotation
        assert!(alignment_residual(&aligned, &reference) > 1e-2);
    }

    #[test]
    fn degenerate_frame_is_rejected() {
        let collapsed = LandmarkFrame::new(0, vec![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]).unwrap();
        let reference = LandmarkFrame::new(0, vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            similarity_align(&collapsed, &reference).unwrap_err(),
            Error::Degenerate(_)
        ));
    }

    #[test]
    fn feature_matrix_shape_and_order() {
        let reference = square_frame(0);
        let seq = vec![square_frame(0), square_frame(1)];
        let m = build_feature_matrix(&seq, &reference).unwrap();
        assert_eq!(m.nrows(), 2);
        assert_eq!(m.ncols(), 10);
        // a frame equal to the reference flattens to the reference itself
        for (col, p) in reference.points.iter().enumerate() {
            assert!((m[(0, 2 * col)] - p[0]).abs() < 1e-12);
            assert!((m[(0, 2 * col + 1)] - p[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn feature_matrix_invariant_to_global_transform() {
        let reference = square_frame(0);
        let seq: Vec<LandmarkFrame> = (0..4)
            .map(|i| {
                rotated_scaled(
                    &square_frame(i),
                    0.1 * i as f64,
                    1.0 + 0.1 * i as f64,
                    [i as f64, 0.5],
                )
            })
            .collect();
        let moved: Vec<LandmarkFrame> = seq
            .iter()
            .map(|f| rotated_scaled(f, std::f64::consts::FRAC_PI_6, 1.7, [-2.0, 4.0]))
            .collect();
        let a = build_feature_matrix(&seq, &reference).unwrap();
        let b = build_feature_matrix(&moved, &reference).unwrap();
        assert!((a - b).amax() < 1e-8);
    }

    #[test]
    fn aligning_twice_is_idempotent() {
        let reference = square_frame(0);
        let moved = rotated_scaled(&square_frame(1), 0.4, 1.3, [2.0, 2.0]);
        let (aligned, _) = similarity_align(&moved, &reference).unwrap();
        let (_, second) = similarity_align(&aligned, &reference).unwrap();
        assert!((second.scale - 1.0).abs() < 1e-8);
        assert!((second.rotation - Matrix2::identity()).amax() < 1e-8);
        assert!(second.translation.amax() < 1e-8);
    }

    fn jagged_frame(seed: u64) -> LandmarkFrame {
        let points = (0..9)
            .map(|i| {
                let t = (seed as f64 + 1.0) * (i as f64 + 0.7);
                [
                    t.sin() * (2.0 + (0.3 * t).cos()),
                    t.cos() * (1.5 + (0.7 * t).sin()),
                ]
            })
            .collect();
        LandmarkFrame::new(seed as i64, points).unwrap()
    }

    #[test]
    fn perturbing_the_transform_never_helps() {
        for seed in 0..10u64 {
            let reference = jagged_frame(seed);
            let moved = rotated_scaled(&jagged_frame(seed + 50), 0.8, 0.6, [1.0, -2.0]);
            let (aligned, xf) = similarity_align(&moved, &reference).unwrap();
            let best = alignment_residual(&aligned, &reference);
            let deg = 1f64.to_radians();
            for (ds, da) in [(1.01, 0.0), (0.99, 0.0), (1.0, deg), (1.0, -deg)] {
                let rot = Matrix2::new(da.cos(), -da.sin(), da.sin(), da.cos()) * xf.rotation;
                // optimal translation for the perturbed scale/rotation, so
                // only the scale/rotation deviation is being measured
                let cf = moved.centroid();
                let cr = reference.centroid();
                let perturbed = SimilarityTransform {
                    scale: xf.scale * ds,
                    rotation: rot,
                    translation: Vector2::new(cr[0], cr[1])
                        - xf.scale * ds * rot * Vector2::new(cf[0], cf[1]),
                };
                let residual = alignment_residual(&perturbed.apply(&moved), &reference);
                assert!(
                    residual >= best - 1e-12,
                    "seed {seed}: perturbation ({ds}, {da}) improved {best} to {residual}"
                );
            }
        }
    }

    fn write_temp(name: &str, contents: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!("gcrf_lm_{}_{}", std::process::id(), name));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn csv_happy_path_with_header() {
        let mut body = String::from("frame_id");
        for i in 0..68 {
            body.push_str(&format!(",x{i},y{i}"));
        }
        body.push('\n');
        for fid in 0..3 {
            body.push_str(&fid.to_string());
            for i in 0..68 {
                body.push_str(&format!(",{}.5,{}.25", i, i));
            }
            body.push('\n');
        }
        let path = write_temp("happy.csv", &body);
        let frames = load_landmark_csv(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(frames.len(), 3);
        assert!(frames.iter().all(|f| f.points.len() == 68));
        assert_eq!(frames[2].frame_id, 2);
    }

    #[test]
    fn csv_inconsistent_column_count_names_line() {
        let path = write_temp("ragged.csv", "0,1.0,2.0,3.0,4.0\n1,1.0,2.0,3.0\n");
        let err = load_landmark_csv(&path).unwrap_err();
        std::fs::remove_file(&path).ok();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn csv_non_numeric_cell_names_line() {
        let path = write_temp("bad_cell.csv", "0,1.0,2.0,3.0,4.0\n1,1.0,oops,3.0,4.0\n");
        let err = load_landmark_csv(&path).unwrap_err();
        std::fs::remove_file(&path).ok();
        match err {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("oops"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn csv_empty_file_is_empty_sequence() {
        let path = write_temp("empty.csv", "");
        let frames = load_landmark_csv(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert!(frames.is_empty());
    }

    #[test]
    fn mean_reference_of_self_similar_sequence() {
        let base = square_frame(0);
        let seq = vec![
            base.clone(),
            rotated_scaled(&base, 0.3, 2.0, [1.0, 1.0]),
            rotated_scaled(&base, -0.2, 0.5, [-3.0, 0.0]),
        ];
        let reference = mean_reference(&seq).unwrap();
        // every frame is a similarity image of the base, so the mean of the
        // aligned frames equals the base aligned to itself
        let (aligned, _) = similarity_align(&base, &seq[0]).unwrap();
        for (r, p) in reference.points.iter().zip(&aligned.points) {
            assert!((r[0] - p[0]).abs() < 1e-8);
            assert!((r[1] - p[1]).abs() < 1e-8);
        }
    }
}
