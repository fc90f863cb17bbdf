//! Landmark shapes: the iBUG `.pts` format, size normalization, up-righting
//! and the training-set mean shape.
//!
//! Landmark indices are zero-based iBUG-68 throughout: 36–41 and 42–47 are
//! the two eye contours (image-left and image-right respectively), 48 and 54
//! the mouth corners.

use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of points in the iBUG 300-W annotation scheme.
pub const IBUG_POINT_COUNT: usize = 68;

/// Image-left eye contour.
pub const LEFT_EYE: Range<usize> = 36..42;
/// Image-right eye contour.
pub const RIGHT_EYE: Range<usize> = 42..48;
/// Outer and inner lip contours.
pub const MOUTH: Range<usize> = 48..68;

const CENTROID_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Raw landmark points for one face, in image pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<Point>,
}

impl LandmarkSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("landmark set has no points".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidValue(format!("landmark {i} is not finite")));
        }
        Ok(LandmarkSet { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    /// Applies `f` to every point.
    pub fn map(&self, f: impl Fn(Point) -> Point) -> Result<LandmarkSet> {
        LandmarkSet::new(self.points.iter().copied().map(f).collect())
    }

    /// Mean of the points in `range`.
    pub fn region_center(&self, range: Range<usize>) -> Point {
        region_center(&self.points, range)
    }
}

/// Landmarks after centroid-centering and division by centroid size,
/// optionally rotated upright.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedShape {
    points: Vec<Point>,
    scale_applied: f64,
    rotation_applied: f64,
}

impl NormalizedShape {
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    /// The centroid size that was divided out.
    pub fn scale_applied(&self) -> f64 {
        self.scale_applied
    }

    /// Angle of the eye line that [`upright`] removed, in radians.
    pub fn rotation_applied(&self) -> f64 {
        self.rotation_applied
    }

    pub fn to_landmarks(&self) -> LandmarkSet {
        LandmarkSet {
            points: self.points.clone(),
        }
    }
}

/// Average of normalized, up-righted training shapes, re-normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanShape {
    points: Vec<Point>,
    sample_count: usize,
}

impl MeanShape {
    /// Rebuilds a mean shape from stored points, checking that they are
    /// still centered and of unit centroid size.
    pub fn from_points(points: Vec<Point>, sample_count: usize) -> Result<Self> {
        if sample_count == 0 {
            return Err(Error::InvalidValue("mean shape sample count is zero".into()));
        }
        let set = LandmarkSet::new(points)?;
        let c = centroid(&set.points);
        let size = centroid_size(&set.points, c);
        if c.x.abs() > CENTROID_TOLERANCE
            || c.y.abs() > CENTROID_TOLERANCE
            || (size - 1.0).abs() > CENTROID_TOLERANCE
        {
            return Err(Error::InvalidValue(
                "mean shape points are not normalized".into(),
            ));
        }
        Ok(MeanShape {
            points: set.points,
            sample_count,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }
}

/// Parses an iBUG `.pts` file.
///
/// ```text
/// version: 1
/// n_points:  68
/// {
/// 123.4 56.7
/// ...
/// }
/// ```
pub fn parse_pts(text: &str) -> Result<LandmarkSet> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, version) = lines
        .next()
        .ok_or_else(|| Error::format(1, "missing version line"))?;
    header_value(version, "version").ok_or_else(|| Error::format(line, "expected 'version:'"))?;

    let (line, count) = lines
        .next()
        .ok_or_else(|| Error::format(line + 1, "missing n_points line"))?;
    let declared: usize = header_value(count, "n_points")
        .ok_or_else(|| Error::format(line, "expected 'n_points:'"))?
        .parse()
        .map_err(|_| Error::format(line, "n_points is not a non-negative integer"))?;

    match lines.next() {
        Some((_, "{")) => {}
        Some((line, _)) => return Err(Error::format(line, "expected '{'")),
        None => return Err(Error::format(line + 1, "missing '{'")),
    }

    let mut points = Vec::with_capacity(declared);
    let mut closed = false;
    let mut last_line = line;
    for (line, content) in lines.by_ref() {
        last_line = line;
        if content == "}" {
            closed = true;
            break;
        }
        let mut fields = content.split_whitespace();
        let x = parse_coordinate(fields.next(), line)?;
        let y = parse_coordinate(fields.next(), line)?;
        if fields.next().is_some() {
            return Err(Error::format(line, "more than two values on a point line"));
        }
        points.push(Point::new(x, y));
    }
    if !closed {
        return Err(Error::format(last_line, "missing closing '}'"));
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::format(line, "content after closing '}'"));
    }
    if points.len() != declared {
        return Err(Error::format(
            last_line,
            format!("n_points declares {declared} but {} points follow", points.len()),
        ));
    }
    LandmarkSet::new(points)
}

fn header_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let (k, v) = line.split_once(':')?;
    (k.trim() == key).then(|| v.trim())
}

fn parse_coordinate(field: Option<&str>, line: usize) -> Result<f64> {
    let field = field.ok_or_else(|| Error::format(line, "expected two coordinates"))?;
    let value: f64 = field
        .parse()
        .map_err(|_| Error::format(line, format!("non-numeric coordinate '{field}'")))?;
    if !value.is_finite() {
        return Err(Error::format(line, format!("non-finite coordinate '{field}'")));
    }
    Ok(value)
}

/// Serializes landmarks in the iBUG `.pts` layout. Coordinates use the
/// shortest representation that parses back to the identical `f64`.
pub fn write_pts(shape: &LandmarkSet) -> String {
    let mut out = String::with_capacity(shape.point_count() * 24 + 32);
    out.push_str("version: 1\n");
    let _ = writeln!(out, "n_points:  {}", shape.point_count());
    out.push_str("{\n");
    for p in shape.points() {
        let _ = writeln!(out, "{} {}", p.x, p.y);
    }
    out.push_str("}\n");
    out
}

fn centroid(points: &[Point]) -> Point {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Point::new(sx / n, sy / n)
}

/// Root-mean-square distance of the points from `center`.
fn centroid_size(points: &[Point], center: Point) -> f64 {
    let ss: f64 = points
        .iter()
        .map(|p| (p.x - center.x).powi(2) + (p.y - center.y).powi(2))
        .sum();
    (ss / points.len() as f64).sqrt()
}

fn region_center(points: &[Point], range: Range<usize>) -> Point {
    centroid(&points[range])
}

fn center_and_scale(points: &[Point]) -> Result<(Vec<Point>, f64)> {
    if points.len() < 2 {
        return Err(Error::DegenerateShape(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    let c = centroid(points);
    let size = centroid_size(points, c);
    let extent = 1.0 + c.x.abs().max(c.y.abs());
    if !(size > 1e-12 * extent) {
        return Err(Error::DegenerateShape("all points coincide".into()));
    }
    let normalized = points
        .iter()
        .map(|p| Point::new((p.x - c.x) / size, (p.y - c.y) / size))
        .collect();
    Ok((normalized, size))
}

/// Centers the shape on its centroid and divides by its centroid size.
pub fn normalize_size(shape: &LandmarkSet) -> Result<NormalizedShape> {
    let (points, scale_applied) = center_and_scale(shape.points())?;
    Ok(NormalizedShape {
        points,
        scale_applied,
        rotation_applied: 0.0,
    })
}

/// Rotates the shape about its centroid so the line from the image-left eye
/// center to the image-right eye center is horizontal, pointing along +x.
pub fn upright(shape: &NormalizedShape) -> Result<NormalizedShape> {
    if shape.point_count() != IBUG_POINT_COUNT {
        return Err(Error::UnsupportedTopology {
            expected: IBUG_POINT_COUNT,
            actual: shape.point_count(),
        });
    }
    let left = region_center(&shape.points, LEFT_EYE);
    let right = region_center(&shape.points, RIGHT_EYE);
    let (dx, dy) = (right.x - left.x, right.y - left.y);
    if !(dx.hypot(dy) > 1e-12) {
        return Err(Error::DegenerateShape("eye centers coincide".into()));
    }
    let angle = dy.atan2(dx);
    let (sin, cos) = angle.sin_cos();
    let points = shape
        .points
        .iter()
        .map(|p| Point::new(p.x * cos + p.y * sin, -p.x * sin + p.y * cos))
        .collect();
    Ok(NormalizedShape {
        points,
        scale_applied: shape.scale_applied,
        rotation_applied: shape.rotation_applied + angle,
    })
}

/// Coordinate-wise mean of the shapes, re-normalized to unit centroid size.
pub fn mean_shape(shapes: &[NormalizedShape]) -> Result<MeanShape> {
    let first = shapes
        .first()
        .ok_or_else(|| Error::EmptyInput("mean of zero shapes".into()))?;
    let n_points = first.point_count();
    let mut sum = vec![Point::default(); n_points];
    for shape in shapes {
        if shape.point_count() != n_points {
            return Err(Error::DimensionMismatch {
                expected: n_points,
                actual: shape.point_count(),
            });
        }
        for (acc, p) in sum.iter_mut().zip(shape.points()) {
            acc.x += p.x;
            acc.y += p.y;
        }
    }
    let n = shapes.len() as f64;
    let mean: Vec<Point> = sum.iter().map(|p| Point::new(p.x / n, p.y / n)).collect();
    let (points, _) = center_and_scale(&mean)?;
    Ok(MeanShape {
        points,
        sample_count: shapes.len(),
    })
}

/// A generic frontal iBUG-68 layout: eyes near y = -0.35, mouth corners at
/// (±0.35, 0.45), chin at (0, 1). Useful as a deformation template and for
/// fixtures.
pub fn reference_face() -> LandmarkSet {
    let mut pts = Vec::with_capacity(IBUG_POINT_COUNT);
    // jaw 0..=16
    for i in 0..17 {
        let phi = std::f64::consts::PI * i as f64 / 16.0;
        pts.push(Point::new(-phi.cos(), -0.25 + 1.25 * phi.sin()));
    }
    // brows 17..=26
    for k in 0..5 {
        let t = k as f64 / 4.0;
        let lift = 0.1 * (std::f64::consts::PI * t).sin();
        pts.push(Point::new(-0.8 + 0.6 * t, -0.55 - lift));
    }
    for k in 0..5 {
        let t = k as f64 / 4.0;
        let lift = 0.1 * (std::f64::consts::PI * t).sin();
        pts.push(Point::new(0.2 + 0.6 * t, -0.55 - lift));
    }
    // nose 27..=35
    for y in [-0.4, -0.27, -0.13, 0.0] {
        pts.push(Point::new(0.0, y));
    }
    for (x, y) in [(-0.2, 0.1), (-0.1, 0.13), (0.0, 0.15), (0.1, 0.13), (0.2, 0.1)] {
        pts.push(Point::new(x, y));
    }
    // eyes 36..=47
    let eye = [
        (-0.6, -0.35),
        (-0.47, -0.42),
        (-0.33, -0.42),
        (-0.2, -0.35),
        (-0.33, -0.29),
        (-0.47, -0.29),
    ];
    pts.extend(eye.iter().map(|&(x, y)| Point::new(x, y)));
    let mirrored = [3, 2, 1, 0, 5, 4].map(|i| Point::new(-eye[i].0, eye[i].1));
    pts.extend(mirrored);
    // outer lip 48..=59, inner lip 60..=67
    let lips = [
        (-0.35, 0.45),
        (-0.22, 0.39),
        (-0.08, 0.36),
        (0.0, 0.37),
        (0.08, 0.36),
        (0.22, 0.39),
        (0.35, 0.45),
        (0.22, 0.53),
        (0.08, 0.56),
        (0.0, 0.57),
        (-0.08, 0.56),
        (-0.22, 0.53),
        (-0.28, 0.45),
        (-0.1, 0.42),
        (0.0, 0.42),
        (0.1, 0.42),
        (0.28, 0.45),
        (0.1, 0.48),
        (0.0, 0.48),
        (-0.1, 0.48),
    ];
    pts.extend(lips.iter().map(|&(x, y)| Point::new(x, y)));
    debug_assert_eq!(pts.len(), IBUG_POINT_COUNT);
    LandmarkSet { points: pts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn assert_same_points(a: &[Point], b: &[Point], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (p, q) in a.iter().zip(b) {
            assert_abs_diff_eq!(p.x, q.x, epsilon = tol);
            assert_abs_diff_eq!(p.y, q.y, epsilon = tol);
        }
    }

    fn similarity(shape: &LandmarkSet, scale: f64, angle: f64, tx: f64, ty: f64) -> LandmarkSet {
        let (s, c) = angle.sin_cos();
        shape
            .map(|p| {
                Point::new(
                    scale * (c * p.x - s * p.y) + tx,
                    scale * (s * p.x + c * p.y) + ty,
                )
            })
            .unwrap()
    }

    fn pts_text(points: &[(f64, f64)], declared: usize) -> String {
        let mut s = format!("version: 1\nn_points:  {declared}\n{{\n");
        for (x, y) in points {
            s.push_str(&format!("{x} {y}\n"));
        }
        s.push_str("}\n");
        s
    }

    #[test]
    fn parses_well_formed_68_point_file() {
        let face = reference_face();
        let text = write_pts(&similarity(&face, 80.0, 0.0, 200.0, 150.0));
        let parsed = parse_pts(&text).unwrap();
        assert_eq!(parsed.point_count(), 68);
    }

    #[test]
    fn parses_minimal_three_point_file() {
        let text = "version: 1\nn_points: 3\n{\n1 2\n3.5 4\n-5 6e1\n}\n";
        let parsed = parse_pts(text).unwrap();
        assert_eq!(parsed.point_count(), 3);
        assert_eq!(parsed.points()[2], Point::new(-5.0, 60.0));
    }

    #[test]
    fn rejects_count_mismatch() {
        let pts: Vec<(f64, f64)> = (0..67).map(|i| (i as f64, 2.0 * i as f64)).collect();
        let err = parse_pts(&pts_text(&pts, 68)).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err}");
    }

    #[test]
    fn rejects_non_numeric_coordinate() {
        let text = "version: 1\nn_points: 2\n{\n1 2\n3 abc\n}\n";
        let err = parse_pts(text).unwrap_err();
        assert!(err.to_string().contains("abc"));
    }

    #[test]
    fn rejects_missing_brace_and_bad_header() {
        assert!(parse_pts("version: 1\nn_points: 1\n1 2\n}\n").is_err());
        assert!(parse_pts("version: 1\nn_points: 1\n{\n1 2\n").is_err());
        assert!(parse_pts("n_points: 1\n{\n1 2\n}\n").is_err());
        assert!(parse_pts("").is_err());
    }

    #[test]
    fn tolerates_crlf_and_blank_lines() {
        let text = "version: 1\r\nn_points:  2\r\n\r\n{\r\n1 2\r\n 3   4 \r\n}\r\n\r\n";
        assert_eq!(parse_pts(text).unwrap().point_count(), 2);
    }

    #[test]
    fn normalize_is_scale_and_translation_invariant() {
        let face = reference_face();
        let base = normalize_size(&face).unwrap();
        let doubled = normalize_size(&face.map(|p| Point::new(2.0 * p.x, 2.0 * p.y)).unwrap()).unwrap();
        let moved =
            normalize_size(&face.map(|p| Point::new(p.x + 100.0, p.y - 40.0)).unwrap()).unwrap();
        assert_same_points(base.points(), doubled.points(), 1e-12);
        assert_same_points(base.points(), moved.points(), 1e-12);
        assert_abs_diff_eq!(doubled.scale_applied(), 2.0 * base.scale_applied(), epsilon = 1e-12);
        assert_eq!(base.rotation_applied(), 0.0);
    }

    #[test]
    fn unit_square_normalizes_to_unit_norm_corners() {
        // Centroid (0.5, 0.5); every corner lies sqrt(0.5) from it, so the
        // centroid size is sqrt(0.5) and each corner ends at (±0.5/sqrt(0.5), ...).
        let square = LandmarkSet::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ])
        .unwrap();
        let n = normalize_size(&square).unwrap();
        let r = 0.5f64.sqrt();
        assert_abs_diff_eq!(n.scale_applied(), r, epsilon = 1e-12);
        let expected = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        for (p, (sx, sy)) in n.points().iter().zip(expected) {
            assert_abs_diff_eq!(p.x, sx * 0.5 / r, epsilon = 1e-12);
            assert_abs_diff_eq!(p.y, sy * 0.5 / r, epsilon = 1e-12);
            assert_abs_diff_eq!(p.x.hypot(p.y), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let shape = LandmarkSet::new(vec![Point::new(3.0, 3.0); 5]).unwrap();
        assert!(matches!(normalize_size(&shape), Err(Error::DegenerateShape(_))));
        let single = LandmarkSet::new(vec![Point::new(3.0, 3.0)]).unwrap();
        assert!(matches!(normalize_size(&single), Err(Error::DegenerateShape(_))));
    }

    #[test]
    fn normalize_is_idempotent() {
        let face = similarity(&reference_face(), 37.0, 0.3, -5.0, 12.0);
        let once = normalize_size(&face).unwrap();
        let twice = normalize_size(&once.to_landmarks()).unwrap();
        assert_same_points(once.points(), twice.points(), 1e-12);
        assert_abs_diff_eq!(twice.scale_applied(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn upright_fixed_point_on_upright_face() {
        let n = normalize_size(&reference_face()).unwrap();
        let u = upright(&n).unwrap();
        assert_abs_diff_eq!(u.rotation_applied(), 0.0, epsilon = 1e-15);
        assert_same_points(n.points(), u.points(), 1e-12);
    }

    #[test]
    fn upright_undoes_seventeen_degrees() {
        let face = reference_face();
        let rotated = similarity(&face, 1.0, 17f64.to_radians(), 0.0, 0.0);
        let a = upright(&normalize_size(&face).unwrap()).unwrap();
        let b = upright(&normalize_size(&rotated).unwrap()).unwrap();
        assert_same_points(a.points(), b.points(), 1e-9);
        assert_abs_diff_eq!(b.rotation_applied(), 17f64.to_radians(), epsilon = 1e-12);
    }

    #[test]
    fn upright_angle_matches_closed_form() {
        // Place every left-eye point at (-0.3, 0.1) and every right-eye point at
        // (0.3, -0.1); the eye line direction is (0.6, -0.2), whose angle is
        // -atan(1/3). Normalization does not change that direction.
        let mut pts = reference_face().points().to_vec();
        for i in LEFT_EYE {
            pts[i] = Point::new(-0.3, 0.1);
        }
        for i in RIGHT_EYE {
            pts[i] = Point::new(0.3, -0.1);
        }
        let n = normalize_size(&LandmarkSet::new(pts).unwrap()).unwrap();
        let u = upright(&n).unwrap();
        let hand = -(1.0f64 / 3.0).atan();
        assert_abs_diff_eq!(u.rotation_applied(), hand, epsilon = 1e-12);
        let l = region_center(u.points(), LEFT_EYE);
        let r = region_center(u.points(), RIGHT_EYE);
        assert_abs_diff_eq!(l.y, r.y, epsilon = 1e-12);
        assert!(r.x > l.x);
    }

    #[test]
    fn upright_rejects_wrong_topology_and_coincident_eyes() {
        let square = LandmarkSet::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
        ])
        .unwrap();
        let n = normalize_size(&square).unwrap();
        assert!(matches!(upright(&n), Err(Error::UnsupportedTopology { .. })));

        let mut pts = reference_face().points().to_vec();
        for i in LEFT_EYE.chain(RIGHT_EYE) {
            pts[i] = Point::new(0.0, -0.35);
        }
        let n = normalize_size(&LandmarkSet::new(pts).unwrap()).unwrap();
        assert!(matches!(upright(&n), Err(Error::DegenerateShape(_))));
    }

    #[test]
    fn upright_preserves_normalization() {
        let face = similarity(&reference_face(), 3.0, 2.5, 1.0, 1.0);
        let u = upright(&normalize_size(&face).unwrap()).unwrap();
        let c = centroid(u.points());
        assert_abs_diff_eq!(c.x, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.y, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(centroid_size(u.points(), c), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn mean_of_copies_is_the_shape() {
        let u = upright(&normalize_size(&reference_face()).unwrap()).unwrap();
        let m = mean_shape(&vec![u.clone(); 5]).unwrap();
        assert_eq!(m.sample_count(), 5);
        assert_same_points(m.points(), u.points(), 1e-12);
    }

    #[test]
    fn mean_of_two_is_renormalized_midpoint() {
        let face = reference_face();
        let a = normalize_size(&face).unwrap();
        let mut pts = face.points().to_vec();
        for p in &mut pts[MOUTH] {
            p.y += 0.2;
        }
        let b = normalize_size(&LandmarkSet::new(pts).unwrap()).unwrap();
        let m = mean_shape(&[a.clone(), b.clone()]).unwrap();

        let mid: Vec<Point> = a
            .points()
            .iter()
            .zip(b.points())
            .map(|(p, q)| Point::new((p.x + q.x) / 2.0, (p.y + q.y) / 2.0))
            .collect();
        let c = centroid(&mid);
        let size = centroid_size(&mid, c);
        let expected: Vec<Point> = mid
            .iter()
            .map(|p| Point::new((p.x - c.x) / size, (p.y - c.y) / size))
            .collect();
        assert_same_points(m.points(), &expected, 1e-12);
    }

    #[test]
    fn mean_rejects_empty_and_mismatched() {
        assert!(matches!(mean_shape(&[]), Err(Error::EmptyInput(_))));
        let a = normalize_size(&reference_face()).unwrap();
        let b = normalize_size(
            &LandmarkSet::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0)]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            mean_shape(&[a, b]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mean_shape_from_points_validates() {
        let u = normalize_size(&reference_face()).unwrap();
        assert!(MeanShape::from_points(u.points().to_vec(), 3).is_ok());
        assert!(MeanShape::from_points(reference_face().points().to_vec(), 3).is_err());
        assert!(MeanShape::from_points(u.points().to_vec(), 0).is_err());
    }

    #[test]
    fn rejects_non_finite_landmarks() {
        assert!(LandmarkSet::new(vec![Point::new(f64::NAN, 0.0)]).is_err());
        assert!(LandmarkSet::new(vec![]).is_err());
    }

    proptest! {
        #[test]
        fn upright_normalize_is_similarity_invariant(
            noise in prop::collection::vec(-0.05f64..0.05, 136),
            scale in 0.05f64..500.0,
            angle in -3.1f64..3.1,
            tx in -1000.0f64..1000.0,
            ty in -1000.0f64..1000.0,
        ) {
            let base: Vec<Point> = reference_face()
                .points()
                .iter()
                .enumerate()
                .map(|(i, p)| Point::new(p.x + noise[2 * i], p.y + noise[2 * i + 1]))
                .collect();
            let shape = LandmarkSet::new(base).unwrap();
            let moved = similarity(&shape, scale, angle, tx, ty);
            let a = upright(&normalize_size(&shape).unwrap()).unwrap();
            let b = upright(&normalize_size(&moved).unwrap()).unwrap();
            for (p, q) in a.points().iter().zip(b.points()) {
                prop_assert!((p.x - q.x).abs() < 1e-6 && (p.y - q.y).abs() < 1e-6);
            }
        }

        #[test]
        fn pts_round_trips(coords in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 1..80)) {
            let shape = LandmarkSet::new(coords.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap();
            let parsed = parse_pts(&write_pts(&shape)).unwrap();
            prop_assert_eq!(parsed, shape);
        }
    }
}
