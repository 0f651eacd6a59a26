//! Unidistant boundaries: the points at a fixed weighted-Minkowski distance
//! from a centre in the plane.
//!
//! Every metric here is absolutely homogeneous, so along a direction `u` the
//! boundary sits at radius `D / d(0, u)`. Sampling `θ_j = 2πj / resolution`
//! therefore gives exact points without contouring.

use std::f64::consts::PI;
use std::io::Write;

use crate::classifier::KnnModel;
use crate::error::{Error, Result};
use crate::metric::{weighted_minkowski_distance, MetricSpec, Norm, WeightVector};

pub const DEFAULT_RESOLUTION: usize = 360;
pub const MIN_RESOLUTION: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySample {
    pub center: [f64; 2],
    pub radius: f64,
    pub spec: MetricSpec,
    /// Sample angles, ascending.
    pub thetas: Vec<f64>,
    /// Boundary points in angle order; the polyline closes back to the first.
    pub points: Vec<[f64; 2]>,
    /// True when the radius is zero and every point is the centre.
    pub degenerate: bool,
}

impl BoundarySample {
    /// Distances of the points from the centre.
    pub fn radii(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| (p[0] - self.center[0]).hypot(p[1] - self.center[1]))
            .collect()
    }

    /// Largest extent from the centre along each axis.
    pub fn axis_extents(&self) -> [f64; 2] {
        self.points.iter().fold([0.0f64; 2], |acc, p| {
            [
                acc[0].max((p[0] - self.center[0]).abs()),
                acc[1].max((p[1] - self.center[1]).abs()),
            ]
        })
    }
}

fn check_spec(spec: &MetricSpec) -> Result<()> {
    if let Some(w) = spec.weights() {
        if w.len() != 2 {
            return Err(Error::DimensionMismatch { left: w.len(), right: 2 });
        }
        if let Some(axis) = w.iter().position(|&v| v <= 0.0) {
            return Err(Error::UnboundedAxis { axis });
        }
    }
    Ok(())
}

fn boundary(center: [f64; 2], radius: f64, spec: &MetricSpec, resolution: usize) -> Result<BoundarySample> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidParameter(format!(
            "resolution must be ≥ {MIN_RESOLUTION}, got {resolution}"
        )));
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be finite and ≥ 0, got {radius}")));
    }
    check_spec(spec)?;
    let thetas: Vec<f64> = (0..resolution).map(|j| 2.0 * PI * j as f64 / resolution as f64).collect();
    let points = thetas
        .iter()
        .map(|&theta| {
            let dir = [theta.cos(), theta.sin()];
            let unit = weighted_minkowski_distance(&[0.0, 0.0], &dir, spec)?;
            let r = radius / unit;
            Ok([center[0] + r * dir[0], center[1] + r * dir[1]])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundarySample {
        center,
        radius,
        spec: spec.clone(),
        thetas,
        points,
        degenerate: radius == 0.0,
    })
}

/// Points at distance `radius` (> 0) from `center` under `spec`.
pub fn unidistant_boundary(
    center: [f64; 2],
    radius: f64,
    spec: &MetricSpec,
    resolution: usize,
) -> Result<BoundarySample> {
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::InvalidParameter(format!("radius must be > 0, got {radius}")));
    }
    boundary(center, radius, spec, resolution)
}

/// One boundary per `(norm, weights)` pair, norms outermost.
pub fn boundary_family(
    center: [f64; 2],
    radius: f64,
    norms: &[Norm],
    weight_list: &[WeightVector],
    resolution: usize,
) -> Result<Vec<BoundarySample>> {
    let mut out = Vec::with_capacity(norms.len() * weight_list.len());
    for &norm in norms {
        for w in weight_list {
            let spec = MetricSpec::weighted(norm, w.clone());
            out.push(unidistant_boundary(center, radius, &spec, resolution)?);
        }
    }
    Ok(out)
}

/// The region around `query` that just encloses the model's k nearest
/// neighbours.
pub fn knn_region(model: &KnnModel, query: [f64; 2], resolution: usize) -> Result<BoundarySample> {
    if model.n_dims() != 2 {
        return Err(Error::DimensionMismatch {
            left: model.n_dims(),
            right: 2,
        });
    }
    let radius = model.kth_distance(&query)?;
    boundary(query, radius, model.metric(), resolution)
}

/// Default norm grid for the boundary figures: 1, 2, 3, 10, 100 and ∞.
pub fn default_norms() -> Vec<Norm> {
    [1.0, 2.0, 3.0, 10.0, 100.0]
        .into_iter()
        .map(|p| Norm::finite(p).expect("valid"))
        .chain(std::iter::once(Norm::INFINITE))
        .collect()
}

/// Default weight pairs: uniform and two skewed pairs mirrored in each other.
pub fn default_weights() -> Vec<WeightVector> {
    [[1.0, 1.0], [1.5, 0.5], [0.5, 1.5]]
        .into_iter()
        .map(|w| WeightVector::new(w.to_vec()).expect("valid"))
        .collect()
}

/// Weights as `w1;w2` so they fit in one CSV cell.
pub fn weights_label(spec: &MetricSpec) -> String {
    match spec.weights() {
        Some(w) => w.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"),
        None => "1;1".into(),
    }
}

/// Writes boundaries as CSV with columns `series_id,p,weights,theta,x,y`.
pub fn write_boundaries_csv<W: Write>(out: W, series: &[(String, &BoundarySample)]) -> Result<()> {
    let to_err = |e: csv::Error| Error::Csv {
        path: "<boundaries>".into(),
        message: e.to_string(),
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["series_id", "p", "weights", "theta", "x", "y"])
        .map_err(to_err)?;
    for (id, b) in series {
        let p = b.spec.norm.to_string();
        let weights = weights_label(&b.spec);
        for (theta, pt) in b.thetas.iter().zip(&b.points) {
            w.write_record([
                id.as_str(),
                &p,
                &weights,
                &theta.to_string(),
                &pt[0].to_string(),
                &pt[1].to_string(),
            ])
            .map_err(to_err)?;
        }
    }
    w.flush().map_err(|e| Error::Io {
        path: "<boundaries>".into(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::KnnParams;
    use crate::datasets::LabeledDataset;

    fn spec(p: Norm, w: [f64; 2]) -> MetricSpec {
        MetricSpec::weighted(p, WeightVector::new(w.to_vec()).unwrap())
    }

    #[test]
    fn euclidean_unit_circle() {
        let b = unidistant_boundary([0.0, 0.0], 1.0, &spec(Norm::EUCLIDEAN, [1.0, 1.0]), 360).unwrap();
        assert_eq!(b.points[0], [1.0, 0.0]);
        for r in b.radii() {
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn manhattan_diagonal() {
        let b = unidistant_boundary([0.0, 0.0], 1.0, &spec(Norm::MANHATTAN, [1.0, 1.0]), 8).unwrap();
        let p = b.points[1];
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12, "{p:?}");
    }

    #[test]
    fn weighted_ellipse_top() {
        let b = unidistant_boundary([0.0, 0.0], 1.0, &spec(Norm::EUCLIDEAN, [1.5, 0.5]), 8).unwrap();
        let p = b.points[2];
        assert!(p[0].abs() < 1e-12);
        assert!((p[1] - 2f64.sqrt()).abs() < 1e-12, "{p:?}");
    }

    #[test]
    fn chebyshev_square() {
        let b = unidistant_boundary([0.0, 0.0], 1.0, &spec(Norm::INFINITE, [1.0, 1.0]), 8).unwrap();
        for (i, p) in b.points.iter().enumerate() {
            let m = p[0].abs().max(p[1].abs());
            assert!((m - 1.0).abs() < 1e-12);
            if i % 2 == 1 {
                assert!((p[0].abs() - 1.0).abs() < 1e-12 && (p[1].abs() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn family_and_nesting() {
        let norms = [Norm::MANHATTAN, Norm::EUCLIDEAN, Norm::INFINITE];
        let fam = boundary_family([0.0, 0.0], 1.0, &norms, &[WeightVector::uniform(2).unwrap()], 8).unwrap();
        assert_eq!(fam.len(), 3);
        for b in &fam {
            assert_eq!(b.points.len(), 8);
        }
        let r: Vec<Vec<f64>> = fam.iter().map(BoundarySample::radii).collect();
        for ((a, b), c) in r[0].iter().zip(&r[1]).zip(&r[2]) {
            assert!(a <= &(b + 1e-12) && b <= &(c + 1e-12));
        }
    }

    #[test]
    fn weighted_region_elongates_along_low_weight_axis() {
        let fam = boundary_family(
            [0.0, 0.0],
            1.0,
            &[Norm::EUCLIDEAN],
            &[WeightVector::uniform(2).unwrap(), WeightVector::new(vec![1.5, 0.5]).unwrap()],
            360,
        )
        .unwrap();
        let [ux, uy] = fam[0].axis_extents();
        let [wx, wy] = fam[1].axis_extents();
        assert!((ux - uy).abs() < 1e-12);
        assert!(wy > wx);
    }

    #[test]
    fn errors() {
        let s = spec(Norm::EUCLIDEAN, [2.0, 0.0]);
        assert!(matches!(unidistant_boundary([0.0, 0.0], 1.0, &s, 8), Err(Error::UnboundedAxis { axis: 1 })));
        let ok = spec(Norm::EUCLIDEAN, [1.0, 1.0]);
        assert!(unidistant_boundary([0.0, 0.0], 0.0, &ok, 8).is_err());
        assert!(unidistant_boundary([0.0, 0.0], 1.0, &ok, 7).is_err());
        let three = MetricSpec::weighted(Norm::EUCLIDEAN, WeightVector::uniform(3).unwrap());
        assert!(unidistant_boundary([0.0, 0.0], 1.0, &three, 8).is_err());
    }

    #[test]
    fn knn_region_cases() {
        let train = LabeledDataset::new(
            "t",
            vec![vec![0.0, 0.0], vec![3.0, 4.0], vec![-1.0, 0.0]],
            vec![0, 1, 0],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let m1 = KnnModel::fit(&train, &KnnParams::uniform(1, Norm::EUCLIDEAN)).unwrap();
        let r = knn_region(&m1, [0.0, 0.0], 16).unwrap();
        assert!(r.degenerate);
        assert!(r.points.iter().all(|p| *p == [0.0, 0.0]));

        let m2 = KnnModel::fit(&train, &KnnParams::uniform(2, Norm::EUCLIDEAN)).unwrap();
        let r = knn_region(&m2, [0.0, 0.0], 16).unwrap();
        assert!(!r.degenerate);
        assert_eq!(r.radius, 1.0);
        for rad in r.radii() {
            assert!((rad - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_output() {
        let b = unidistant_boundary([0.0, 0.0], 1.0, &spec(Norm::INFINITE, [1.5, 0.5]), 8).unwrap();
        let mut buf = Vec::new();
        write_boundaries_csv(&mut buf, &[("s0".to_string(), &b)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("series_id,p,weights,theta,x,y"));
        assert!(lines.next().unwrap().starts_with("s0,inf,1.5;0.5,0,1,0"));
        assert_eq!(text.lines().count(), 9);
    }
}
