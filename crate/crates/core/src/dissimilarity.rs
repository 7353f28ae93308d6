//! Dissimilarity functions for the clustering engine.
//!
//! None of these needs to be a metric; clustering only uses them through an
//! argmin, so any two that differ by a positive factor drive identical
//! assignments. On a sphere of radius `r` the three geometric ones are tied
//! together by
//!
//! ```text
//! d_e = 2r² · d_s        d_q = d_s / 4 = d_e / (8r²)
//! ```

use crate::error::{Error, Result};
use crate::geometry::{isp, Point2, Point3};
use crate::quantum::{self, BlochVector, ShotConfig};

/// The pluggable dissimilarity of a clustering state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DissimilarityKind {
    /// Squared Euclidean distance.
    Euclidean,
    /// `1 − cos∠(a, b)`.
    Cosine,
    /// Exact Bell `11` probability of the Bloch embeddings, `d_s / 4`.
    QuantumExact,
    /// Shot-sampled Bell `11` frequency; each evaluation is seeded from its [`DrawKey`].
    QuantumShots(ShotConfig),
    /// `½(1 − tr ρ₁ρ₂)` on Bloch vectors `v / scale`, which may be mixed.
    NoisyQuantum { scale: f64 },
}

/// Identifies one evaluation inside a clustering run, so shot-sampled
/// dissimilarities draw the same outcomes however the work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DrawKey {
    pub iteration: u64,
    pub point: u64,
    pub centroid: u64,
}

fn same_dim(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn d_euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    same_dim(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

pub fn d_cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    same_dim(a, b)?;
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateDirection(
            "cosine dissimilarity of a zero vector".into(),
        ));
    }
    // rounding can leave parallel vectors a hair below zero
    Ok((1.0 - dot(a, b) / (na * nb)).max(0.0))
}

pub fn d_quantum_exact(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(d_cosine(a, b)? / 4.0)
}

/// Bell-measurement estimate between the Bloch embeddings of `p1/‖p1‖` and `p2/‖p2‖`.
pub fn d_quantum_shots(p1: Point3, p2: Point3, cfg: ShotConfig) -> Result<f64> {
    let q1 = quantum::bloch_embed(p1.normalized()?)?;
    let q2 = quantum::bloch_embed(p2.normalized()?)?;
    Ok(quantum::bell_p11_sampled(&q1, &q2, cfg))
}

/// Cosine dissimilarity of the stereographic images of two planar points, in closed form:
/// `d_e(p1, p2) · 2r² / ((r² + ‖p1‖²)(r² + ‖p2‖²))`.
pub fn d_stereo_composed(p1: Point2, p2: Point2, r: f64) -> Result<f64> {
    crate::geometry::check_radius(r)?;
    let r2 = r * r;
    let de = d_euclidean(&p1.to_array(), &p2.to_array())?;
    Ok(de * 2.0 * r2 / ((r2 + p1.norm_sq()) * (r2 + p2.norm_sq())))
}

/// Same quantity computed the long way: project both points, then take the cosine dissimilarity.
pub fn d_cosine_after_isp(p1: Point2, p2: Point2, r: f64) -> Result<f64> {
    let s1 = isp(p1, r)?;
    let s2 = isp(p2, r)?;
    d_cosine(&s1.to_array(), &s2.to_array())
}

impl DissimilarityKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            DissimilarityKind::NoisyQuantum { scale } if !(scale.is_finite() && *scale > 0.0) => {
                Err(Error::invalid(format!(
                    "noisy-quantum scale must be positive, got {scale}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, a: &[f64], b: &[f64], key: DrawKey) -> Result<f64> {
        match *self {
            DissimilarityKind::Euclidean => d_euclidean(a, b),
            DissimilarityKind::Cosine => d_cosine(a, b),
            DissimilarityKind::QuantumExact => d_quantum_exact(a, b),
            DissimilarityKind::QuantumShots(cfg) => d_quantum_shots(
                Point3::from_slice(a)?,
                Point3::from_slice(b)?,
                cfg.derive(&[key.iteration, key.point, key.centroid]),
            ),
            DissimilarityKind::NoisyQuantum { scale } => {
                let a = BlochVector::new(Point3::from_slice(a)? * (1.0 / scale))?;
                let b = BlochVector::new(Point3::from_slice(b)? * (1.0 / scale))?;
                Ok(quantum::noisy_quantum_dissimilarity(&a, &b))
            }
        }
    }

    /// Stable name used in reports and seeds.
    pub fn name(&self) -> &'static str {
        match self {
            DissimilarityKind::Euclidean => "euclidean",
            DissimilarityKind::Cosine => "cosine",
            DissimilarityKind::QuantumExact => "quantum-exact",
            DissimilarityKind::QuantumShots(_) => "quantum-shots",
            DissimilarityKind::NoisyQuantum { .. } => "noisy-quantum",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{bloch_embed, fidelity_pure};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn euclidean_examples() {
        assert_eq!(d_euclidean(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        assert_eq!(d_euclidean(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 25.0);
        let a = [0.3, -1.2, 4.4];
        let b = [-2.0, 0.7, 1.1];
        let oracle = (0.3f64 + 2.0).powi(2) + (-1.2f64 - 0.7).powi(2) + (4.4f64 - 1.1).powi(2);
        assert_abs_diff_eq!(d_euclidean(&a, &b).unwrap(), oracle, epsilon = 1e-12);
        assert!(d_euclidean(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn cosine_examples() {
        assert_abs_diff_eq!(
            d_cosine(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            d_cosine(&[1.0, 2.0], &[-1.0, -2.0]).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            d_cosine(&[1.0, 0.0], &[0.0, 5.0]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert!(matches!(
            d_cosine(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::DegenerateDirection(_))
        ));
    }

    #[test]
    fn quantum_exact_examples() {
        let p = [0.3, 0.4, -1.0];
        assert_abs_diff_eq!(d_quantum_exact(&p, &p).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            d_quantum_exact(&p, &[-0.3, -0.4, 1.0]).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            d_quantum_exact(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(),
            0.25,
            epsilon = 1e-15
        );
        assert!(d_quantum_exact(&[0.0; 3], &p).is_err());
    }

    #[test]
    fn quantum_shots_examples() {
        let p = Point3::new(1.0, 2.0, 2.0);
        let cfg = ShotConfig::new(4096, 1).unwrap();
        assert_eq!(d_quantum_shots(p, p * 3.0, cfg).unwrap(), 0.0);

        let big = ShotConfig::new(1_000_000, 2).unwrap();
        let d = d_quantum_shots(p, -p, big).unwrap();
        assert!((d - 0.5).abs() <= 3.0 * (0.25f64 / 1e6).sqrt());
        assert_eq!(d, d_quantum_shots(p, -p, big).unwrap());
        assert!(d_quantum_shots(Point3::default(), p, cfg).is_err());
    }

    #[test]
    fn stereo_composed_examples() {
        let p = Point2::new(0.7, -0.2);
        assert_eq!(d_stereo_composed(p, p, 2.0).unwrap(), 0.0);
        // south pole against a point of the equator
        let r = 1.7;
        let q = Point2::new(r * 0.6, r * 0.8);
        assert_abs_diff_eq!(
            d_stereo_composed(Point2::new(0.0, 0.0), q, r).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let a = Point2::new(1.3, 0.4);
        let b = Point2::new(-0.5, 2.2);
        assert_abs_diff_eq!(
            d_stereo_composed(a, b, 2.0).unwrap(),
            d_cosine_after_isp(a, b, 2.0).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn noisy_kind_scales_into_the_ball() {
        let kind = DissimilarityKind::NoisyQuantum { scale: 2.0 };
        let d = kind
            .evaluate(&[0.0, 0.0, 1.0], &[0.0, 0.0, 2.0], DrawKey::default())
            .unwrap();
        assert_abs_diff_eq!(d, 0.125, epsilon = 1e-15);
        assert!(kind
            .evaluate(&[0.0, 0.0, 3.0], &[0.0, 0.0, 2.0], DrawKey::default())
            .is_err());
        assert!(DissimilarityKind::NoisyQuantum { scale: 0.0 }
            .validate()
            .is_err());
    }

    fn vec3() -> impl Strategy<Value = Point3> {
        (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64)
            .prop_map(|(x, y, z)| Point3::new(x, y, z))
            .prop_filter("nonzero", |p| p.norm() > 1e-3)
    }

    proptest! {
        #[test]
        fn quantum_exact_matches_fidelity_path(a in vec3(), b in vec3()) {
            let fid = fidelity_pure(&bloch_embed(a).unwrap(), &bloch_embed(b).unwrap());
            let dq = d_quantum_exact(&a.to_array(), &b.to_array()).unwrap();
            prop_assert!((dq - 0.5 * (1.0 - fid)).abs() <= 1e-12);
        }

        #[test]
        fn cosine_is_scale_invariant(a in vec3(), b in vec3(), c in prop::sample::select(vec![1e-6, 1.0, 1e6])) {
            let base = d_cosine(&a.to_array(), &b.to_array()).unwrap();
            let scaled = d_cosine(&(a * c).to_array(), &b.to_array()).unwrap();
            prop_assert!((base - scaled).abs() <= 1e-12);
            let q = d_quantum_exact(&(a * c).to_array(), &b.to_array()).unwrap();
            prop_assert!((q - base / 4.0).abs() <= 1e-12);
        }

        #[test]
        fn quantum_is_euclid_over_8r2_on_sphere(a in vec3(), b in vec3(), r in 0.1..10.0f64) {
            let sa = a.normalized().unwrap() * r;
            let sb = b.normalized().unwrap() * r;
            let dq = d_quantum_exact(&sa.to_array(), &sb.to_array()).unwrap();
            let de = d_euclidean(&sa.to_array(), &sb.to_array()).unwrap();
            prop_assert!((dq - de / (8.0 * r * r)).abs() <= 1e-12);
        }

        #[test]
        fn dissimilarities_are_nonnegative(a in vec3(), b in vec3()) {
            for kind in [DissimilarityKind::Euclidean, DissimilarityKind::Cosine, DissimilarityKind::QuantumExact] {
                prop_assert!(kind.evaluate(&a.to_array(), &b.to_array(), DrawKey::default()).unwrap() >= 0.0);
            }
        }
    }
}
