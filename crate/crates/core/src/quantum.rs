//! Single-qubit machinery on the Bloch sphere.
//!
//! A pure qubit is prepared from angles as `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`;
//! its Bloch vector is `(sin θ cos φ, sin θ sin φ, cos θ)`. Overlaps are
//! estimated with a destructive Bell-state measurement: apply CNOT, then H on
//! the first qubit, then measure both. The outcome `11` occurs with
//! probability `½(1 − |⟨ψ|χ⟩|²)`, which is the quantity clustering uses as a
//! dissimilarity.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::geometry::{Point3, SphereAngles};
use crate::seed;

const NORM_TOL: f64 = 1e-12;

/// Above this many shots the outcome count is drawn from a binomial in one
/// step instead of simulating each shot.
pub const PER_SHOT_LIMIT: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureQubit {
    amp0: Complex64,
    amp1: Complex64,
}

/// A (possibly mixed) qubit state `ρ = ½(𝟙 + a·σ)` with `‖a‖ ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector(Point3);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotConfig {
    shots: u64,
    seed: u64,
}

/// How a Bell-measurement probability is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Exact,
    Sampled(ShotConfig),
}

/// Spectral decomposition of a mixed state into two antipodal pure states:
/// `ρ_a = p·ρ(plus) + (1 − p)·ρ(minus)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSplit {
    pub weight: f64,
    pub plus: BlochVector,
    pub minus: BlochVector,
}

impl PureQubit {
    pub fn new(amp0: Complex64, amp1: Complex64) -> Result<Self> {
        let n = amp0.norm_sqr() + amp1.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL || !n.is_finite() {
            return Err(Error::InvalidState(format!(
                "amplitudes have squared norm {n}, expected 1"
            )));
        }
        Ok(PureQubit { amp0, amp1 })
    }

    pub fn zero() -> Self {
        PureQubit {
            amp0: Complex64::new(1.0, 0.0),
            amp1: Complex64::new(0.0, 0.0),
        }
    }

    pub fn amplitudes(&self) -> (Complex64, Complex64) {
        (self.amp0, self.amp1)
    }

    /// The same state multiplied by `e^{iλ}`.
    pub fn with_global_phase(&self, lambda: f64) -> Self {
        let ph = Complex64::from_polar(1.0, lambda);
        PureQubit {
            amp0: self.amp0 * ph,
            amp1: self.amp1 * ph,
        }
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &PureQubit) -> Complex64 {
        self.amp0.conj() * other.amp0 + self.amp1.conj() * other.amp1
    }

    pub fn bloch_vector(&self) -> Point3 {
        let c = self.amp0.conj() * self.amp1;
        Point3::new(
            2.0 * c.re,
            2.0 * c.im,
            self.amp0.norm_sqr() - self.amp1.norm_sqr(),
        )
    }
}

impl BlochVector {
    pub fn new(a: Point3) -> Result<Self> {
        let n = a.norm();
        if !a.is_finite() || n > 1.0 + NORM_TOL {
            return Err(Error::InvalidState(format!(
                "Bloch vector {a:?} lies outside the unit ball (norm {n})"
            )));
        }
        Ok(BlochVector(a))
    }

    pub fn vector(&self) -> Point3 {
        self.0
    }

    /// Density matrix `½(𝟙 + a·σ)` in row-major order.
    pub fn density_matrix(&self) -> [[Complex64; 2]; 2] {
        let Point3 { x, y, z } = self.0;
        [
            [
                Complex64::new((1.0 + z) / 2.0, 0.0),
                Complex64::new(x / 2.0, -y / 2.0),
            ],
            [
                Complex64::new(x / 2.0, y / 2.0),
                Complex64::new((1.0 - z) / 2.0, 0.0),
            ],
        ]
    }
}

impl ShotConfig {
    pub fn new(shots: u64, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::invalid("shot count must be at least 1"));
        }
        Ok(ShotConfig { shots, seed })
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same shot budget, seed re-keyed by `parts`.
    pub fn derive(&self, parts: &[u64]) -> ShotConfig {
        ShotConfig {
            shots: self.shots,
            seed: seed::derive(self.seed, parts),
        }
    }
}

/// `U(θ, φ)|0⟩ = cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
pub fn prepare(angles: SphereAngles) -> PureQubit {
    let (s, c) = (angles.theta / 2.0).sin_cos();
    PureQubit {
        amp0: Complex64::new(c, 0.0),
        amp1: Complex64::from_polar(s, angles.phi),
    }
}

/// Pure state whose Bloch vector is the direction of `v`.
pub fn bloch_embed(v: Point3) -> Result<PureQubit> {
    crate::geometry::angles_of(v).map(prepare)
}

/// `|⟨q1|q2⟩|²`
pub fn fidelity_pure(q1: &PureQubit, q2: &PureQubit) -> f64 {
    q1.inner(q2).norm_sqr()
}

/// Probability of the `11` outcome of the Bell-state measurement on `q1 ⊗ q2`.
pub fn bell_p11_exact(q1: &PureQubit, q2: &PureQubit) -> f64 {
    // rounding can push the fidelity a hair above 1
    (0.5 * (1.0 - fidelity_pure(q1, q2))).max(0.0)
}

/// Number of successes in `shots` Bernoulli(`p`) trials, reproducible from `seed`.
pub fn sample_binomial(p: f64, shots: u64, seed: u64) -> u64 {
    let p = p.clamp(0.0, 1.0);
    if p == 0.0 {
        return 0;
    }
    if p == 1.0 {
        return shots;
    }
    let mut rng = seed::rng_from(seed);
    if shots <= PER_SHOT_LIMIT {
        (0..shots).filter(|_| rng.random::<f64>() < p).count() as u64
    } else {
        Binomial::new(shots, p)
            .expect("p is a probability")
            .sample(&mut rng)
    }
}

/// Shot estimate `k / shots` of [`bell_p11_exact`].
pub fn bell_p11_sampled(q1: &PureQubit, q2: &PureQubit, cfg: ShotConfig) -> f64 {
    let k = sample_binomial(bell_p11_exact(q1, q2), cfg.shots, cfg.seed);
    k as f64 / cfg.shots as f64
}

pub fn bell_p11(q1: &PureQubit, q2: &PureQubit, estimator: Estimator) -> f64 {
    match estimator {
        Estimator::Exact => bell_p11_exact(q1, q2),
        Estimator::Sampled(cfg) => bell_p11_sampled(q1, q2, cfg),
    }
}

/// `½(1 − tr(ρ₁ρ₂))`, evaluated on the density matrices.
///
/// For Bloch vectors this equals `¼(1 − a₁·a₂)`; for unit vectors it coincides
/// with the pure-state Bell probability.
pub fn noisy_quantum_dissimilarity(a1: &BlochVector, a2: &BlochVector) -> f64 {
    let r1 = a1.density_matrix();
    let r2 = a2.density_matrix();
    let mut trace = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for k in 0..2 {
            trace += r1[i][k] * r2[k][i];
        }
    }
    0.5 * (1.0 - trace.re)
}

pub fn eigen_split(a: &BlochVector) -> Result<EigenSplit> {
    let n = a.0.norm();
    if n == 0.0 {
        return Err(Error::DegenerateDirection(
            "the maximally mixed state has no eigen-axis".into(),
        ));
    }
    let dir = a.0 * (1.0 / n);
    Ok(EigenSplit {
        weight: 0.5 * (1.0 + n),
        plus: BlochVector(dir),
        minus: BlochVector(-dir),
    })
}

/// Dense angle encoding: consecutive feature pairs `(θ, φ)` become one qubit each.
///
/// Odd-length inputs are rejected; pad with a trailing `0.0` first.
pub fn dense_angle_encode(features: &[f64]) -> Result<Vec<PureQubit>> {
    if features.is_empty() || !features.len().is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "dense angle encoding needs a nonempty even-length vector, got length {}",
            features.len()
        )));
    }
    if features.iter().any(|f| !f.is_finite()) {
        return Err(Error::invalid("non-finite feature"));
    }
    Ok(features
        .chunks_exact(2)
        .map(|pair| {
            prepare(SphereAngles {
                theta: pair[0],
                phi: pair[1],
            })
        })
        .collect())
}

/// Sum of pairwise Bell `11` probabilities between the dense encodings of `f1` and `f2`.
///
/// Sampled mode draws each pair with its own seed, derived from the pair index.
pub fn high_dim_quantum_dissimilarity(f1: &[f64], f2: &[f64], estimator: Estimator) -> Result<f64> {
    if f1.len() != f2.len() {
        return Err(Error::invalid(format!(
            "feature length mismatch: {} vs {}",
            f1.len(),
            f2.len()
        )));
    }
    let q1 = dense_angle_encode(f1)?;
    let q2 = dense_angle_encode(f2)?;
    Ok(q1
        .iter()
        .zip(&q2)
        .enumerate()
        .map(|(j, (a, b))| match estimator {
            Estimator::Exact => bell_p11_exact(a, b),
            Estimator::Sampled(cfg) => bell_p11_sampled(a, b, cfg.derive(&[j as u64])),
        })
        .sum())
}

/// Probability `(1/d)(v₁·v₂)²` of projecting `v₁ ⊗ v₂` onto the maximally
/// entangled qudit state `(1/√d) Σᵢ |ii⟩`, for real unit vectors.
pub fn qudit_bell_outcome_probability(v1: &[f64], v2: &[f64]) -> Result<f64> {
    if v1.len() != v2.len() || v1.is_empty() {
        return Err(Error::invalid(
            "qudit vectors must be nonempty and of equal dimension",
        ));
    }
    for v in [v1, v2] {
        let n: f64 = v.iter().map(|x| x * x).sum();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "qudit vector has squared norm {n}, expected 1"
            )));
        }
    }
    let d = v1.len() as f64;
    let dot: f64 = v1.iter().zip(v2).map(|(a, b)| a * b).sum();
    Ok(dot * dot / d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn ang(theta: f64, phi: f64) -> SphereAngles {
        SphereAngles { theta, phi }
    }

    #[test]
    fn prepare_examples() {
        let q = prepare(ang(0.0, 0.0));
        assert_eq!(
            q.amplitudes(),
            (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
        );

        let (a0, a1) = prepare(ang(PI, 0.0)).amplitudes();
        assert_abs_diff_eq!(a0.norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a1.re, 1.0, epsilon = 1e-15);

        let (a0, a1) = prepare(ang(FRAC_PI_2, FRAC_PI_2)).amplitudes();
        assert_abs_diff_eq!(a0.re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(a1.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a1.im, FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_examples() {
        let zero = prepare(ang(0.0, 0.0));
        let one = prepare(ang(PI, 0.0));
        assert_abs_diff_eq!(fidelity_pure(&zero, &zero), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity_pure(&zero, &one), 0.0, epsilon = 1e-15);
        let plus = prepare(ang(FRAC_PI_2, 0.0));
        assert_abs_diff_eq!(fidelity_pure(&zero, &plus), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn unnormalised_amplitudes_are_rejected() {
        let err = PureQubit::new(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        assert!(matches!(err, Err(Error::InvalidState(_))));
        assert!(BlochVector::new(Point3::new(0.0, 0.8, 0.8)).is_err());
    }

    #[test]
    fn bell_p11_examples() {
        let a = prepare(ang(1.1, -0.3));
        assert_abs_diff_eq!(bell_p11_exact(&a, &a), 0.0, epsilon = 1e-15);
        let zero = PureQubit::zero();
        let one = prepare(ang(PI, 0.0));
        assert_abs_diff_eq!(bell_p11_exact(&zero, &one), 0.5, epsilon = 1e-15);

        // |+⟩ vs |+i⟩: output amplitude on |11⟩ is (ψ₀χ₁ − ψ₁χ₀)/√2 = (i/2 − 1/2)/√2
        let q1 = prepare(ang(FRAC_PI_2, 0.0));
        let q2 = prepare(ang(FRAC_PI_2, FRAC_PI_2));
        let (p0, p1) = q1.amplitudes();
        let (c0, c1) = q2.amplitudes();
        let amp11 = (p0 * c1 - p1 * c0) / 2f64.sqrt();
        assert_abs_diff_eq!(amp11.norm_sqr(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(bell_p11_exact(&q1, &q2), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn sampled_examples() {
        let a = prepare(ang(0.4, 2.0));
        let cfg = ShotConfig::new(500, 3).unwrap();
        assert_eq!(bell_p11_sampled(&a, &a, cfg), 0.0);

        let zero = PureQubit::zero();
        let one = prepare(ang(PI, 0.0));
        let cfg = ShotConfig::new(1_000_000, 11).unwrap();
        let est = bell_p11_sampled(&zero, &one, cfg);
        assert!((est - 0.5).abs() <= 3.0 * (0.25f64 / 1e6).sqrt(), "{est}");
        assert_eq!(est, bell_p11_sampled(&zero, &one, cfg));

        let small = ShotConfig::new(200, 5).unwrap();
        assert_eq!(
            bell_p11_sampled(&zero, &one, small),
            bell_p11_sampled(&zero, &one, small)
        );
        assert!(ShotConfig::new(0, 1).is_err());
    }

    #[test]
    fn per_shot_and_binomial_paths_agree_in_distribution() {
        // both sides of the PER_SHOT_LIMIT switch should centre on p
        for shots in [PER_SHOT_LIMIT, PER_SHOT_LIMIT + 1] {
            let p = 0.3;
            let reps = 400;
            let mean: f64 = (0..reps)
                .map(|s| sample_binomial(p, shots, s) as f64 / shots as f64)
                .sum::<f64>()
                / reps as f64;
            let se = (p * (1.0 - p) / (shots as f64 * reps as f64)).sqrt();
            assert!((mean - p).abs() < 4.0 * se, "shots={shots} mean={mean}");
        }
    }

    #[test]
    fn noisy_dissimilarity_examples() {
        let up = BlochVector::new(Point3::new(0.0, 0.0, 1.0)).unwrap();
        let down = BlochVector::new(Point3::new(0.0, 0.0, -1.0)).unwrap();
        let half = BlochVector::new(Point3::new(0.0, 0.0, 0.5)).unwrap();
        assert_abs_diff_eq!(noisy_quantum_dissimilarity(&up, &up), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            noisy_quantum_dissimilarity(&up, &down),
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            noisy_quantum_dissimilarity(&half, &up),
            0.125,
            epsilon = 1e-15
        );
    }

    #[test]
    fn eigen_split_examples() {
        let u = Point3::new(0.6, 0.0, 0.8);
        let s = eigen_split(&BlochVector::new(u).unwrap()).unwrap();
        assert_abs_diff_eq!(s.weight, 1.0, epsilon = 1e-15);
        assert_eq!(s.plus.vector(), u);

        let s = eigen_split(&BlochVector::new(Point3::new(0.0, 0.0, 0.5)).unwrap()).unwrap();
        assert_abs_diff_eq!(s.weight, 0.75, epsilon = 1e-15);
        assert_eq!(s.plus.vector(), Point3::new(0.0, 0.0, 1.0));
        assert_eq!(s.minus.vector(), Point3::new(0.0, 0.0, -1.0));

        assert!(eigen_split(&BlochVector::new(Point3::default()).unwrap()).is_err());
    }

    #[test]
    fn dense_encoding_examples() {
        let q = dense_angle_encode(&[0.3, 1.2]).unwrap();
        assert_eq!(q, vec![prepare(ang(0.3, 1.2))]);
        assert_eq!(
            dense_angle_encode(&[0.0; 4]).unwrap(),
            vec![PureQubit::zero(); 2]
        );
        assert!(dense_angle_encode(&[0.1, 0.2, 0.3]).is_err());

        let f1 = [0.4, -1.0, 2.2, 0.9];
        let f2 = [1.7, 0.5, 0.3, -2.4];
        let per_pair = bell_p11_exact(&prepare(ang(0.4, -1.0)), &prepare(ang(1.7, 0.5)))
            + bell_p11_exact(&prepare(ang(2.2, 0.9)), &prepare(ang(0.3, -2.4)));
        let d = high_dim_quantum_dissimilarity(&f1, &f2, Estimator::Exact).unwrap();
        assert_abs_diff_eq!(d, per_pair, epsilon = 1e-15);
    }

    #[test]
    fn high_dim_examples() {
        let f = [0.2, 0.4, 1.0, 3.0];
        assert_abs_diff_eq!(
            high_dim_quantum_dissimilarity(&f, &f, Estimator::Exact).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        // θ = 0 vs θ = π in every pair: orthogonal qubits
        let g = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let h = [PI, 0.0, PI, 1.0, PI, -2.0];
        assert_abs_diff_eq!(
            high_dim_quantum_dissimilarity(&g, &h, Estimator::Exact).unwrap(),
            1.5,
            epsilon = 1e-15
        );
        assert!(high_dim_quantum_dissimilarity(&f, &g, Estimator::Exact).is_err());

        let cfg = ShotConfig::new(2000, 9).unwrap();
        let a = high_dim_quantum_dissimilarity(&g, &h, Estimator::Sampled(cfg)).unwrap();
        assert_abs_diff_eq!(a, 1.5, epsilon = 0.1);
        assert_eq!(
            a,
            high_dim_quantum_dissimilarity(&g, &h, Estimator::Sampled(cfg)).unwrap()
        );
    }

    #[test]
    fn qudit_examples() {
        assert_abs_diff_eq!(
            qudit_bell_outcome_probability(&[1.0, 0.0], &[1.0, 0.0]).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            qudit_bell_outcome_probability(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        // v₁·v₂ = 0.5 in four dimensions
        let v1 = [1.0, 0.0, 0.0, 0.0];
        let v2 = [0.5, 0.5, 0.5, 0.5];
        assert_abs_diff_eq!(
            qudit_bell_outcome_probability(&v1, &v2).unwrap(),
            1.0 / 16.0,
            epsilon = 1e-15
        );
        assert!(qudit_bell_outcome_probability(&[1.0, 1.0], &[1.0, 0.0]).is_err());
    }

    fn angles() -> impl Strategy<Value = SphereAngles> {
        (0.0..PI, -PI..PI).prop_map(|(theta, phi)| ang(theta, phi))
    }

    proptest! {
        #[test]
        fn fidelity_matches_bloch_overlap(a in angles(), b in angles()) {
            let f = fidelity_pure(&prepare(a), &prepare(b));
            let bloch = 0.5 * (1.0 + a.unit_vector().dot(b.unit_vector()));
            prop_assert!((f - bloch).abs() <= 1e-12);
            let v = prepare(a).bloch_vector();
            let u = a.unit_vector();
            prop_assert!((v - u).norm() <= 1e-12);
        }

        #[test]
        fn global_phase_is_invisible(a in angles(), b in angles(), l1 in -PI..PI, l2 in -PI..PI) {
            let (q1, q2) = (prepare(a), prepare(b));
            let (p1, p2) = (q1.with_global_phase(l1), q2.with_global_phase(l2));
            prop_assert!((fidelity_pure(&q1, &q2) - fidelity_pure(&p1, &p2)).abs() <= 1e-12);
            prop_assert!((bell_p11_exact(&q1, &q2) - bell_p11_exact(&p1, &p2)).abs() <= 1e-12);
        }

        #[test]
        fn noisy_dissimilarity_is_quarter_overlap(
            x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64,
            u in -1.0..1.0f64, v in -1.0..1.0f64, w in -1.0..1.0f64,
        ) {
            let a = Point3::new(x, y, z) * (1.0 / 3f64.sqrt());
            let b = Point3::new(u, v, w) * (1.0 / 3f64.sqrt());
            let d = noisy_quantum_dissimilarity(&BlochVector::new(a).unwrap(), &BlochVector::new(b).unwrap());
            prop_assert!((d - 0.25 * (1.0 - a.dot(b))).abs() <= 1e-12);
        }

        #[test]
        fn eigen_split_reconstructs(x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64) {
            let a = Point3::new(x, y, z) * (1.0 / 3f64.sqrt());
            prop_assume!(a.norm() > 1e-9);
            let s = eigen_split(&BlochVector::new(a).unwrap()).unwrap();
            let back = s.plus.vector() * s.weight + s.minus.vector() * (1.0 - s.weight);
            prop_assert!((back - a).norm() <= 1e-12);
            prop_assert!((0.5..=1.0).contains(&s.weight));
        }
    }
}
