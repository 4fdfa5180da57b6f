//! Measure descriptions and their moments.

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Normal};
use serde::{Deserialize, Deserializer, Serialize};

use crate::basis::{AffineFrame, MomentSource};
use crate::dd::Dd;
use crate::error::{Result, TvError};
use crate::moments::{basis_indices, MomentSequence};

fn scalar_or_vec<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Scalar(f64),
        Vector(Vec<f64>),
    }
    Ok(match Repr::deserialize(d)? {
        Repr::Scalar(x) => vec![x],
        Repr::Vector(v) => v,
    })
}

fn samples_repr<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<Vec<f64>>>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Scalars(Vec<f64>),
        Vectors(Vec<Vec<f64>>),
    }
    Ok(Option::<Repr>::deserialize(d)?.map(|r| match r {
        Repr::Scalars(v) => v.into_iter().map(|x| vec![x]).collect(),
        Repr::Vectors(v) => v,
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(deserialize_with = "scalar_or_vec")]
    pub point: Vec<f64>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub measure: MeasureSpec,
}

/// Draw `count` samples from `from` (materialized with a seed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleDraw {
    pub from: Box<MeasureSpec>,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MeasureSpec {
    Gaussian {
        mean: f64,
        stddev: f64,
    },
    Atomic {
        atoms: Vec<Atom>,
    },
    Mixture {
        components: Vec<Component>,
    },
    Exponential {
        rate: f64,
    },
    Empirical {
        #[serde(default, deserialize_with = "samples_repr", skip_serializing_if = "Option::is_none")]
        samples: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        draw: Option<SampleDraw>,
    },
}

impl MeasureSpec {
    pub fn gaussian(mean: f64, stddev: f64) -> Self {
        MeasureSpec::Gaussian { mean, stddev }
    }

    /// Univariate atomic measure from `(point, weight)` pairs.
    pub fn atomic(atoms: &[(f64, f64)]) -> Self {
        MeasureSpec::Atomic {
            atoms: atoms
                .iter()
                .map(|&(x, w)| Atom {
                    point: vec![x],
                    weight: w,
                })
                .collect(),
        }
    }

    /// Equal-weight probability measure on the given points.
    pub fn uniform_atoms(points: &[f64]) -> Self {
        let w = 1.0 / points.len() as f64;
        MeasureSpec::atomic(&points.iter().map(|&x| (x, w)).collect::<Vec<_>>())
    }

    pub fn dirac(x: f64) -> Self {
        MeasureSpec::atomic(&[(x, 1.0)])
    }

    pub fn mixture(components: Vec<(f64, MeasureSpec)>) -> Self {
        MeasureSpec::Mixture {
            components: components
                .into_iter()
                .map(|(weight, measure)| Component { weight, measure })
                .collect(),
        }
    }

    pub fn empirical(samples: Vec<Vec<f64>>) -> Self {
        MeasureSpec::Empirical {
            samples: Some(samples),
            draw: None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MeasureSpec::Gaussian { .. } | MeasureSpec::Exponential { .. } => 1,
            MeasureSpec::Atomic { atoms } => atoms.first().map_or(1, |a| a.point.len()),
            MeasureSpec::Mixture { components } => components.first().map_or(1, |c| c.measure.dim()),
            MeasureSpec::Empirical { samples, draw } => match (samples, draw) {
                (Some(s), _) if !s.is_empty() => s[0].len(),
                (_, Some(d)) => d.from.dim(),
                _ => 1,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(TvError::InvalidMeasure(s));
        match self {
            MeasureSpec::Gaussian { mean, stddev } => {
                if !mean.is_finite() || !(*stddev > 0.0) || !stddev.is_finite() {
                    return bad(format!("gaussian needs finite mean and positive stddev, got ({mean}, {stddev})"));
                }
            }
            MeasureSpec::Exponential { rate } => {
                if !(*rate > 0.0) || !rate.is_finite() {
                    return bad(format!("exponential rate must be positive, got {rate}"));
                }
            }
            MeasureSpec::Atomic { atoms } => {
                if atoms.is_empty() {
                    return bad("atomic measure without atoms".into());
                }
                let d = atoms[0].point.len();
                if d == 0 {
                    return bad("atom with empty point".into());
                }
                for a in atoms {
                    if a.point.len() != d {
                        return Err(TvError::DimensionMismatch(d, a.point.len()));
                    }
                    if !(a.weight > 0.0) || !a.weight.is_finite() {
                        return bad(format!("atomic weights must be positive, got {}", a.weight));
                    }
                    if a.point.iter().any(|x| !x.is_finite()) {
                        return bad("non-finite atom location".into());
                    }
                }
            }
            MeasureSpec::Mixture { components } => {
                if components.is_empty() {
                    return bad("mixture without components".into());
                }
                let d = components[0].measure.dim();
                let mut total = 0.0;
                for c in components {
                    if !(c.weight > 0.0) {
                        return bad(format!("mixture weights must be positive, got {}", c.weight));
                    }
                    c.measure.validate()?;
                    if c.measure.dim() != d {
                        return Err(TvError::DimensionMismatch(d, c.measure.dim()));
                    }
                    total += c.weight;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return bad(format!("mixture weights sum to {total}, not 1"));
                }
            }
            MeasureSpec::Empirical { samples, draw } => match (samples, draw) {
                (Some(s), None) => {
                    if s.is_empty() {
                        return Err(TvError::EmptySample);
                    }
                    let d = s[0].len();
                    if let Some(x) = s.iter().find(|x| x.len() != d) {
                        return Err(TvError::DimensionMismatch(d, x.len()));
                    }
                }
                (None, Some(d)) => {
                    if d.count == 0 {
                        return Err(TvError::EmptySample);
                    }
                    d.from.validate()?;
                }
                _ => return bad("empirical measure needs exactly one of `samples` or `draw`".into()),
            },
        }
        Ok(())
    }

    /// Replace every sample draw by concrete samples from a seeded generator.
    pub fn materialize(&self, seed: u64) -> Result<MeasureSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.materialize_with(&mut rng)
    }

    fn materialize_with(&self, rng: &mut ChaCha8Rng) -> Result<MeasureSpec> {
        Ok(match self {
            MeasureSpec::Empirical { draw: Some(d), .. } => {
                let samples = (0..d.count).map(|_| d.from.sample(rng)).collect::<Result<Vec<_>>>()?;
                MeasureSpec::empirical(samples)
            }
            MeasureSpec::Mixture { components } => MeasureSpec::Mixture {
                components: components
                    .iter()
                    .map(|c| {
                        Ok(Component {
                            weight: c.weight,
                            measure: c.measure.materialize_with(rng)?,
                        })
                    })
                    .collect::<Result<_>>()?,
            },
            other => other.clone(),
        })
    }

    /// One draw from the (normalized) measure.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let invalid = |e: String| TvError::InvalidMeasure(e);
        match self {
            MeasureSpec::Gaussian { mean, stddev } => {
                let n = Normal::new(*mean, *stddev).map_err(|e| invalid(e.to_string()))?;
                Ok(vec![n.sample(rng)])
            }
            MeasureSpec::Exponential { rate } => {
                let e = Exp::new(*rate).map_err(|e| invalid(e.to_string()))?;
                Ok(vec![e.sample(rng)])
            }
            MeasureSpec::Atomic { atoms } => {
                let w = WeightedIndex::new(atoms.iter().map(|a| a.weight)).map_err(|e| invalid(e.to_string()))?;
                Ok(atoms[w.sample(rng)].point.clone())
            }
            MeasureSpec::Mixture { components } => {
                let w = WeightedIndex::new(components.iter().map(|c| c.weight))
                    .map_err(|e| invalid(e.to_string()))?;
                components[w.sample(rng)].measure.sample(rng)
            }
            MeasureSpec::Empirical { samples: Some(s), .. } => {
                if s.is_empty() {
                    return Err(TvError::EmptySample);
                }
                Ok(s[rng.random_range(0..s.len())].clone())
            }
            MeasureSpec::Empirical { draw: Some(d), .. } => d.from.sample(rng),
            MeasureSpec::Empirical { .. } => Err(TvError::EmptySample),
        }
    }

    /// Density on ℝ, when the measure has one.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            MeasureSpec::Gaussian { mean, stddev } => {
                let z = (x - mean) / stddev;
                Some((-0.5 * z * z).exp() / (stddev * (2.0 * std::f64::consts::PI).sqrt()))
            }
            MeasureSpec::Exponential { rate } => Some(if x < 0.0 { 0.0 } else { rate * (-rate * x).exp() }),
            MeasureSpec::Mixture { components } => components
                .iter()
                .map(|c| c.measure.density(x).map(|f| c.weight * f))
                .sum(),
            _ => None,
        }
    }

    pub fn has_density(&self) -> bool {
        match self {
            MeasureSpec::Gaussian { .. } | MeasureSpec::Exponential { .. } => true,
            MeasureSpec::Mixture { components } => components.iter().all(|c| c.measure.has_density()),
            _ => false,
        }
    }

    /// Atomic form of atomic/empirical measures and mixtures of them.
    pub fn as_atomic(&self) -> Option<AtomicMeasure> {
        match self {
            MeasureSpec::Atomic { atoms } => Some(AtomicMeasure { atoms: atoms.clone() }),
            MeasureSpec::Empirical { samples: Some(s), .. } if !s.is_empty() => {
                let w = 1.0 / s.len() as f64;
                Some(AtomicMeasure {
                    atoms: s.iter().map(|p| Atom { point: p.clone(), weight: w }).collect(),
                })
            }
            MeasureSpec::Mixture { components } => {
                let mut atoms = Vec::new();
                for c in components {
                    for a in c.measure.as_atomic()?.atoms {
                        atoms.push(Atom {
                            point: a.point,
                            weight: c.weight * a.weight,
                        });
                    }
                }
                Some(AtomicMeasure { atoms })
            }
            _ => None,
        }
    }

    /// Smallest interval holding all but a negligible fraction of the mass (univariate densities).
    pub(crate) fn effective_support(&self) -> Option<(f64, f64, Vec<f64>)> {
        match self {
            MeasureSpec::Gaussian { mean, stddev } => Some((mean - 12.0 * stddev, mean + 12.0 * stddev, vec![*mean])),
            MeasureSpec::Exponential { rate } => Some((0.0, 45.0 / rate, vec![0.0])),
            MeasureSpec::Mixture { components } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                let mut breaks = Vec::new();
                for c in components {
                    let (a, b, br) = c.measure.effective_support()?;
                    lo = lo.min(a);
                    hi = hi.max(b);
                    breaks.extend(br);
                }
                Some((lo, hi, breaks))
            }
            _ => None,
        }
    }
}

fn gaussian_frame_moments(mean: f64, stddev: f64, frame: &AffineFrame, degree: usize) -> Vec<Dd> {
    let h = Dd::new(frame.half_width[0]);
    let m = (Dd::new(mean) - Dd::new(frame.center[0])) / h;
    let var = (Dd::new(stddev) / h).powi(2);
    let mut out = Vec::with_capacity(degree + 1);
    out.push(Dd::ONE);
    if degree >= 1 {
        out.push(m);
    }
    for k in 2..=degree {
        let v = m * out[k - 1] + var * Dd::new((k - 1) as f64) * out[k - 2];
        out.push(v);
    }
    out
}

fn exponential_frame_moments(rate: f64, frame: &AffineFrame, degree: usize) -> Vec<Dd> {
    // E x^k = k!/λ^k, then shift and scale.
    let lam = Dd::new(rate);
    let mut raw = vec![Dd::ONE];
    for k in 1..=degree {
        let v = raw[k - 1] * Dd::new(k as f64) / lam;
        raw.push(v);
    }
    crate::basis::change_frame(&raw, 1, degree, frame)
}

/// `Σ_i w_i z_i^α` over the graded basis, with `z = frame(x)` computed in double-double.
fn atomic_frame_moments<'a>(
    atoms: impl Iterator<Item = (&'a [f64], f64)>,
    dim: usize,
    frame: &AffineFrame,
    degree: usize,
) -> Vec<Dd> {
    let basis = basis_indices(dim, degree);
    let mut out = vec![Dd::ZERO; basis.len()];
    let c: Vec<Dd> = frame.center.iter().map(|&v| Dd::new(v)).collect();
    let h: Vec<Dd> = frame.half_width.iter().map(|&v| Dd::new(v)).collect();
    for (p, w) in atoms {
        let w = Dd::new(w);
        let pows: Vec<Vec<Dd>> = (0..dim)
            .map(|i| {
                let z = (Dd::new(p[i]) - c[i]) / h[i];
                let mut v = vec![Dd::ONE];
                for k in 1..=degree {
                    let next = v[k - 1] * z;
                    v.push(next);
                }
                v
            })
            .collect();
        for (slot, alpha) in out.iter_mut().zip(basis.indices()) {
            let mut t = w;
            for (i, &a) in alpha.exponents().iter().enumerate() {
                t *= pows[i][a as usize];
            }
            *slot += t;
        }
    }
    out
}

impl MomentSource for MeasureSpec {
    fn dimension(&self) -> usize {
        self.dim()
    }

    fn available_degree(&self) -> Option<usize> {
        None
    }

    fn frame_moments(&self, frame: &AffineFrame, degree: usize) -> Result<Vec<Dd>> {
        let d = self.dim();
        if frame.dim() != d {
            return Err(TvError::DimensionMismatch(frame.dim(), d));
        }
        match self {
            MeasureSpec::Gaussian { mean, stddev } => Ok(gaussian_frame_moments(*mean, *stddev, frame, degree)),
            MeasureSpec::Exponential { rate } => Ok(exponential_frame_moments(*rate, frame, degree)),
            MeasureSpec::Atomic { atoms } => Ok(atomic_frame_moments(
                atoms.iter().map(|a| (a.point.as_slice(), a.weight)),
                d,
                frame,
                degree,
            )),
            MeasureSpec::Empirical { samples: Some(s), .. } => {
                if s.is_empty() {
                    return Err(TvError::EmptySample);
                }
                // Sum with unit weights, then divide once so the mass is exactly 1.
                let n = Dd::new(s.len() as f64);
                let sums = atomic_frame_moments(s.iter().map(|p| (p.as_slice(), 1.0)), d, frame, degree);
                let mut out: Vec<Dd> = sums.into_iter().map(|v| v / n).collect();
                out[0] = Dd::ONE;
                Ok(out)
            }
            MeasureSpec::Empirical { .. } => Err(TvError::InvalidMeasure(
                "empirical sample draw must be materialized with a seed first".into(),
            )),
            MeasureSpec::Mixture { components } => {
                let mut acc: Option<Vec<Dd>> = None;
                for c in components {
                    let m = c.measure.frame_moments(frame, degree)?;
                    let w = Dd::new(c.weight);
                    match &mut acc {
                        None => acc = Some(m.into_iter().map(|v| v * w).collect()),
                        Some(a) => {
                            for (a, v) in a.iter_mut().zip(m) {
                                *a += v * w;
                            }
                        }
                    }
                }
                acc.ok_or_else(|| TvError::InvalidMeasure("mixture without components".into()))
            }
        }
    }
}

/// Monomial moments of `spec` up to `max_degree`.
pub fn moments(spec: &MeasureSpec, d: usize, max_degree: usize) -> Result<MomentSequence> {
    if spec.dim() != d {
        return Err(TvError::DimensionMismatch(d, spec.dim()));
    }
    check_dimension(spec, d)?;
    let v = spec.frame_moments(&AffineFrame::identity(d), max_degree)?;
    MomentSequence::new(d, max_degree, v.into_iter().map(Dd::to_f64).collect())
}

pub(crate) fn check_dimension(spec: &MeasureSpec, d: usize) -> Result<()> {
    match spec {
        MeasureSpec::Gaussian { .. } if d > 1 => Err(TvError::UnsupportedDimension { what: "gaussian", dim: d }),
        MeasureSpec::Exponential { .. } if d > 1 => Err(TvError::UnsupportedDimension {
            what: "exponential",
            dim: d,
        }),
        MeasureSpec::Mixture { components } => components.iter().try_for_each(|c| check_dimension(&c.measure, d)),
        _ => Ok(()),
    }
}

/// Sample averages of every monomial up to `max_degree`; mass exactly 1.
pub fn empirical_moments(samples: &[Vec<f64>], max_degree: usize) -> Result<MomentSequence> {
    let first = samples.first().ok_or(TvError::EmptySample)?;
    let d = first.len();
    if let Some(x) = samples.iter().find(|x| x.len() != d) {
        return Err(TvError::DimensionMismatch(d, x.len()));
    }
    moments(&MeasureSpec::empirical(samples.to_vec()), d, max_degree)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn univariate(atoms: &[(f64, f64)]) -> Self {
        AtomicMeasure {
            atoms: atoms
                .iter()
                .map(|&(x, w)| Atom {
                    point: vec![x],
                    weight: w,
                })
                .collect(),
        }
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atoms sorted by location (lexicographic).
    pub fn sorted(&self) -> AtomicMeasure {
        let mut atoms = self.atoms.clone();
        atoms.sort_by(|a, b| a.point.partial_cmp(&b.point).unwrap_or(std::cmp::Ordering::Equal));
        AtomicMeasure { atoms }
    }

    pub fn moments(&self, max_degree: usize) -> MomentSequence {
        let d = self.atoms.first().map_or(1, |a| a.point.len());
        let v = atomic_frame_moments(
            self.atoms.iter().map(|a| (a.point.as_slice(), a.weight)),
            d,
            &AffineFrame::identity(d),
            max_degree,
        );
        MomentSequence::new(d, max_degree, v.into_iter().map(Dd::to_f64).collect()).expect("sizes match")
    }

    pub fn to_spec(&self) -> MeasureSpec {
        MeasureSpec::Atomic {
            atoms: self.atoms.clone(),
        }
    }
}

pub const MERGE_TOL: f64 = 1e-9;

/// `Σ_x |μ({x}) − ν({x})|` over the merged union of supports.
pub fn exact_tv_atomic(mu: &AtomicMeasure, nu: &AtomicMeasure) -> f64 {
    let mut signed: Vec<(&[f64], f64)> = mu
        .atoms
        .iter()
        .map(|a| (a.point.as_slice(), a.weight))
        .chain(nu.atoms.iter().map(|a| (a.point.as_slice(), -a.weight)))
        .collect();
    signed.sort_by(|a, b| a.0.partial_cmp(b.0).unwrap_or(std::cmp::Ordering::Equal));
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= MERGE_TOL);
    let mut clusters: Vec<(&[f64], f64)> = Vec::new();
    for (p, w) in signed {
        match clusters.iter_mut().find(|(q, _)| close(p, q)) {
            Some(c) => c.1 += w,
            None => clusters.push((p, w)),
        }
    }
    clusters.iter().map(|(_, w)| w.abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gaussian_moments() {
        let m = moments(&MeasureSpec::gaussian(0.0, 1.0), 1, 4).unwrap();
        assert_eq!(m.values(), &[1.0, 0.0, 1.0, 0.0, 3.0]);
        let m = moments(&MeasureSpec::gaussian(0.7, 2.0), 1, 1).unwrap();
        assert_eq!(m.values(), &[1.0, 0.7]);
        assert!(matches!(
            moments(&MeasureSpec::gaussian(0.0, 1.0), 2, 2),
            Err(TvError::DimensionMismatch(2, 1))
        ));
    }

    #[test]
    fn atomic_and_exponential_moments() {
        let m = moments(&MeasureSpec::atomic(&[(-1.0, 0.5), (1.0, 0.5)]), 1, 4).unwrap();
        assert_eq!(m.values(), &[1.0, 0.0, 1.0, 0.0, 1.0]);
        let m = moments(&MeasureSpec::Exponential { rate: 2.0 }, 1, 3).unwrap();
        assert_eq!(m.values(), &[1.0, 0.5, 0.5, 0.75]);
    }

    #[test]
    fn multivariate_atoms() {
        let spec = MeasureSpec::Atomic {
            atoms: vec![
                Atom {
                    point: vec![1.0, 2.0],
                    weight: 0.5,
                },
                Atom {
                    point: vec![-1.0, 0.0],
                    weight: 0.5,
                },
            ],
        };
        let m = moments(&spec, 2, 2).unwrap();
        // 1, x, y, x², xy, y²
        assert_eq!(m.values(), &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn empirical_cases() {
        assert_eq!(empirical_moments(&[], 2), Err(TvError::EmptySample));
        let m = empirical_moments(&vec![vec![0.0]; 7], 2).unwrap();
        assert_eq!(m.values(), &[1.0, 0.0, 0.0]);
        let m = empirical_moments(&[vec![-1.0], vec![1.0]], 2).unwrap();
        assert_eq!(m.values(), &[1.0, 0.0, 1.0]);
        assert!(matches!(
            empirical_moments(&[vec![0.0], vec![1.0, 2.0]], 2),
            Err(TvError::DimensionMismatch(1, 2))
        ));
    }

    #[test]
    fn seeded_draws_are_reproducible() {
        let spec = MeasureSpec::Empirical {
            samples: None,
            draw: Some(SampleDraw {
                from: Box::new(MeasureSpec::gaussian(0.0, 1.0)),
                count: 1000,
            }),
        };
        let a = spec.materialize(7).unwrap();
        let b = spec.materialize(7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, spec.materialize(8).unwrap());
        assert!(spec.frame_moments(&AffineFrame::identity(1), 2).is_err());
    }

    #[test]
    fn validation() {
        assert!(MeasureSpec::gaussian(0.0, 0.0).validate().is_err());
        assert!(MeasureSpec::atomic(&[(0.0, -1.0)]).validate().is_err());
        assert!(MeasureSpec::mixture(vec![(0.5, MeasureSpec::dirac(0.0)), (0.4, MeasureSpec::dirac(1.0))])
            .validate()
            .is_err());
        assert!(MeasureSpec::mixture(vec![(0.5, MeasureSpec::dirac(0.0)), (0.5, MeasureSpec::gaussian(1.0, 1.0))])
            .validate()
            .is_ok());
    }

    #[test]
    fn json_forms() {
        let spec: MeasureSpec =
            serde_json::from_str(r#"{"type":"atomic","atoms":[{"point":0.5,"weight":1.0}]}"#).unwrap();
        assert_eq!(spec, MeasureSpec::dirac(0.5));
        let spec: MeasureSpec = serde_json::from_str(r#"{"type":"empirical","samples":[1.0,2.0]}"#).unwrap();
        assert_eq!(spec, MeasureSpec::empirical(vec![vec![1.0], vec![2.0]]));
        let back: MeasureSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn exact_tv_examples() {
        let mu = AtomicMeasure::univariate(&[(-1.0, 0.25), (0.0, 0.25), (1.0, 0.25), (2.0, 0.25)]);
        let nu = AtomicMeasure::univariate(&[(-2.0, 0.25), (-1.0, 0.25), (0.1, 0.25), (1.5, 0.25)]);
        assert!((exact_tv_atomic(&mu, &nu) - 1.5).abs() < 1e-15);
        assert_eq!(exact_tv_atomic(&mu, &mu), 0.0);
        let a = AtomicMeasure::univariate(&[(0.0, 0.5), (1.0, 0.5)]);
        let b = AtomicMeasure::univariate(&[(2.0, 1.0)]);
        assert_eq!(exact_tv_atomic(&a, &b), 2.0);
        // merge tolerance
        let c = AtomicMeasure::univariate(&[(1.0 + 1e-12, 1.0)]);
        let e = AtomicMeasure::univariate(&[(1.0, 1.0)]);
        assert_eq!(exact_tv_atomic(&c, &e), 0.0);
    }

    fn arb_atoms() -> impl Strategy<Value = AtomicMeasure> {
        prop::collection::vec((-3.0f64..3.0, 0.01f64..1.0), 1..6).prop_map(|v| AtomicMeasure::univariate(&v))
    }

    proptest! {
        #[test]
        fn tv_atomic_symmetric_and_bounded(a in arb_atoms(), b in arb_atoms()) {
            let ab = exact_tv_atomic(&a, &b);
            let ba = exact_tv_atomic(&b, &a);
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab >= 0.0 && ab <= a.mass() + b.mass() + 1e-12);
        }

        #[test]
        fn mixture_moments_are_convex_combinations(
            w in 0.05f64..0.95,
            m1 in -2.0f64..2.0, s1 in 0.1f64..2.0,
            m2 in -2.0f64..2.0, s2 in 0.1f64..2.0,
        ) {
            let a = MeasureSpec::gaussian(m1, s1);
            let b = MeasureSpec::gaussian(m2, s2);
            let mix = MeasureSpec::mixture(vec![(w, a.clone()), (1.0 - w, b.clone())]);
            let mm = moments(&mix, 1, 6).unwrap();
            let ma = moments(&a, 1, 6).unwrap();
            let mb = moments(&b, 1, 6).unwrap();
            for k in 0..=6 {
                let direct = w * ma.values()[k] + (1.0 - w) * mb.values()[k];
                prop_assert!((mm.values()[k] - direct).abs() <= 1e-12 * direct.abs().max(1.0));
            }
        }
    }
}
