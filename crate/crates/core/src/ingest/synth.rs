use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::DomainDataset;
use crate::matrix::Matrix;

/// Parameters for a synthetic source/target pair of Gaussian-blob domains.
///
/// Blobs have unit standard deviation; `separation` is the minimum distance
/// between blob centers in those units. The target domain is the source
/// observations jittered by `noise`, with target feature `j` taken from
/// source feature `permutation[j]` and multiplied by `scale[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    #[serde(default = "default_separation")]
    pub separation: f64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub permutation: Option<Vec<usize>>,
    #[serde(default)]
    pub scale: Option<Vec<f64>>,
    /// Per-class counts overriding `per_class`.
    #[serde(default)]
    pub class_sizes: Option<Vec<usize>>,
    /// Per-class standard deviations overriding the unit default.
    #[serde(default)]
    pub spreads: Option<Vec<f64>>,
    #[serde(default)]
    pub layout: Layout,
    /// Transition points strung between pairs of classes.
    #[serde(default)]
    pub bridges: Vec<Bridge>,
    #[serde(default)]
    pub seed: u64,
}

/// `count` points spread uniformly along the segment between the centers
/// of classes `a` and `b` (with half-unit noise), labeled by the nearer end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bridge {
    pub a: usize,
    pub b: usize,
    pub count: usize,
}

/// Arrangement of blob centers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// Random directions around the mean, pairwise at least `separation` apart.
    #[default]
    Sphere,
    /// A ring in a random plane; consecutive gaps run from `separation` to
    /// `1.5 separation` in random order, so each class has a distinct pair
    /// of neighbours.
    Ring,
}

fn default_separation() -> f64 {
    6.0
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            classes: 5,
            per_class: 100,
            dim: 8,
            separation: default_separation(),
            noise: 0.0,
            permutation: None,
            scale: None,
            class_sizes: None,
            spreads: None,
            layout: Layout::Sphere,
            bridges: Vec::new(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::InvalidInput("synthetic data needs at least 2 classes".into()));
        }
        if self.per_class == 0 || self.dim == 0 {
            return Err(Error::InvalidInput("per-class count and dimension must be positive".into()));
        }
        if !(self.separation > 0.0) || !(self.noise >= 0.0) {
            return Err(Error::InvalidInput("separation must be positive and noise non-negative".into()));
        }
        if let Some(p) = &self.permutation {
            let mut sorted = p.clone();
            sorted.sort_unstable();
            if sorted != (0..self.dim).collect::<Vec<_>>() {
                return Err(Error::InvalidInput(format!(
                    "permutation {p:?} is not a permutation of 0..{}",
                    self.dim
                )));
            }
        }
        if let Some(s) = &self.scale {
            if s.len() != self.dim || s.iter().any(|x| !x.is_finite() || *x == 0.0) {
                return Err(Error::InvalidInput("scale needs one finite nonzero factor per dimension".into()));
            }
        }
        if let Some(c) = &self.class_sizes {
            if c.len() != self.classes || c.contains(&0) {
                return Err(Error::InvalidInput("class_sizes needs one positive count per class".into()));
            }
        }
        if let Some(sp) = &self.spreads {
            if sp.len() != self.classes || sp.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::InvalidInput("spreads needs one positive deviation per class".into()));
            }
        }
        if self
            .bridges
            .iter()
            .any(|b| b.a >= self.classes || b.b >= self.classes || b.a == b.b)
        {
            return Err(Error::InvalidInput("bridges must join two distinct classes".into()));
        }
        Ok(())
    }

    fn sizes(&self) -> Vec<usize> {
        self.class_sizes.clone().unwrap_or_else(|| vec![self.per_class; self.classes])
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Rejection-samples blob centers on a sphere around the origin with their
/// mean pulled to zero, growing the radius when crowded. Every blob then
/// sits in its own direction from the data mean, which is what cosine
/// neighbourhoods see. One dimension falls back to a growing interval.
fn place_centers(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let (m, d, sep) = (spec.classes, spec.dim, spec.separation);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    if spec.layout == Layout::Ring && d >= 2 {
        return ring_centers(spec, rng);
    }
    let far = |cs: &[Vec<f64>]| (0..m).all(|i| (i + 1..m).all(|j| dist(&cs[i], &cs[j]) >= sep));
    if d == 1 {
        let mut side = 2.0 * sep * m as f64;
        loop {
            for _ in 0..256 {
                let cs: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.random_range(-0.5..0.5) * side]).collect();
                if far(&cs) {
                    return cs;
                }
            }
            side *= 1.1;
        }
    }
    let mut radius = sep;
    loop {
        for _ in 0..256 {
            let mut cs: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..d).map(|_| unit.sample(rng)).collect())
                .collect();
            for _ in 0..16 {
                let mean: Vec<f64> = (0..d).map(|j| cs.iter().map(|c| c[j]).sum::<f64>() / m as f64).collect();
                for c in &mut cs {
                    for (x, mu) in c.iter_mut().zip(&mean) {
                        *x -= mu;
                    }
                    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                    c.iter_mut().for_each(|x| *x *= radius / norm);
                }
            }
            if far(&cs) {
                return cs;
            }
        }
        radius *= 1.05;
    }
}

fn ring_centers(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let (m, d, sep) = (spec.classes, spec.dim, spec.separation);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut gaps: Vec<f64> = (0..m)
        .map(|i| sep * (1.0 + 0.5 * i as f64 / (m - 1) as f64))
        .collect();
    gaps.shuffle(rng);
    let total: f64 = gaps.iter().sum();
    let theta_min = 2.0 * std::f64::consts::PI * sep / total;
    let radius = sep / (2.0 * (theta_min / 2.0).sin());
    // Random orthonormal plane.
    let mut u: Vec<f64> = (0..d).map(|_| unit.sample(rng)).collect();
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    u.iter_mut().for_each(|x| *x /= nu);
    let mut v: Vec<f64> = (0..d).map(|_| unit.sample(rng)).collect();
    let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
    v.iter_mut().zip(&u).for_each(|(x, a)| *x -= dot * a);
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    let mut angle = 0.0f64;
    gaps.iter()
        .map(|g| {
            let c = u.iter().zip(&v).map(|(a, b)| radius * (angle.cos() * a + angle.sin() * b)).collect();
            angle += 2.0 * std::f64::consts::PI * g / total;
            c
        })
        .collect()
}

/// Generates `(source, target)` datasets; identical for identical specs.
///
/// Both carry labels and class names. Rows are shuffled, so contiguous
/// splits see every class. Target row `i` is source row `i` with fresh
/// noise, permuted and scaled. Target labels are meant for evaluation only.
pub fn synth_generate(spec: &SynthSpec) -> Result<(DomainDataset, DomainDataset)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let centers = place_centers(spec, &mut rng);

    let sizes = spec.sizes();
    let spreads = spec.spreads.clone().unwrap_or_else(|| vec![1.0; spec.classes]);
    // Blob points are tagged `None`, bridge points with their bridge.
    let mut order: Vec<(usize, Option<usize>)> = sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat_n((c, None), s))
        .collect();
    for (i, b) in spec.bridges.iter().enumerate() {
        order.extend(std::iter::repeat_n((b.a, Some(i)), b.count));
    }
    let n = order.len();
    order.shuffle(&mut rng);
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for &(class, bridge) in &order {
        match bridge {
            None => {
                points.push(
                    centers[class]
                        .iter()
                        .map(|c| c + spreads[class] * unit.sample(&mut rng))
                        .collect::<Vec<f64>>(),
                );
                labels.push(class);
            }
            Some(i) => {
                let b = &spec.bridges[i];
                let t: f64 = rng.random_range(0.0..1.0);
                points.push(
                    centers[b.a]
                        .iter()
                        .zip(&centers[b.b])
                        .map(|(x, y)| x + t * (y - x) + 0.5 * unit.sample(&mut rng))
                        .collect::<Vec<f64>>(),
                );
                labels.push(if t < 0.5 { b.a } else { b.b });
            }
        }
    }

    let perm: Vec<usize> = spec.permutation.clone().unwrap_or_else(|| (0..spec.dim).collect());
    let scale = spec.scale.clone().unwrap_or_else(|| vec![1.0; spec.dim]);
    let mut target_points = Vec::with_capacity(n);
    let mut target_labels = Vec::with_capacity(n);
    for i in 0..n {
        let jittered: Vec<f64> = points[i]
            .iter()
            .map(|x| x + spec.noise * unit.sample(&mut rng))
            .collect();
        target_points.push(
            perm.iter()
                .zip(&scale)
                .map(|(&src, s)| jittered[src] * s)
                .collect::<Vec<f64>>(),
        );
        target_labels.push(labels[i]);
    }

    let names: Vec<String> = (0..spec.classes).map(|c| format!("class{c}")).collect();
    let source = DomainDataset::new(Matrix::from_rows(&points)?, Some(labels), Some(names.clone()))?;
    let target = DomainDataset::new(
        Matrix::from_rows(&target_points)?,
        Some(target_labels),
        Some(names),
    )?;
    Ok((source, target))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SynthSpec {
        SynthSpec {
            classes: 5,
            per_class: 20,
            dim: 4,
            separation: 6.0,
            noise: 0.0,
            permutation: None,
            seed: 7,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn identity_permutation_keeps_structure() {
        let (s, t) = synth_generate(&spec()).unwrap();
        assert_eq!(s.len(), 100);
        assert_eq!(t.len(), 100);
        // Without noise the target equals the source.
        let mut a: Vec<(Vec<u64>, usize)> = (0..100)
            .map(|i| (s.features.row(i).iter().map(|x| x.to_bits()).collect(), s.labels.as_ref().unwrap()[i]))
            .collect();
        let mut b: Vec<(Vec<u64>, usize)> = (0..100)
            .map(|i| (t.features.row(i).iter().map(|x| x.to_bits()).collect(), t.labels.as_ref().unwrap()[i]))
            .collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn swap_permutation_swaps_columns() {
        let plain = synth_generate(&spec()).unwrap().1;
        let swapped = synth_generate(&SynthSpec {
            permutation: Some(vec![1, 0, 2, 3]),
            ..spec()
        })
        .unwrap()
        .1;
        for i in 0..plain.len() {
            assert_eq!(plain.features.get(i, 0), swapped.features.get(i, 1));
            assert_eq!(plain.features.get(i, 1), swapped.features.get(i, 0));
            assert_eq!(plain.features.get(i, 2), swapped.features.get(i, 2));
        }
        assert_eq!(plain.labels, swapped.labels);
    }

    #[test]
    fn deterministic_given_seed() {
        let s = SynthSpec { noise: 0.3, ..spec() };
        assert_eq!(synth_generate(&s).unwrap(), synth_generate(&s).unwrap());
        let other = SynthSpec { seed: 8, ..s.clone() };
        assert_ne!(synth_generate(&s).unwrap().0, synth_generate(&other).unwrap().0);
    }

    #[test]
    fn centers_respect_separation() {
        let s = SynthSpec { per_class: 1, ..spec() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let centers = place_centers(&s, &mut rng);
        for i in 0..centers.len() {
            for j in 0..i {
                let d = dist(&centers[i], &centers[j]);
                assert!(d >= 6.0);
            }
        }
    }

    #[test]
    fn class_sizes_and_bridges() {
        let s = SynthSpec {
            class_sizes: Some(vec![3, 5, 7, 9, 11]),
            bridges: vec![Bridge { a: 0, b: 1, count: 4 }],
            ..spec()
        };
        let (src, tgt) = synth_generate(&s).unwrap();
        assert_eq!(src.len(), 35 + 4);
        assert_eq!(tgt.len(), src.len());
        let labels = src.labels.unwrap();
        let count = |c: usize| labels.iter().filter(|&&l| l == c).count();
        // Bridge points take the label of the nearer endpoint.
        assert_eq!(count(0) + count(1), 3 + 5 + 4);
        assert_eq!((count(2), count(3), count(4)), (7, 9, 11));
    }

    #[test]
    fn ring_centers_respect_separation() {
        let s = SynthSpec { layout: Layout::Ring, ..spec() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let centers = place_centers(&s, &mut rng);
        for i in 0..centers.len() {
            for j in 0..i {
                assert!(dist(&centers[i], &centers[j]) >= 6.0 - 1e-9);
            }
        }
    }

    #[test]
    fn target_rows_follow_source_rows() {
        let (s, t) = synth_generate(&spec()).unwrap();
        assert_eq!(s, t);
        let (s, t) = synth_generate(&SynthSpec { noise: 0.5, ..spec() }).unwrap();
        assert_eq!(s.labels, t.labels);
        assert_ne!(s.features, t.features);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(synth_generate(&SynthSpec { classes: 1, ..spec() }).is_err());
        assert!(synth_generate(&SynthSpec { separation: 0.0, ..spec() }).is_err());
        assert!(synth_generate(&SynthSpec { permutation: Some(vec![0, 0, 1, 2]), ..spec() }).is_err());
        assert!(synth_generate(&SynthSpec { class_sizes: Some(vec![1, 2]), ..spec() }).is_err());
        assert!(synth_generate(&SynthSpec {
            bridges: vec![Bridge { a: 0, b: 9, count: 1 }],
            ..spec()
        })
        .is_err());
    }
}
