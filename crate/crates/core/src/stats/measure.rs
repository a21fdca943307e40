//! Weighted point measures on R^d (or on pairs in R^d x R^d) with Fourier
//! evaluation.

use hashbrown::HashMap;
use num_complex::Complex64;

use crate::error::{invalid, Result};

/// How stored points relate to the measure they represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    /// Points are taken literally.
    None,
    /// Each stored point stands for the uniform average over its orbit under
    /// the hyperoctahedral group (coordinate permutations and sign flips),
    /// acting simultaneously on every block of a pair.
    Hyperoctahedral,
}

/// A probability measure given by weighted point masses.
///
/// Points live in `(R^d)^blocks`: `blocks == 1` for the two-point measure and
/// `blocks == 2` for the pair measure. Each point is stored block-major, so a
/// pair is `[x_1..x_d, y_1..y_d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    d: usize,
    blocks: usize,
    symmetry: Symmetry,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    /// Builds a measure from explicit points; weights are normalized to sum to 1.
    pub fn from_points(
        d: usize,
        blocks: usize,
        symmetry: Symmetry,
        points: &[Vec<f64>],
        weights: &[f64],
    ) -> Result<Self> {
        if d == 0 || blocks == 0 {
            return Err(invalid("measure dimension must be positive"));
        }
        if points.len() != weights.len() || points.is_empty() {
            return Err(invalid("need one weight per point and at least one point"));
        }
        let mut flat = Vec::with_capacity(points.len() * d * blocks);
        for p in points {
            if p.len() != d * blocks {
                return Err(invalid(format!("point of length {} in a {}-dim measure", p.len(), d * blocks)));
            }
            flat.extend_from_slice(p);
        }
        Self::from_flat(d, blocks, symmetry, flat, weights.to_vec())
    }

    fn from_flat(d: usize, blocks: usize, symmetry: Symmetry, points: Vec<f64>, mut weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(invalid("total weight must be positive"));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { d, blocks, symmetry, points, weights })
    }

    /// Point mass at the origin.
    pub fn dirac(d: usize, blocks: usize) -> Self {
        Self { d, blocks, symmetry: Symmetry::None, points: vec![0.0; d * blocks], weights: vec![1.0] }
    }

    /// Lattice dimension `d` of each block.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Length of the wavevector accepted by [`EmpiricalMeasure::fourier`].
    pub fn dimension(&self) -> usize {
        self.d * self.blocks
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let w = self.dimension();
        &self.points[i * w..(i + 1) * w]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points.chunks_exact(self.dimension()).zip(self.weights.iter().copied())
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mass of the point at the origin (summed over duplicates).
    pub fn mass_at_origin(&self) -> f64 {
        self.iter().filter(|(p, _)| p.iter().all(|&c| c == 0.0)).map(|(_, w)| w).sum()
    }

    /// `sum w |x_b|^2` for block `b`. Orbit averaging leaves this unchanged.
    pub fn second_moment(&self, block: usize) -> f64 {
        assert!(block < self.blocks);
        self.iter()
            .map(|(p, w)| w * p[block * self.d..(block + 1) * self.d].iter().map(|c| c * c).sum::<f64>())
            .sum()
    }

    /// `sum w e^{i k.x}`, with `k` of length [`EmpiricalMeasure::dimension`].
    pub fn fourier(&self, k: &[f64]) -> Result<Complex64> {
        if k.len() != self.dimension() {
            return Err(invalid(format!(
                "wavevector of length {} for a measure of dimension {}",
                k.len(),
                self.dimension()
            )));
        }
        Ok(match self.symmetry {
            Symmetry::None => {
                let (mut re, mut im) = (0.0, 0.0);
                for (p, w) in self.iter() {
                    let phase: f64 = p.iter().zip(k).map(|(x, k)| x * k).sum();
                    let (s, c) = phase.sin_cos();
                    re += w * c;
                    im += w * s;
                }
                Complex64::new(re, im)
            }
            Symmetry::Hyperoctahedral => {
                let kernel = OrbitKernel::new(self.d, self.blocks, k);
                let re = self.iter().map(|(p, w)| w * kernel.eval(p)).sum();
                Complex64::new(re, 0.0)
            }
        })
    }

    /// Mixture `sum_i c_i m_i` of measures with equal shape; coefficients are
    /// normalized. Points are concatenated, not merged.
    pub fn mixture(parts: &[(f64, &EmpiricalMeasure)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return Err(invalid("empty mixture"));
        };
        let (d, blocks, symmetry) = (first.d, first.blocks, first.symmetry);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (c, m) in parts {
            if (m.d, m.blocks, m.symmetry) != (d, blocks, symmetry) {
                return Err(invalid("mixture of measures with different shapes"));
            }
            points.extend_from_slice(&m.points);
            weights.extend(m.weights.iter().map(|w| c * w));
        }
        Self::from_flat(d, blocks, symmetry, points, weights)
    }
}

/// Orbit average of `cos(k.x)` over simultaneous signed permutations.
///
/// Sign flips factor the average into a product of cosines, so for a point
/// with columns `x_j = (x_{1,j}, .., x_{B,j})` the average is
/// `(d-r)!/d! * sum over injective maps s of active rows into columns of
/// prod_i cos(sum_b k_{b,i} x_{b,s(i)})`, where only the `r` rows of `k` with a
/// nonzero entry matter. The sum over maps is a subset DP over rows.
struct OrbitKernel {
    d: usize,
    blocks: usize,
    rows: Vec<Vec<f64>>,
    scale: f64,
}

impl OrbitKernel {
    fn new(d: usize, blocks: usize, k: &[f64]) -> Self {
        let rows: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..blocks).map(|b| k[b * d + i]).collect::<Vec<f64>>())
            .filter(|row| row.iter().any(|&v| v != 0.0))
            .collect();
        let r = rows.len();
        // (d-r)!/d!
        let scale = ((d - r + 1)..=d).fold(1.0, |s, m| s / m as f64);
        Self { d, blocks, rows, scale }
    }

    fn eval(&self, p: &[f64]) -> f64 {
        let r = self.rows.len();
        if r == 0 {
            return 1.0;
        }
        let full = (1usize << r) - 1;
        let mut dp = vec![0.0; full + 1];
        dp[0] = 1.0;
        let mut m = vec![0.0; r];
        for j in 0..self.d {
            for (i, row) in self.rows.iter().enumerate() {
                let phase: f64 = (0..self.blocks).map(|b| row[b] * p[b * self.d + j]).sum();
                m[i] = phase.cos();
            }
            // descending masks so each column is used at most once
            for mask in (0..full).rev() {
                let v = dp[mask];
                if v == 0.0 {
                    continue;
                }
                for (i, mi) in m.iter().enumerate() {
                    if mask & (1 << i) == 0 {
                        dp[mask | (1 << i)] += v * mi;
                    }
                }
            }
        }
        dp[full] * self.scale
    }
}

/// Writes the canonical orbit representative of an integer point into `out`.
///
/// For one block this is the sorted vector of absolute values; for pairs each
/// column is sign-normalized (first nonzero entry positive) and columns are
/// sorted lexicographically.
pub fn canonicalize(d: usize, blocks: usize, coords: &[i32], out: &mut Vec<i32>) {
    out.clear();
    if blocks == 1 {
        out.extend(coords.iter().map(|c| c.abs()));
        out.sort_unstable();
        return;
    }
    let mut cols: Vec<[i32; 2]> = (0..d)
        .map(|j| {
            let (x, y) = (coords[j], coords[d + j]);
            if x < 0 || (x == 0 && y < 0) { [-x, -y] } else { [x, y] }
        })
        .collect();
    cols.sort_unstable();
    out.extend(cols.iter().map(|c| c[0]));
    out.extend(cols.iter().map(|c| c[1]));
}

/// Accumulates integer lattice points with weights, merging repeats.
#[derive(Debug, Clone)]
pub struct MeasureBuilder {
    d: usize,
    blocks: usize,
    symmetry: Symmetry,
    mass: HashMap<Box<[i32]>, f64>,
    scratch: Vec<i32>,
}

impl MeasureBuilder {
    pub fn new(d: usize, blocks: usize, symmetry: Symmetry) -> Self {
        assert!(blocks == 1 || blocks == 2, "one or two blocks");
        Self { d, blocks, symmetry, mass: HashMap::new(), scratch: Vec::new() }
    }

    pub fn add(&mut self, coords: &[i32], w: f64) {
        debug_assert_eq!(coords.len(), self.d * self.blocks);
        let key: &[i32] = match self.symmetry {
            Symmetry::None => coords,
            Symmetry::Hyperoctahedral => {
                canonicalize(self.d, self.blocks, coords, &mut self.scratch);
                &self.scratch
            }
        };
        if let Some(m) = self.mass.get_mut(key) {
            *m += w;
        } else {
            self.mass.insert(key.into(), w);
        }
    }

    pub fn merge(&mut self, other: MeasureBuilder) {
        for (k, w) in other.mass {
            *self.mass.entry(k).or_insert(0.0) += w;
        }
    }

    pub fn distinct_points(&self) -> usize {
        self.mass.len()
    }

    pub fn total(&self) -> f64 {
        self.mass.values().sum()
    }

    /// Normalized measure with each point multiplied by `scale`, in a
    /// deterministic (sorted) order.
    pub fn finish(&self, scale: f64) -> Result<EmpiricalMeasure> {
        if self.mass.is_empty() {
            return Err(crate::error::Error::InsufficientData("no mass accumulated".into()));
        }
        let mut entries: Vec<(&Box<[i32]>, &f64)> = self.mass.iter().collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(b.0));
        let mut points = Vec::with_capacity(entries.len() * self.d * self.blocks);
        let mut weights = Vec::with_capacity(entries.len());
        for (k, w) in entries {
            points.extend(k.iter().map(|&c| c as f64 * scale));
            weights.push(*w);
        }
        EmpiricalMeasure::from_flat(self.d, self.blocks, self.symmetry, points, weights)
    }
}
