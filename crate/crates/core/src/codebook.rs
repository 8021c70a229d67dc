//! Arbitrary-K M-tree hierarchical codebook.
//!
//! The bottom stage holds the `K` grid beams as leaves, padded with nulls up
//! to `M^S`. Each wide beam is the least-squares solution of "unit response
//! on my descendant leaves, zero on all others": `(L Lᴴ)⁻¹ L d`, where `d`
//! is the 0/1 descendant indicator. Wide beams are stored unit-norm together
//! with a decision scale that puts sibling measurements back on a common
//! footing during search.

use std::ops::Range;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::array::{steering, steering_vector, ArraySpec, BeamGrid, BeamKind, BeamVector};
use crate::error::{Error, Result};
use crate::{CMatrix, CVector};

/// Smallest `S ≥ 1` with `M^S ≥ K`.
pub fn num_stages(branching: usize, k: usize) -> usize {
    let mut stages = 1;
    let mut span = branching;
    while span < k {
        span *= branching;
        stages += 1;
    }
    stages
}

/// Live leaves (0-based, clipped to `K`) under candidate `n` of stage `s`.
pub fn descendants(stage: usize, n: usize, branching: usize, k: usize) -> Range<usize> {
    let total = num_stages(branching, k);
    let span = branching.pow((total - stage) as u32);
    let start = (n * span).min(k);
    let end = ((n + 1) * span).min(k);
    start..end
}

/// `K × M^s` zero-one matrix whose column `n` marks the live descendants of
/// candidate `n` at stage `s`.
pub fn selection_matrix(stage: usize, branching: usize, k: usize) -> Result<nalgebra::DMatrix<f64>> {
    check_branching(branching)?;
    let total = num_stages(branching, k);
    if stage == 0 || stage > total {
        return Err(Error::OutOfRange { index: stage, limit: total });
    }
    let cols = branching.pow(stage as u32);
    let mut d = nalgebra::DMatrix::zeros(k, cols);
    for n in 0..cols {
        for row in descendants(stage, n, branching, k) {
            d[(row, n)] = 1.0;
        }
    }
    Ok(d)
}

fn check_branching(branching: usize) -> Result<()> {
    if branching < 2 {
        return Err(Error::InvalidParameter(format!("branching factor must be >= 2, got {branching}")));
    }
    Ok(())
}

/// `N_a × K` matrix of leaf codewords, one grid steering vector per column.
pub fn leaf_matrix(spec: &ArraySpec, grid: &BeamGrid) -> CMatrix {
    let cols: Vec<CVector> = grid.directions().iter().map(|&d| steering_vector(spec, d)).collect();
    CMatrix::from_columns(&cols)
}

/// Leaf codewords re-referenced to the array centre.
///
/// Each column differs from [`leaf_matrix`] only by a unit-modulus factor,
/// so the leaves radiate identically, but neighbouring leaves now add in
/// phase between their directions instead of cancelling.
pub fn centered_leaf_matrix(spec: &ArraySpec, grid: &BeamGrid) -> CMatrix {
    let half_aperture = spec.phase_step() * (spec.num_elements() as f64 - 1.0) / 2.0;
    let mut l = leaf_matrix(spec, grid);
    for (i, mut col) in l.column_iter_mut().enumerate() {
        col *= Complex64::from_polar(1.0, -half_aperture * grid.sine(i));
    }
    l
}

/// Raw least-squares projection `(L Lᴴ)⁻¹ L d`; `None` for an all-zero
/// target.
pub fn project_wide_beam(leaves: &CMatrix, targets: &DVector<f64>) -> Result<Option<CVector>> {
    if targets.len() != leaves.ncols() {
        return Err(Error::DimensionMismatch { expected: leaves.ncols(), actual: targets.len() });
    }
    if targets.iter().all(|&t| t == 0.0) {
        return Ok(None);
    }
    let gram = leaves * leaves.adjoint();
    let chol = gram.cholesky().ok_or(Error::Singular("leaf Gram matrix L Lᴴ"))?;
    let rhs = leaves * targets.map(|t| Complex64::new(t, 0.0));
    Ok(Some(chol.solve(&rhs)))
}

/// Unit-norm wide beam for candidate `n` of stage `s`, built from `leaves`.
pub fn wide_beam(
    leaves: &CMatrix,
    stage: usize,
    n: usize,
    branching: usize,
) -> Result<Option<BeamVector>> {
    let k = leaves.ncols();
    let d = selection_matrix(stage, branching, k)?;
    if n >= d.ncols() {
        return Err(Error::OutOfRange { index: n, limit: d.ncols() });
    }
    let column = d.column(n).into_owned();
    Ok(project_wide_beam(leaves, &column)?.map(|raw| {
        let norm = raw.norm();
        BeamVector::new(raw / Complex64::new(norm, 0.0), BeamKind::Wide)
    }))
}

/// Starting from the first live sibling's projection norm, rescales each
/// following sibling so the pair crosses over exactly on their shared edge.
///
/// The raw projection norm alone leaves the crossover slightly off the edge
/// between blocks of unequal size (a truncated last block).
fn calibrate_siblings(spec: &ArraySpec, grid: &BeamGrid, row: &mut [Option<Candidate>], branching: usize) {
    let k = grid.k() as f64;
    for family in row.chunks_mut(branching) {
        let mut prev: Option<&Candidate> = None;
        let mut updates = Vec::with_capacity(family.len());
        for c in family.iter().flatten() {
            let scale = match prev {
                None => c.scale,
                Some(p) => {
                    let edge = (2.0 * c.leaves.start as f64 / k - 1.0).asin();
                    let a = steering_vector(spec, edge);
                    let ratio = p.beam.coefficients().dotc(&a).norm() / c.beam.coefficients().dotc(&a).norm();
                    updates.last().copied().unwrap_or(p.scale) * ratio
                }
            };
            updates.push(scale);
            prev = Some(c);
        }
        for (c, s) in family.iter_mut().flatten().zip(updates) {
            c.scale = s;
        }
    }
}

/// One non-null node of the tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub beam: BeamVector,
    /// Weight applied to a measured amplitude before siblings are compared.
    /// Adjacent siblings, once weighted, respond equally on the coverage edge
    /// they share.
    pub scale: f64,
    /// Live descendant leaves.
    pub leaves: Range<usize>,
}

#[derive(Debug, Clone)]
pub struct HierarchicalCodebook {
    spec: ArraySpec,
    branching: usize,
    grid: BeamGrid,
    /// `stages[s − 1]` holds the `M^s` candidates of stage `s`.
    stages: Vec<Vec<Option<Candidate>>>,
}

impl HierarchicalCodebook {
    pub fn new(spec: ArraySpec, k: usize, branching: usize) -> Result<Self> {
        check_branching(branching)?;
        let grid = BeamGrid::for_array(&spec, k)?;
        let total = num_stages(branching, k);
        let centered = centered_leaf_matrix(&spec, &grid);
        let chol = (&centered * centered.adjoint())
            .cholesky()
            .ok_or(Error::Singular("leaf Gram matrix L Lᴴ"))?;

        let mut stages = Vec::with_capacity(total);
        for s in 1..=total {
            let width = branching.pow(s as u32);
            let mut row = Vec::with_capacity(width);
            for n in 0..width {
                let leaves = descendants(s, n, branching, k);
                if leaves.is_empty() {
                    row.push(None);
                    continue;
                }
                let mut rhs = CVector::zeros(spec.num_elements());
                for i in leaves.clone() {
                    rhs += centered.column(i);
                }
                let raw = chol.solve(&rhs);
                let scale = raw.norm();
                let beam = if s == total {
                    // keep the plain array response for leaves
                    steering(&spec, grid.direction(leaves.start))
                } else {
                    BeamVector::new(raw / Complex64::new(scale, 0.0), BeamKind::Wide)
                };
                row.push(Some(Candidate { beam, scale, leaves }));
            }
            if s == total {
                // every leaf has the same norm; keep their weights bit-identical
                let common = row.iter().flatten().next().map_or(1.0, |c| c.scale);
                row.iter_mut().flatten().for_each(|c| c.scale = common);
            } else {
                calibrate_siblings(&spec, &grid, &mut row, branching);
            }
            stages.push(row);
        }
        Ok(Self { spec, branching, grid, stages })
    }

    pub fn spec(&self) -> &ArraySpec {
        &self.spec
    }

    pub fn branching(&self) -> usize {
        self.branching
    }

    pub fn k(&self) -> usize {
        self.grid.k()
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn grid(&self) -> &BeamGrid {
        &self.grid
    }

    /// Candidates of stage `s` (1-based), nulls included.
    pub fn stage(&self, s: usize) -> Result<&[Option<Candidate>]> {
        if s == 0 || s > self.stages.len() {
            return Err(Error::OutOfRange { index: s, limit: self.stages.len() });
        }
        Ok(&self.stages[s - 1])
    }

    pub fn candidate(&self, s: usize, n: usize) -> Result<Option<&Candidate>> {
        let stage = self.stage(s)?;
        stage
            .get(n)
            .map(Option::as_ref)
            .ok_or(Error::OutOfRange { index: n, limit: stage.len() })
    }

    /// Indices at stage `s + 1` below candidate `n` of stage `s`; stage 0 is
    /// the root with the single index 0. Leaves have no children.
    pub fn children(&self, s: usize, n: usize) -> Result<Range<usize>> {
        let total = self.stages.len();
        if s > total {
            return Err(Error::OutOfRange { index: s, limit: total });
        }
        let width = self.branching.pow(s as u32);
        if n >= width {
            return Err(Error::OutOfRange { index: n, limit: width });
        }
        if s == total {
            return Ok(0..0);
        }
        Ok(n * self.branching..(n + 1) * self.branching)
    }

    pub fn leaf(&self, i: usize) -> &Candidate {
        self.stages[self.stages.len() - 1][i]
            .as_ref()
            .expect("live leaf index")
    }

    /// Smallest ratio, over all wide beams, between the weakest response on
    /// a descendant leaf direction and the strongest on any other leaf.
    pub fn discrimination_margin(&self) -> f64 {
        let l = leaf_matrix(&self.spec, &self.grid);
        let mut margin = f64::INFINITY;
        for stage in &self.stages[..self.stages.len() - 1] {
            for c in stage.iter().flatten() {
                let gains = l.adjoint() * c.beam.coefficients();
                let (mut inside, mut outside) = (f64::INFINITY, 0.0f64);
                for (i, g) in gains.iter().enumerate() {
                    if c.leaves.contains(&i) {
                        inside = inside.min(g.norm());
                    } else {
                        outside = outside.max(g.norm());
                    }
                }
                if outside > 0.0 {
                    margin = margin.min(inside / outside);
                }
            }
        }
        margin
    }
}

/// A beam realized with two RF chains: unit-modulus `N × 2` analog network
/// and a 2-vector digital stage.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoRfRealization {
    pub analog: CMatrix,
    pub digital: CVector,
}

impl TwoRfRealization {
    pub fn reconstruct(&self) -> CVector {
        &self.analog * &self.digital
    }
}

/// Writes every entry as `c (e^{jα} + e^{jβ})` with `c = max|w_i| / 2`.
pub fn two_rf_factorization(w: &CVector) -> Result<TwoRfRealization> {
    let peak = w.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::InvalidParameter("cannot realize an all-zero beam".into()));
    }
    let c = peak / 2.0;
    let mut analog = CMatrix::zeros(w.len(), 2);
    for (i, x) in w.iter().enumerate() {
        let spread = (x.norm() / peak).clamp(0.0, 1.0).acos();
        let arg = x.arg();
        analog[(i, 0)] = Complex64::from_polar(1.0, arg + spread);
        analog[(i, 1)] = Complex64::from_polar(1.0, arg - spread);
    }
    let digital = CVector::from_element(2, Complex64::new(c, 0.0));
    Ok(TwoRfRealization { analog, digital })
}
