//! Bracket-generated subalgebras.
//!
//! A span is stored as a Frobenius-orthonormal list of matrices. Ranks are
//! detected from singular values relative to the largest one, with an
//! absolute floor so that round-off around an all-zero input yields rank 0.

use serde::Serialize;

use super::{adjoint, commutator, frobenius_dot, AlgebraElement, GroupElement, Mat, MatrixAlgebra};
use crate::error::{HolabError, Result};

pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_ABS_FLOOR: f64 = 1e-10;

/// Where a basis vector came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Provenance {
    Generator(usize),
    Bracket(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GenerationEntry {
    pub parents: Provenance,
    pub depth: usize,
}

/// Orthonormal basis of a bracket-generated subalgebra.
#[derive(Clone, Debug)]
pub struct SubalgebraSpan {
    tag: MatrixAlgebra,
    basis: Vec<AlgebraElement>,
    generation_log: Vec<GenerationEntry>,
    rank_tolerance: f64,
}

impl SubalgebraSpan {
    pub fn empty(tag: MatrixAlgebra, rank_tolerance: f64) -> Self {
        Self {
            tag,
            basis: Vec::new(),
            generation_log: Vec::new(),
            rank_tolerance,
        }
    }

    /// The whole ambient algebra.
    pub fn full(tag: MatrixAlgebra) -> Self {
        let gens: Vec<_> = tag.standard_basis().elements().to_vec();
        bracket_closure(&gens, DEFAULT_RANK_TOLERANCE).expect("standard basis closes")
    }

    pub fn tag(&self) -> MatrixAlgebra {
        self.tag
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[AlgebraElement] {
        &self.basis
    }

    pub fn generation_log(&self) -> &[GenerationEntry] {
        &self.generation_log
    }

    pub fn rank_tolerance(&self) -> f64 {
        self.rank_tolerance
    }

    /// Orthogonal projection onto the span.
    pub fn project(&self, m: &Mat) -> Mat {
        let mut p = Mat::zeros(m.nrows(), m.ncols());
        for b in &self.basis {
            p += b.matrix() * frobenius_dot(b.matrix(), m);
        }
        p
    }

    /// Frobenius norm of the component of `m` orthogonal to the span.
    pub fn distance(&self, m: &Mat) -> f64 {
        let mut r = m - self.project(m);
        // second pass for cancellation
        r -= self.project(&r);
        r.norm()
    }

    /// Coordinates in the orthonormal basis.
    pub fn coordinates(&self, m: &Mat) -> Vec<f64> {
        self.basis.iter().map(|b| frobenius_dot(b.matrix(), m)).collect()
    }

    /// Max deviation of the Gram matrix from the identity.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dot(b) - target).abs());
            }
        }
        worst
    }

    /// Largest distance of a pairwise bracket of basis vectors to the span.
    pub fn closure_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, a) in self.basis.iter().enumerate() {
            for b in &self.basis[i + 1..] {
                worst = worst.max(self.distance(&commutator(a.matrix(), b.matrix())));
            }
        }
        worst
    }

    /// `exp(±t·b)` for every basis vector `b`.
    pub fn exp_probes(&self, t: f64) -> Result<Vec<GroupElement>> {
        let mut out = Vec::with_capacity(2 * self.rank());
        for b in &self.basis {
            for s in [t, -t] {
                out.push(super::exp_matrix(&b.scale(s))?);
            }
        }
        Ok(out)
    }
}

/// Flattened rows of a list of matrices.
fn flatten(mats: &[&Mat]) -> Mat {
    let n = mats.first().map(|m| m.nrows()).unwrap_or(0);
    Mat::from_fn(mats.len(), n * n, |i, k| mats[i][(k / n, k % n)])
}

/// Numerical rank of a set of matrices by singular-value thresholding.
fn numerical_rank(mats: &[&Mat], rel_tol: f64, abs_floor: f64) -> usize {
    if mats.is_empty() {
        return 0;
    }
    let sv = flatten(mats).singular_values();
    let smax = sv.max();
    let cutoff = (rel_tol * smax).max(abs_floor);
    sv.iter().filter(|s| **s > cutoff).count()
}

/// Extends `basis` by greedily selecting the candidate with the largest
/// residual (pivoted Gram–Schmidt) until the target rank is reached.
fn extend_basis(
    basis: &mut Vec<AlgebraElement>,
    log: &mut Vec<GenerationEntry>,
    candidates: Vec<(Mat, GenerationEntry)>,
    target_rank: usize,
    tag: MatrixAlgebra,
) {
    let mut residuals: Vec<(Mat, GenerationEntry)> = candidates
        .into_iter()
        .map(|(m, e)| {
            let mut r = m;
            for _ in 0..2 {
                for b in basis.iter() {
                    let c = frobenius_dot(b.matrix(), &r);
                    r -= b.matrix() * c;
                }
            }
            (r, e)
        })
        .collect();
    while basis.len() < target_rank && !residuals.is_empty() {
        let (best, _) = residuals
            .iter()
            .enumerate()
            .map(|(i, (r, _))| (i, r.norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let (r, entry) = residuals.swap_remove(best);
        let norm = r.norm();
        if norm == 0.0 {
            break;
        }
        let q = r / norm;
        for (other, _) in residuals.iter_mut() {
            for _ in 0..2 {
                let c = frobenius_dot(&q, other);
                *other -= &q * c;
            }
        }
        basis.push(AlgebraElement::raw(q, tag));
        log.push(entry);
    }
}

/// Smallest subalgebra containing the generators.
///
/// Each round appends brackets of basis pairs (at least one member new in
/// the previous round) and stops when the rank no longer grows. All-zero
/// generators give the rank-0 span.
pub fn bracket_closure(generators: &[AlgebraElement], rank_tolerance: f64) -> Result<SubalgebraSpan> {
    bracket_closure_with_floor(generators, rank_tolerance, DEFAULT_ABS_FLOOR)
}

pub fn bracket_closure_with_floor(
    generators: &[AlgebraElement],
    rank_tolerance: f64,
    abs_floor: f64,
) -> Result<SubalgebraSpan> {
    let first = generators
        .first()
        .ok_or_else(|| HolabError::Input("bracket closure needs at least one generator".into()))?;
    let tag = first.tag();
    if generators.iter().any(|g| g.tag() != tag) {
        return Err(HolabError::Shape("generators from different algebras".into()));
    }
    if !(rank_tolerance > 0.0 && rank_tolerance < 1.0) {
        return Err(HolabError::Input(format!("rank tolerance {rank_tolerance} out of (0, 1)")));
    }
    let mut span = SubalgebraSpan::empty(tag, rank_tolerance);
    let gen_mats: Vec<&Mat> = generators.iter().map(|g| g.matrix()).collect();
    let rank0 = numerical_rank(&gen_mats, rank_tolerance, abs_floor);
    if rank0 == 0 {
        return Ok(span);
    }
    let candidates = generators
        .iter()
        .enumerate()
        .map(|(i, g)| {
            (
                g.matrix().clone(),
                GenerationEntry {
                    parents: Provenance::Generator(i),
                    depth: 0,
                },
            )
        })
        .collect();
    extend_basis(&mut span.basis, &mut span.generation_log, candidates, rank0, tag);

    let n = tag.size();
    let mut new_from = 0;
    for depth in 1..=n * n {
        let old_rank = span.rank();
        let mut candidates = Vec::new();
        for i in 0..old_rank {
            for j in (i + 1)..old_rank {
                if j < new_from {
                    continue;
                }
                let br = commutator(span.basis[i].matrix(), span.basis[j].matrix());
                candidates.push((
                    br,
                    GenerationEntry {
                        parents: Provenance::Bracket(i, j),
                        depth,
                    },
                ));
            }
        }
        if candidates.is_empty() {
            break;
        }
        let mut all: Vec<&Mat> = span.basis.iter().map(|b| b.matrix()).collect();
        all.extend(candidates.iter().map(|(m, _)| m));
        let target = numerical_rank(&all, rank_tolerance, abs_floor);
        if target <= old_rank {
            break;
        }
        extend_basis(&mut span.basis, &mut span.generation_log, candidates, target, tag);
        new_from = old_rank;
    }
    Ok(span)
}

/// Result of checking `Ad_g(span) ⊂ span` over a probe set.
#[derive(Clone, Debug, Serialize)]
pub struct AdStabilityReport {
    pub per_probe: Vec<f64>,
    pub max_residual: f64,
}

/// For each probe `g` and basis vector `b`, the distance of `Ad_g b` to the span.
pub fn ad_stability_check(span: &SubalgebraSpan, probes: &[GroupElement]) -> Result<AdStabilityReport> {
    let mut per_probe = Vec::with_capacity(probes.len());
    for g in probes {
        if g.tag().size() != span.tag().size() {
            return Err(HolabError::Shape("probe and span sizes differ".into()));
        }
        let mut worst = 0.0_f64;
        for b in span.basis() {
            let moved = adjoint(g, b)?;
            worst = worst.max(span.distance(moved.matrix()));
        }
        per_probe.push(worst);
    }
    let max_residual = per_probe.iter().copied().fold(0.0, f64::max);
    Ok(AdStabilityReport {
        per_probe,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::exp_matrix;
    use std::f64::consts::FRAC_PI_2;

    fn so3() -> Vec<AlgebraElement> {
        MatrixAlgebra::So(3).standard_basis().elements().to_vec()
    }

    #[test]
    fn single_generator_is_an_abelian_line() {
        let b = so3();
        let span = bracket_closure(&[b[2].scale(3.0)], DEFAULT_RANK_TOLERANCE).unwrap();
        assert_eq!(span.rank(), 1);
        assert!(span.orthonormality_residual() < 1e-14);
    }

    #[test]
    fn two_rotation_generators_give_all_of_so3() {
        let b = so3();
        let span = bracket_closure(&[b[0].clone(), b[1].clone()], DEFAULT_RANK_TOLERANCE).unwrap();
        assert_eq!(span.rank(), 3);
        assert!(matches!(span.generation_log()[2].parents, Provenance::Bracket(_, _)));
        assert!(span.closure_residual() < 1e-12);
    }

    #[test]
    fn embedded_block_stays_in_the_block() {
        let so4 = MatrixAlgebra::So(4).standard_basis();
        // E_10 − E_01: rotation in the (0,1) plane.
        let gen = so4.elements()[0].clone();
        let span = bracket_closure(&[gen], DEFAULT_RANK_TOLERANCE).unwrap();
        assert_eq!(span.rank(), 1);
        let m = span.basis()[0].matrix();
        for i in 0..4 {
            for j in 0..4 {
                if i >= 2 || j >= 2 {
                    assert_eq!(m[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_generators_give_rank_zero() {
        let z = AlgebraElement::zero(MatrixAlgebra::So(3));
        let span = bracket_closure(&[z.clone(), z], DEFAULT_RANK_TOLERANCE).unwrap();
        assert_eq!(span.rank(), 0);
    }

    #[test]
    fn empty_generator_list_is_rejected() {
        assert!(bracket_closure(&[], DEFAULT_RANK_TOLERANCE).is_err());
    }

    #[test]
    fn ad_stability_examples() {
        let b = so3();
        let full = SubalgebraSpan::full(MatrixAlgebra::So(3));
        let probes = vec![exp_matrix(&b[0].scale(0.7)).unwrap(), exp_matrix(&b[1].scale(-1.3)).unwrap()];
        assert!(ad_stability_check(&full, &probes).unwrap().max_residual < 1e-12);

        let line = bracket_closure(&[b[2].clone()], DEFAULT_RANK_TOLERANCE).unwrap();
        let own = line.exp_probes(0.9).unwrap();
        assert!(ad_stability_check(&line, &own).unwrap().max_residual < 1e-12);

        let quarter = exp_matrix(&b[0].scale(FRAC_PI_2)).unwrap();
        let r = ad_stability_check(&line, &[quarter]).unwrap().max_residual;
        assert!((r - 1.0).abs() < 1e-12, "{r}");
    }
}
