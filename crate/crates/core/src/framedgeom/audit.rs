use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::{fiber_projectors, lie_bracket, sample_points, Scenario, VectorField};
use crate::error::{Error, Result};

const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct BracketReport {
    /// Smallest depth at which the iterated brackets span the tangent
    /// space at every sample point.
    pub step: usize,
    /// Rank of the span at each depth, worst case over sample points.
    pub ranks: Vec<usize>,
}

fn rank(vs: &[Vec<Complex64>], n: usize) -> usize {
    if vs.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(n, vs.len(), |i, j| vs[j][i]);
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    m.svd(false, false)
        .singular_values
        .iter()
        .filter(|s| **s > RANK_TOL * scale)
        .count()
}

/// Checks that iterated brackets of `W` (and its conjugate on complex
/// charts) span the tangent space within `max_depth`.
pub fn bracket_generating(s: &Scenario, max_depth: usize) -> Result<BracketReport> {
    let n = s.n();
    let gens: Vec<VectorField> = s.distribution.iter().map(|&i| s.frame[i].clone()).collect();
    let points = sample_points(s, 12);
    // layers[d] holds the brackets of depth d + 1 kept so far
    let mut layers: Vec<Vec<VectorField>> = vec![gens.clone()];
    let mut worst = vec![usize::MAX; max_depth];
    let eval_all = |fields: &[VectorField], x: &[f64]| -> Result<Vec<Vec<Complex64>>> {
        fields.iter().map(|f| f.eval(x)).collect()
    };
    for depth in 1..=max_depth {
        if depth > 1 {
            let mut next = Vec::new();
            for x in layers[depth - 2].iter() {
                for g in &gens {
                    let b = lie_bracket(s.chart, g, x)?.canonical();
                    if b.is_zero() != crate::symexpr::Tri::Yes {
                        next.push(b);
                    }
                }
            }
            // drop fields that add nothing at the sample points
            let mut kept: Vec<VectorField> = Vec::new();
            let all_prev: Vec<VectorField> = layers.iter().flatten().cloned().collect();
            for f in next {
                let mut trial = all_prev.clone();
                trial.extend(kept.iter().cloned());
                let before = points
                    .iter()
                    .map(|x| Ok(rank(&eval_all(&trial, x)?, n)))
                    .collect::<Result<Vec<_>>>()?;
                trial.push(f.clone());
                let after = points
                    .iter()
                    .map(|x| Ok(rank(&eval_all(&trial, x)?, n)))
                    .collect::<Result<Vec<_>>>()?;
                if after.iter().zip(&before).any(|(a, b)| a > b) {
                    kept.push(f);
                }
            }
            layers.push(kept);
        }
        let all: Vec<VectorField> = layers.iter().flatten().cloned().collect();
        let mut min_rank = usize::MAX;
        for x in &points {
            min_rank = min_rank.min(rank(&eval_all(&all, x)?, n));
        }
        worst[depth - 1] = min_rank;
        if min_rank == n {
            worst.truncate(depth);
            return Ok(BracketReport { step: depth, ranks: worst });
        }
        if layers.last().map(|l| l.is_empty()).unwrap_or(true) {
            worst.truncate(depth);
            return Err(Error::MaxDepthExceeded { depth, ranks: worst });
        }
    }
    Err(Error::MaxDepthExceeded {
        depth: max_depth,
        ranks: worst,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RankAudit {
    pub passed: bool,
    /// Ranks of `F_phi` by grade at the majority of points.
    pub generic_ranks: Vec<usize>,
    pub points_checked: usize,
    /// Points whose ranks differ from the generic ones.
    pub outliers: Vec<(Vec<f64>, Vec<usize>)>,
}

/// Compares the grade-wise ranks of `F_phi` across sample points.
pub fn constant_rank_audit(s: &Scenario, points: usize) -> Result<RankAudit> {
    let pts = sample_points(s, points);
    let mut by_point = Vec::with_capacity(pts.len());
    let mut tally: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for x in pts {
        let fd = fiber_projectors(s, &x)?;
        *tally.entry(fd.f_phi_ranks.clone()).or_default() += 1;
        by_point.push((x, fd.f_phi_ranks));
    }
    let generic = tally
        .iter()
        .max_by_key(|(_, c)| **c)
        .map(|(r, _)| r.clone())
        .unwrap_or_default();
    let outliers: Vec<_> = by_point.iter().filter(|(_, r)| *r != generic).cloned().collect();
    Ok(RankAudit {
        passed: outliers.is_empty(),
        generic_ranks: generic,
        points_checked: by_point.len(),
        outliers,
    })
}
