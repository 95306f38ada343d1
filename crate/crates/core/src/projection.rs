//! Two-dimensional projection of subspace features for browsing.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues, eigenvectors as columns of a row-major `n×n`).
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + math::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

fn centroid(points: &[Vec<f64>]) -> Vec<f64> {
    let mut sum = vec![0.0; points[0].len()];
    for p in points {
        math::axpy(1.0, p, &mut sum);
    }
    let n = points.len() as f64;
    sum.into_iter().map(|s| s / n).collect()
}

/// Top principal axes of the centered points, each scaled to unit length and
/// signed so its largest-magnitude loading is positive.
pub fn principal_axes(points: &[Vec<f64>], count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let Some(first) = points.first() else {
        return Err(Error::Config("no points to project".into()));
    };
    let d = first.len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, actual: points.iter().find(|p| p.len() != d).unwrap().len() });
    }
    let n = points.len() as f64;
    let mean = centroid(points);
    let mut cov = vec![vec![0.0; d]; d];
    for p in points {
        let c: Vec<f64> = p.iter().zip(&mean).map(|(x, m)| x - m).collect();
        for i in 0..d {
            if c[i] == 0.0 {
                continue;
            }
            for j in i..d {
                cov[i][j] += c[i] * c[j] / n;
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            cov[i][j] = cov[j][i];
        }
    }
    let (values, vectors) = jacobi_eigen(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut axes = Vec::new();
    let mut vals = Vec::new();
    for &col in order.iter().take(count.min(d)) {
        let mut axis: Vec<f64> = vectors.iter().map(|row| row[col]).collect();
        let lead = axis.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if lead < 0.0 {
            axis.iter_mut().for_each(|x| *x = -*x);
        }
        axes.push(axis);
        vals.push(values[col]);
    }
    Ok((vals, axes))
}

/// Coordinates of each point on the top two principal axes (centered).
pub fn pca_2d(points: &[Vec<f64>]) -> Result<Vec<[f64; 2]>> {
    let (_, axes) = principal_axes(points, 2)?;
    let mean = centroid(points);
    Ok(points
        .iter()
        .map(|p| {
            let c: Vec<f64> = p.iter().zip(&mean).map(|(x, m)| x - m).collect();
            let u = axes.first().map_or(0.0, |a| math::dot(a, &c));
            let v = axes.get(1).map_or(0.0, |a| math::dot(a, &c));
            [u, v]
        })
        .collect())
}

/// Places each point on the nearest free cell of a `rows × cols` grid after
/// scaling the point cloud to the grid's extent. Points are placed in input
/// order; once the grid is full the remaining points get `None`.
pub fn grid_snap(points: &[[f64; 2]], rows: usize, cols: usize) -> Vec<Option<(usize, usize)>> {
    if rows == 0 || cols == 0 {
        return vec![None; points.len()];
    }
    let span = |axis: usize| {
        let lo = points.iter().map(|p| p[axis]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[axis]).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (ulo, uhi) = span(0);
    let (vlo, vhi) = span(1);
    let scale = |x: f64, lo: f64, hi: f64, cells: usize| {
        if hi > lo {
            (x - lo) / (hi - lo) * (cells - 1) as f64
        } else {
            (cells - 1) as f64 / 2.0
        }
    };
    let mut taken = vec![false; rows * cols];
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let c = scale(p[0], ulo, uhi, cols);
        let r = scale(p[1], vlo, vhi, rows);
        let mut best: Option<(f64, usize)> = None;
        for (cell, _) in taken.iter().enumerate().filter(|(_, &t)| !t) {
            let dr = (cell / cols) as f64 - r;
            let dc = (cell % cols) as f64 - c;
            let d = dr * dr + dc * dc;
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, cell));
            }
        }
        out.push(best.map(|(_, cell)| {
            taken[cell] = true;
            (cell / cols, cell % cols)
        }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_2d_data_is_rotated_rigidly() {
        let pts = vec![vec![1.0, 2.0], vec![-1.0, -2.0], vec![3.0, -0.5], vec![-3.0, 0.5]];
        let proj = pca_2d(&pts).unwrap();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                let before = math::squared_distance(&pts[i], &pts[j]);
                let after = math::squared_distance(&proj[i], &proj[j]);
                assert!((libm::sqrt(before) - libm::sqrt(after)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn identical_points_project_to_origin() {
        let proj = pca_2d(&vec![vec![0.5, 1.5, -2.0]; 5]).unwrap();
        assert!(proj.iter().all(|p| p[0].abs() < 1e-12 && p[1].abs() < 1e-12));
    }

    #[test]
    fn first_axis_follows_largest_variance() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![0.1 * (i % 2) as f64, i as f64, 0.0]).collect();
        let (vals, axes) = principal_axes(&pts, 2).unwrap();
        assert!(vals[0] > vals[1]);
        assert!((axes[0][1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn grid_cells_hold_one_item() {
        let pts = vec![[0.0, 0.0]; 6];
        let cells = grid_snap(&pts, 2, 2);
        let placed: Vec<_> = cells.iter().flatten().collect();
        assert_eq!(placed.len(), 4);
        let mut uniq = placed.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 4);
        assert!(cells[4].is_none() && cells[5].is_none());
    }
}
