use crate::forecast::UncertaintySet;

use super::RobustError;

pub const DEFAULT_VERTEX_CAP: usize = 12;

/// Extreme points of the uncertainty set restricted to `dims`.
///
/// Coordinates outside `dims` are held at `clamp(0, l, u)`. A vertex either
/// is a box corner inside the slab, or has all but one coordinate at a box
/// bound and the remaining one set so the aggregate sits on a slab face.
/// Output order: corners in binary order, then slab points by free
/// coordinate; duplicates are dropped.
pub fn enumerate_vertices(set: &UncertaintySet, dims: &[usize], cap: usize) -> Result<Vec<Vec<f64>>, RobustError> {
    let (lo, hi) = (set.lower(), set.upper());
    let mut base: Vec<f64> = (0..set.dim()).map(|i| 0f64.clamp(lo[i], hi[i])).collect();
    let mut free: Vec<usize> = Vec::new();
    for &i in dims {
        if i >= set.dim() {
            return Err(RobustError::Internal(format!("dimension {i} out of range")));
        }
        if lo[i] < hi[i] && !free.contains(&i) {
            free.push(i);
        } else {
            base[i] = lo[i];
        }
    }
    let d = free.len();
    if d > cap {
        return Err(RobustError::TooManyDimensions { got: d, cap });
    }
    let fixed_sum: f64 = (0..set.dim()).filter(|i| !free.contains(i)).map(|i| base[i]).sum();
    let a = set.rho_minus() - fixed_sum;
    let b = set.rho_plus() - fixed_sum;
    let tol = 1e-12 * (1.0 + a.abs().max(b.abs()));

    let mut out: Vec<Vec<f64>> = Vec::new();
    let push = |v: Vec<f64>, out: &mut Vec<Vec<f64>>| {
        if !out.iter().any(|w| super::max_abs_diff(w, &v) <= tol) {
            out.push(v);
        }
    };
    for mask in 0u64..(1u64 << d) {
        let mut v = base.clone();
        let mut s = 0.0;
        for (k, &i) in free.iter().enumerate() {
            v[i] = if mask >> k & 1 == 1 { hi[i] } else { lo[i] };
            s += v[i];
        }
        if s >= a - tol && s <= b + tol {
            push(v, &mut out);
        }
    }
    for &fi in &free {
        let others: Vec<usize> = free.iter().copied().filter(|&i| i != fi).collect();
        for mask in 0u64..(1u64 << (d - 1)) {
            let mut v = base.clone();
            let mut s = 0.0;
            for (k, &i) in others.iter().enumerate() {
                v[i] = if mask >> k & 1 == 1 { hi[i] } else { lo[i] };
                s += v[i];
            }
            for face in [a, b] {
                let t = face - s;
                if t > lo[fi] && t < hi[fi] {
                    let mut w = v.clone();
                    w[fi] = t;
                    push(w, &mut out);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inactive_slab_gives_all_corners() {
        let u = UncertaintySet::new(vec![-1.0; 3], vec![1.0; 3], -10.0, 10.0).unwrap();
        assert_eq!(enumerate_vertices(&u, &[0, 1, 2], 12).unwrap().len(), 8);
    }

    #[test]
    fn two_cut_corners_give_six_points() {
        let u = UncertaintySet::new(vec![-2.0, -2.0], vec![2.0, 2.0], -3.0, 3.0).unwrap();
        let v = enumerate_vertices(&u, &[0, 1], 12).unwrap();
        assert_eq!(v.len(), 6);
        assert!(v.iter().all(|p| u.contains(p, 1e-12)));
    }

    #[test]
    fn cap_is_enforced() {
        let u = UncertaintySet::new(vec![-1.0; 4], vec![1.0; 4], -1.0, 1.0).unwrap();
        assert!(matches!(
            enumerate_vertices(&u, &[0, 1, 2, 3], 3),
            Err(RobustError::TooManyDimensions { got: 4, cap: 3 })
        ));
    }
}
