//! Shape arithmetic shared by the tensor kernels.

pub fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Row-major strides for `shape`.
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    let mut acc = 1;
    for (s, &d) in out.iter_mut().zip(shape).rev() {
        *s = acc;
        acc *= d;
    }
    out
}

/// Numpy-style broadcast of two shapes, or `None` when they do not conform.
pub fn broadcast_shapes(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for i in 0..rank {
        let da = if i + a.len() >= rank { a[i + a.len() - rank] } else { 1 };
        let db = if i + b.len() >= rank { b[i + b.len() - rank] } else { 1 };
        out[i] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return None,
        };
    }
    Some(out)
}

/// True when `small` broadcasts to `big` without changing `big`.
pub fn broadcasts_to(small: &[usize], big: &[usize]) -> bool {
    small.len() <= big.len() && broadcast_shapes(small, big).as_deref() == Some(big)
}

/// Strides of `small` laid over the index space of `big`; broadcast axes get stride 0.
pub(crate) fn broadcast_strides(small: &[usize], big: &[usize]) -> Vec<usize> {
    let offset = big.len() - small.len();
    let own = strides(small);
    (0..big.len())
        .map(|i| {
            if i < offset || small[i - offset] == 1 {
                0
            } else {
                own[i - offset]
            }
        })
        .collect()
}

/// Visits every row-major position of `big`, passing the matching offset into a
/// tensor with the given (possibly zero) strides.
pub(crate) fn for_each_offset(big: &[usize], small_strides: &[usize], mut f: impl FnMut(usize, usize)) {
    let total = numel(big);
    if total == 0 {
        return;
    }
    let rank = big.len();
    let mut idx = vec![0usize; rank];
    let mut off = 0usize;
    for pos in 0..total {
        f(pos, off);
        for axis in (0..rank).rev() {
            idx[axis] += 1;
            off += small_strides[axis];
            if idx[axis] < big[axis] {
                break;
            }
            off -= small_strides[axis] * big[axis];
            idx[axis] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadcast_rules() {
        assert_eq!(broadcast_shapes(&[1, 3, 1, 1], &[2, 1, 4, 4]), Some(vec![2, 3, 4, 4]));
        assert_eq!(broadcast_shapes(&[3], &[2, 3]), Some(vec![2, 3]));
        assert_eq!(broadcast_shapes(&[], &[2, 3]), Some(vec![2, 3]));
        assert_eq!(broadcast_shapes(&[2], &[3]), None);
        assert!(broadcasts_to(&[1, 3], &[4, 3]));
        assert!(!broadcasts_to(&[4, 3], &[1, 3]));
    }

    #[test]
    fn offsets_follow_zero_strides() {
        let big = [2, 3];
        let st = broadcast_strides(&[3], &big);
        let mut seen = Vec::new();
        for_each_offset(&big, &st, |_, off| seen.push(off));
        assert_eq!(seen, vec![0, 1, 2, 0, 1, 2]);
    }
}
