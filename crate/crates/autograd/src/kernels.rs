//! Raw numeric kernels. Everything here works on plain slices; graph recording
//! lives in `tensor`.

/// `c = a · b` for row-major `a: m×k`, `b: k×n`.
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    gemm(m, k, n, a, k as isize, 1, b, n as isize, 1, &mut c, n as isize, 1);
    c
}

#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    c: &mut [f64],
    rsc: isize,
    csc: isize,
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    // SAFETY: callers pass slices whose extents cover every (row, col) addressed
    // through the given strides; `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            rsc,
            csc,
        );
    }
}

pub fn transpose2(x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = x[r * cols + c];
        }
    }
    out
}

/// Geometry of a stride-1 square-kernel convolution.
#[derive(Debug, Clone, Copy)]
pub struct ConvGeom {
    pub batch: usize,
    pub in_ch: usize,
    pub out_ch: usize,
    pub height: usize,
    pub width: usize,
    pub kernel: usize,
    pub pad: usize,
}

impl ConvGeom {
    pub fn out_h(&self) -> usize {
        self.height + 2 * self.pad + 1 - self.kernel
    }
    pub fn out_w(&self) -> usize {
        self.width + 2 * self.pad + 1 - self.kernel
    }
    fn col_rows(&self) -> usize {
        self.in_ch * self.kernel * self.kernel
    }
}

/// Unfolds one sample `[ci, h, w]` into rows of `col`, a row-major
/// `[ci·k·k, stride]` matrix; the sample's columns start at `offset`.
fn im2col_into(x: &[f64], g: &ConvGeom, col: &mut [f64], stride: usize, offset: usize) {
    let (oh, ow, k, p) = (g.out_h(), g.out_w(), g.kernel, g.pad as isize);
    for c in 0..g.in_ch {
        let plane = &x[c * g.height * g.width..(c + 1) * g.height * g.width];
        for dy in 0..k {
            for dx in 0..k {
                let row = (c * k + dy) * k + dx;
                let dst = &mut col[row * stride + offset..row * stride + offset + oh * ow];
                // valid output columns: 0 ≤ ox + dx − p < width
                let lo = (p - dx as isize).clamp(0, ow as isize) as usize;
                let hi = (g.width as isize + p - dx as isize).clamp(0, ow as isize) as usize;
                if lo >= hi {
                    continue;
                }
                for oy in 0..oh {
                    let iy = oy as isize + dy as isize - p;
                    if iy < 0 || iy >= g.height as isize {
                        continue;
                    }
                    let src_start = iy as usize * g.width + lo + dx - g.pad;
                    dst[oy * ow + lo..oy * ow + hi].copy_from_slice(&plane[src_start..src_start + hi - lo]);
                }
            }
        }
    }
}

/// The whole batch unfolded into one `[ci·k·k, n·oh·ow]` matrix.
fn batch_cols(x: &[f64], g: &ConvGeom) -> Vec<f64> {
    let in_len = g.in_ch * g.height * g.width;
    let spatial = g.out_h() * g.out_w();
    let stride = g.batch * spatial;
    let mut col = vec![0.0; g.col_rows() * stride];
    for (s, xs) in x.chunks(in_len.max(1)).enumerate().take(g.batch) {
        im2col_into(xs, g, &mut col, stride, s * spatial);
    }
    col
}

/// `[n, c, s]` ↔ `[c, n, s]`.
fn swap_outer(x: &[f64], a: usize, b: usize, inner: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for i in 0..a {
        for j in 0..b {
            let src = (i * b + j) * inner;
            let dst = (j * a + i) * inner;
            out[dst..dst + inner].copy_from_slice(&x[src..src + inner]);
        }
    }
    out
}

/// Cross-correlation `x: [n, ci, h, w]` with `w: [co, ci, k, k]`, computed
/// as one matrix product over the unfolded batch.
pub fn conv2d(x: &[f64], w: &[f64], g: &ConvGeom) -> Vec<f64> {
    let spatial = g.out_h() * g.out_w();
    let cols = batch_cols(x, g);
    let kk = g.col_rows();
    let n = g.batch * spatial;
    let mut big = vec![0.0; g.out_ch * n];
    gemm(g.out_ch, kk, n, w, kk as isize, 1, &cols, n as isize, 1, &mut big, n as isize, 1);
    swap_outer(&big, g.out_ch, g.batch, spatial)
}

/// Weight gradient of [`conv2d`]: `go · col(x)ᵀ` over the whole batch,
/// shape `[co, ci, k, k]`.
pub fn conv2d_weight_grad(x: &[f64], go: &[f64], g: &ConvGeom) -> Vec<f64> {
    let spatial = g.out_h() * g.out_w();
    let n = g.batch * spatial;
    let kk = g.col_rows();
    let cols = batch_cols(x, g);
    let go_big = swap_outer(go, g.batch, g.out_ch, spatial);
    let mut total = vec![0.0; g.out_ch * kk];
    gemm(g.out_ch, n, kk, &go_big, n as isize, 1, &cols, 1, n as isize, &mut total, kk as isize, 1);
    total
}

/// `[co, ci, k, k]` → `[ci, co, k, k]` with both spatial axes reversed.
pub fn flip_transpose(w: &[f64], co: usize, ci: usize, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; w.len()];
    for o in 0..co {
        for i in 0..ci {
            for y in 0..k {
                for x in 0..k {
                    out[((i * co + o) * k + (k - 1 - y)) * k + (k - 1 - x)] = w[((o * ci + i) * k + y) * k + x];
                }
            }
        }
    }
    out
}

/// Nearest-neighbour 2× upsampling of `[planes, h, w]`.
pub fn upsample2(x: &[f64], planes: usize, h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; planes * 4 * h * w];
    for p in 0..planes {
        let src = &x[p * h * w..(p + 1) * h * w];
        let dst = &mut out[p * 4 * h * w..(p + 1) * 4 * h * w];
        for y in 0..2 * h {
            for xx in 0..2 * w {
                dst[y * 2 * w + xx] = src[(y / 2) * w + xx / 2];
            }
        }
    }
    out
}

/// Sum over non-overlapping 2×2 blocks of `[planes, h, w]` (h, w even).
pub fn sum_pool2(x: &[f64], planes: usize, h: usize, w: usize) -> Vec<f64> {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![0.0; planes * oh * ow];
    for p in 0..planes {
        let src = &x[p * h * w..(p + 1) * h * w];
        let dst = &mut out[p * oh * ow..(p + 1) * oh * ow];
        for y in 0..oh {
            for xx in 0..ow {
                let a = src[2 * y * w + 2 * xx];
                let b = src[2 * y * w + 2 * xx + 1];
                let c = src[(2 * y + 1) * w + 2 * xx];
                let d = src[(2 * y + 1) * w + 2 * xx + 1];
                dst[y * ow + xx] = (a + b) + (c + d);
            }
        }
    }
    out
}

/// Splits a shape around `axis` into (outer, axis length, inner).
pub fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

pub fn narrow(x: &[f64], shape: &[usize], axis: usize, start: usize, len: usize) -> Vec<f64> {
    let (outer, n, inner) = axis_split(shape, axis);
    let mut out = Vec::with_capacity(outer * len * inner);
    for o in 0..outer {
        let base = o * n * inner;
        out.extend_from_slice(&x[base + start * inner..base + (start + len) * inner]);
    }
    out
}

pub fn pad_axis(x: &[f64], shape: &[usize], axis: usize, before: usize, after: usize) -> Vec<f64> {
    let (outer, n, inner) = axis_split(shape, axis);
    let total = n + before + after;
    let mut out = vec![0.0; outer * total * inner];
    for o in 0..outer {
        let dst = o * total * inner + before * inner;
        out[dst..dst + n * inner].copy_from_slice(&x[o * n * inner..(o + 1) * n * inner]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_identity_kernel() {
        let g = ConvGeom { batch: 1, in_ch: 1, out_ch: 1, height: 2, width: 2, kernel: 3, pad: 1 };
        let mut w = vec![0.0; 9];
        w[4] = 1.0;
        let x = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(conv2d(&x, &w, &g), x);
    }

    #[test]
    fn conv_matches_direct_loop() {
        let g = ConvGeom { batch: 2, in_ch: 2, out_ch: 3, height: 3, width: 4, kernel: 3, pad: 1 };
        let x: Vec<f64> = (0..2 * 2 * 12).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let w: Vec<f64> = (0..3 * 2 * 9).map(|i| ((i * 5) % 7) as f64 - 3.0).collect();
        let got = conv2d(&x, &w, &g);
        for n in 0..2 {
            for o in 0..3 {
                for y in 0..3 {
                    for xx in 0..4 {
                        let mut acc = 0.0;
                        for i in 0..2 {
                            for dy in 0..3 {
                                for dx in 0..3 {
                                    let iy = y as isize + dy as isize - 1;
                                    let ix = xx as isize + dx as isize - 1;
                                    if iy < 0 || iy >= 3 || ix < 0 || ix >= 4 {
                                        continue;
                                    }
                                    acc += w[((o * 2 + i) * 3 + dy) * 3 + dx]
                                        * x[((n * 2 + i) * 3 + iy as usize) * 4 + ix as usize];
                                }
                            }
                        }
                        assert_eq!(got[((n * 3 + o) * 3 + y) * 4 + xx], acc);
                    }
                }
            }
        }
    }

    #[test]
    fn pool_and_upsample() {
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let up = upsample2(&x, 1, 2, 2);
        assert_eq!(up[..4], [1.0, 1.0, 2.0, 2.0]);
        assert_eq!(sum_pool2(&up, 1, 4, 4), vec![4.0, 8.0, 12.0, 16.0]);
    }

    #[test]
    fn narrow_pad_inverse() {
        let x: Vec<f64> = (0..12).map(f64::from).collect();
        let shape = [2, 3, 2];
        let mid = narrow(&x, &shape, 1, 1, 1);
        assert_eq!(mid, vec![2.0, 3.0, 8.0, 9.0]);
        let back = pad_axis(&mid, &[2, 1, 2], 1, 1, 1);
        assert_eq!(back, vec![0.0, 0.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0, 8.0, 9.0, 0.0, 0.0]);
    }
}
