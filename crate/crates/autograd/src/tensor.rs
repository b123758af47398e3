use std::cell::Cell;
use std::fmt;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::kernels::{self, ConvGeom};
use crate::shape::{self, broadcast_shapes, broadcast_strides, for_each_offset, numel};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

thread_local! {
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

/// Runs `f` with graph recording switched on or off, restoring the previous
/// mode afterwards (also on unwind).
pub fn with_grad_mode<T>(enabled: bool, f: impl FnOnce() -> T) -> T {
    struct Restore(bool);
    impl Drop for Restore {
        fn drop(&mut self) {
            GRAD_ENABLED.with(|g| g.set(self.0));
        }
    }
    let prev = GRAD_ENABLED.with(|g| g.replace(enabled));
    let _restore = Restore(prev);
    f()
}

/// Runs `f` without recording any graph.
pub fn no_grad<T>(f: impl FnOnce() -> T) -> T {
    with_grad_mode(false, f)
}

pub fn is_grad_enabled() -> bool {
    GRAD_ENABLED.with(|g| g.get())
}

/// Immutable dense f64 tensor, row-major. Cloning is cheap (shared node).
///
/// Operations panic on shape mismatch, like indexing out of bounds would;
/// callers that accept untrusted shapes validate them first.
#[derive(Clone)]
pub struct Tensor(pub(crate) Rc<Node>);

pub(crate) struct Node {
    pub(crate) id: u64,
    pub(crate) shape: Vec<usize>,
    pub(crate) data: Rc<[f64]>,
    pub(crate) requires_grad: bool,
    pub(crate) grad_fn: Option<GradFn>,
}

pub(crate) struct GradFn {
    pub(crate) op: Op,
    pub(crate) inputs: Vec<Tensor>,
}

#[derive(Debug, Clone)]
pub(crate) enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Scale(f64),
    AddScalar,
    Sqrt,
    LeakyRelu(f64),
    MatMul,
    Transpose,
    Reshape,
    BroadcastTo,
    SumTo,
    Conv2d { pad: usize },
    ConvWeightGrad { kernel: usize, pad: usize },
    FlipTranspose,
    Upsample2,
    SumPool2,
    Narrow { axis: usize, start: usize },
    PadAxis { axis: usize, before: usize },
    Concat { axis: usize },
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let preview: Vec<f64> = self.data().iter().take(8).copied().collect();
        f.debug_struct("Tensor")
            .field("shape", &self.shape())
            .field("requires_grad", &self.requires_grad())
            .field("data", &preview)
            .finish()
    }
}

impl Tensor {
    fn leaf(shape: Vec<usize>, data: Rc<[f64]>, requires_grad: bool) -> Self {
        assert_eq!(numel(&shape), data.len(), "data length does not match shape {shape:?}");
        Tensor(Rc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            shape,
            data,
            requires_grad,
            grad_fn: None,
        }))
    }

    pub(crate) fn from_op(shape: Vec<usize>, data: Vec<f64>, op: Op, inputs: Vec<Tensor>) -> Self {
        let track = is_grad_enabled() && inputs.iter().any(Tensor::requires_grad);
        let mut t = Self::leaf(shape, data.into(), track);
        if track {
            Rc::get_mut(&mut t.0).expect("fresh node").grad_fn = Some(GradFn { op, inputs });
        }
        t
    }

    pub fn new(shape: &[usize], data: Vec<f64>) -> Self {
        Self::leaf(shape.to_vec(), data.into(), false)
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        Self::new(shape, vec![value; numel(shape)])
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::full(shape, 1.0)
    }

    pub fn scalar(value: f64) -> Self {
        Self::new(&[], vec![value])
    }

    /// A new leaf sharing this tensor's data, marked as a gradient target.
    pub fn requires_grad_leaf(&self) -> Self {
        Self::leaf(self.0.shape.clone(), self.0.data.clone(), true)
    }

    /// A new leaf sharing this tensor's data, cut from any graph.
    pub fn detach(&self) -> Self {
        Self::leaf(self.0.shape.clone(), self.0.data.clone(), false)
    }

    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn dim(&self, axis: usize) -> usize {
        self.0.shape[axis]
    }

    pub fn rank(&self) -> usize {
        self.0.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.0.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.0.data
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.data.to_vec()
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    pub fn is_leaf(&self) -> bool {
        self.0.grad_fn.is_none()
    }

    /// Value of a single-element tensor.
    pub fn item(&self) -> f64 {
        assert_eq!(self.numel(), 1, "item() on tensor of shape {:?}", self.shape());
        self.0.data[0]
    }

    pub fn all_finite(&self) -> bool {
        self.data().iter().all(|v| v.is_finite())
    }

    fn map(&self, op: Op, f: impl Fn(f64) -> f64) -> Tensor {
        let data = self.data().iter().map(|&v| f(v)).collect();
        Tensor::from_op(self.shape().to_vec(), data, op, vec![self.clone()])
    }

    fn zip_same(&self, other: &Tensor, op: Op, f: impl Fn(f64, f64) -> f64) -> Tensor {
        debug_assert_eq!(self.shape(), other.shape());
        let data = self.data().iter().zip(other.data()).map(|(&a, &b)| f(a, b)).collect();
        Tensor::from_op(self.shape().to_vec(), data, op, vec![self.clone(), other.clone()])
    }

    fn binary(&self, other: &Tensor, op: Op, f: impl Fn(f64, f64) -> f64) -> Tensor {
        if self.shape() == other.shape() {
            return self.zip_same(other, op, f);
        }
        let target = broadcast_shapes(self.shape(), other.shape()).unwrap_or_else(|| {
            panic!("shapes {:?} and {:?} do not broadcast", self.shape(), other.shape())
        });
        self.broadcast_to(&target).zip_same(&other.broadcast_to(&target), op, f)
    }

    pub fn add(&self, other: &Tensor) -> Tensor {
        self.binary(other, Op::Add, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        self.binary(other, Op::Sub, |a, b| a - b)
    }

    pub fn mul(&self, other: &Tensor) -> Tensor {
        self.binary(other, Op::Mul, |a, b| a * b)
    }

    pub fn div(&self, other: &Tensor) -> Tensor {
        self.binary(other, Op::Div, |a, b| a / b)
    }

    pub fn neg(&self) -> Tensor {
        self.map(Op::Neg, |a| -a)
    }

    pub fn scale(&self, c: f64) -> Tensor {
        self.map(Op::Scale(c), |a| a * c)
    }

    pub fn add_scalar(&self, c: f64) -> Tensor {
        self.map(Op::AddScalar, |a| a + c)
    }

    pub fn square(&self) -> Tensor {
        self.mul(self)
    }

    pub fn sqrt(&self) -> Tensor {
        self.map(Op::Sqrt, f64::sqrt)
    }

    pub fn leaky_relu(&self, slope: f64) -> Tensor {
        self.map(Op::LeakyRelu(slope), |a| if a > 0.0 { a } else { a * slope })
    }

    /// Constant 0/1 style mask used by the leaky-ReLU derivative.
    pub(crate) fn leaky_relu_slope_mask(&self, slope: f64) -> Tensor {
        let data = self.data().iter().map(|&a| if a > 0.0 { 1.0 } else { slope }).collect();
        Tensor::new(self.shape(), data)
    }

    /// Matrix product of two rank-2 tensors.
    pub fn matmul(&self, other: &Tensor) -> Tensor {
        assert!(self.rank() == 2 && other.rank() == 2, "matmul expects rank-2 operands");
        let (m, k) = (self.dim(0), self.dim(1));
        let (k2, n) = (other.dim(0), other.dim(1));
        assert_eq!(k, k2, "matmul inner dimensions {k} vs {k2}");
        let data = kernels::matmul(self.data(), other.data(), m, k, n);
        Tensor::from_op(vec![m, n], data, Op::MatMul, vec![self.clone(), other.clone()])
    }

    /// Transpose of a rank-2 tensor.
    pub fn t(&self) -> Tensor {
        assert_eq!(self.rank(), 2, "t() expects rank 2");
        let (r, c) = (self.dim(0), self.dim(1));
        let data = kernels::transpose2(self.data(), r, c);
        Tensor::from_op(vec![c, r], data, Op::Transpose, vec![self.clone()])
    }

    pub fn reshape(&self, shape: &[usize]) -> Tensor {
        assert_eq!(numel(shape), self.numel(), "cannot reshape {:?} to {shape:?}", self.shape());
        if shape == self.shape() {
            return self.clone();
        }
        let track = is_grad_enabled() && self.requires_grad();
        let mut t = Tensor::leaf(shape.to_vec(), self.0.data.clone(), track);
        if track {
            Rc::get_mut(&mut t.0).expect("fresh node").grad_fn =
                Some(GradFn { op: Op::Reshape, inputs: vec![self.clone()] });
        }
        t
    }

    pub fn broadcast_to(&self, target: &[usize]) -> Tensor {
        if self.shape() == target {
            return self.clone();
        }
        assert!(
            shape::broadcasts_to(self.shape(), target),
            "cannot broadcast {:?} to {target:?}",
            self.shape()
        );
        let st = broadcast_strides(self.shape(), target);
        let src = self.data();
        let mut out = vec![0.0; numel(target)];
        for_each_offset(target, &st, |pos, off| out[pos] = src[off]);
        Tensor::from_op(target.to_vec(), out, Op::BroadcastTo, vec![self.clone()])
    }

    /// Sums broadcast axes away so the result has shape `target`
    /// (the adjoint of [`Tensor::broadcast_to`]).
    pub fn sum_to(&self, target: &[usize]) -> Tensor {
        if self.shape() == target {
            return self.clone();
        }
        assert!(
            shape::broadcasts_to(target, self.shape()),
            "cannot sum {:?} down to {target:?}",
            self.shape()
        );
        let st = broadcast_strides(target, self.shape());
        let src = self.data();
        let mut out = vec![0.0; numel(target)];
        for_each_offset(self.shape(), &st, |pos, off| out[off] += src[pos]);
        Tensor::from_op(target.to_vec(), out, Op::SumTo, vec![self.clone()])
    }

    pub fn sum(&self) -> Tensor {
        self.sum_to(&[])
    }

    pub fn mean(&self) -> Tensor {
        let n = self.numel() as f64;
        self.sum().scale(1.0 / n)
    }

    /// Sum over `axes`, keeping them as length-1 dimensions.
    pub fn sum_keepdim(&self, axes: &[usize]) -> Tensor {
        let mut target = self.shape().to_vec();
        for &a in axes {
            target[a] = 1;
        }
        self.sum_to(&target)
    }

    pub fn mean_keepdim(&self, axes: &[usize]) -> Tensor {
        let count: usize = axes.iter().map(|&a| self.dim(a)).product();
        self.sum_keepdim(axes).scale(1.0 / count as f64)
    }

    /// Stride-1 cross-correlation of `[n, ci, h, w]` with `[co, ci, k, k]`,
    /// zero padding `pad` on every side.
    pub fn conv2d(&self, weight: &Tensor, pad: usize) -> Tensor {
        let g = conv_geom(self.shape(), weight.shape(), pad);
        let data = kernels::conv2d(self.data(), weight.data(), &g);
        Tensor::from_op(
            vec![g.batch, g.out_ch, g.out_h(), g.out_w()],
            data,
            Op::Conv2d { pad },
            vec![self.clone(), weight.clone()],
        )
    }

    /// Gradient of `conv2d(self, w, pad)` with respect to `w`, given the output
    /// gradient `grad_out`.
    pub fn conv2d_weight_grad(&self, grad_out: &Tensor, kernel: usize, pad: usize) -> Tensor {
        let (n, ci, h, w) = dims4(self.shape());
        let g = ConvGeom { batch: n, in_ch: ci, out_ch: grad_out.dim(1), height: h, width: w, kernel, pad };
        assert_eq!(grad_out.shape(), [n, g.out_ch, g.out_h(), g.out_w()], "grad_out shape");
        let data = kernels::conv2d_weight_grad(self.data(), grad_out.data(), &g);
        Tensor::from_op(
            vec![g.out_ch, ci, kernel, kernel],
            data,
            Op::ConvWeightGrad { kernel, pad },
            vec![self.clone(), grad_out.clone()],
        )
    }

    /// `[co, ci, k, k]` → `[ci, co, k, k]` with flipped kernels.
    pub fn flip_transpose(&self) -> Tensor {
        let (co, ci, k, k2) = dims4(self.shape());
        assert_eq!(k, k2, "square kernels only");
        let data = kernels::flip_transpose(self.data(), co, ci, k);
        Tensor::from_op(vec![ci, co, k, k], data, Op::FlipTranspose, vec![self.clone()])
    }

    /// Nearest-neighbour 2× upsampling of `[n, c, h, w]`.
    pub fn upsample2(&self) -> Tensor {
        let (n, c, h, w) = dims4(self.shape());
        let data = kernels::upsample2(self.data(), n * c, h, w);
        Tensor::from_op(vec![n, c, 2 * h, 2 * w], data, Op::Upsample2, vec![self.clone()])
    }

    /// Sum over 2×2 blocks of `[n, c, h, w]`.
    pub fn sum_pool2(&self) -> Tensor {
        let (n, c, h, w) = dims4(self.shape());
        assert!(h % 2 == 0 && w % 2 == 0, "sum_pool2 needs even spatial dims");
        let data = kernels::sum_pool2(self.data(), n * c, h, w);
        Tensor::from_op(vec![n, c, h / 2, w / 2], data, Op::SumPool2, vec![self.clone()])
    }

    pub fn avg_pool2(&self) -> Tensor {
        self.sum_pool2().scale(0.25)
    }

    pub fn narrow(&self, axis: usize, start: usize, len: usize) -> Tensor {
        assert!(start + len <= self.dim(axis), "narrow out of range");
        let data = kernels::narrow(self.data(), self.shape(), axis, start, len);
        let mut shape = self.shape().to_vec();
        shape[axis] = len;
        Tensor::from_op(shape, data, Op::Narrow { axis, start }, vec![self.clone()])
    }

    pub fn pad_axis(&self, axis: usize, before: usize, after: usize) -> Tensor {
        let data = kernels::pad_axis(self.data(), self.shape(), axis, before, after);
        let mut shape = self.shape().to_vec();
        shape[axis] += before + after;
        Tensor::from_op(shape, data, Op::PadAxis { axis, before }, vec![self.clone()])
    }

    pub fn concat(parts: &[Tensor], axis: usize) -> Tensor {
        assert!(!parts.is_empty(), "concat of nothing");
        let first = parts[0].shape();
        for p in parts {
            assert_eq!(p.rank(), first.len(), "concat rank mismatch");
            for (i, (&a, &b)) in p.shape().iter().zip(first).enumerate() {
                assert!(i == axis || a == b, "concat shape mismatch {:?} vs {first:?}", p.shape());
            }
        }
        if parts.len() == 1 {
            return parts[0].clone();
        }
        let (outer, _, inner) = kernels::axis_split(first, axis);
        let total: usize = parts.iter().map(|p| p.dim(axis)).sum();
        let mut data = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for p in parts {
                let len = p.dim(axis) * inner;
                data.extend_from_slice(&p.data()[o * len..(o + 1) * len]);
            }
        }
        let mut shape = first.to_vec();
        shape[axis] = total;
        Tensor::from_op(shape, data, Op::Concat { axis }, parts.to_vec())
    }
}

fn dims4(shape: &[usize]) -> (usize, usize, usize, usize) {
    assert_eq!(shape.len(), 4, "expected rank-4 tensor, got {shape:?}");
    (shape[0], shape[1], shape[2], shape[3])
}

fn conv_geom(x: &[usize], w: &[usize], pad: usize) -> ConvGeom {
    let (n, ci, h, wd) = dims4(x);
    let (co, wci, k, k2) = dims4(w);
    assert_eq!(ci, wci, "conv2d channel mismatch: input {ci}, weight {wci}");
    assert_eq!(k, k2, "square kernels only");
    assert!(h + 2 * pad >= k && wd + 2 * pad >= k, "kernel larger than padded input");
    ConvGeom { batch: n, in_ch: ci, out_ch: co, height: h, width: wd, kernel: k, pad }
}
