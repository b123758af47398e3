//! Reverse-mode differentiation.
//!
//! Every backward rule is written with ordinary tensor operations, so running
//! it with graph recording on (`create_graph = true`) yields gradients that are
//! themselves differentiable. The gradient penalty relies on this.

use std::collections::{HashMap, HashSet};

use crate::tensor::{with_grad_mode, Op, Tensor};

/// Gradients of `output` with respect to each of `inputs`.
///
/// `output` must hold a single element. Inputs that do not influence the
/// output get a zero tensor of their own shape.
pub fn grad(output: &Tensor, inputs: &[&Tensor], create_graph: bool) -> Vec<Tensor> {
    assert_eq!(output.numel(), 1, "grad() needs a scalar output, got {:?}", output.shape());
    let seed = Tensor::ones(output.shape());
    grad_with_seed(output, seed, inputs, create_graph)
}

/// Vector-Jacobian product: gradients of `Σ seed ⊙ output`.
pub fn grad_with_seed(output: &Tensor, seed: Tensor, inputs: &[&Tensor], create_graph: bool) -> Vec<Tensor> {
    assert_eq!(seed.shape(), output.shape(), "seed shape must match output");
    with_grad_mode(create_graph, || backprop(output, seed, inputs))
}

fn topo_order(root: &Tensor) -> Vec<Tensor> {
    let mut order = Vec::new();
    let mut seen = HashSet::new();
    // (node, children pushed?)
    let mut stack = vec![(root.clone(), false)];
    while let Some((node, expanded)) = stack.pop() {
        if expanded {
            order.push(node);
            continue;
        }
        if !node.requires_grad() || !seen.insert(node.id()) {
            continue;
        }
        stack.push((node.clone(), true));
        if let Some(gf) = &node.0.grad_fn {
            for inp in gf.inputs.iter().rev() {
                if inp.requires_grad() && !seen.contains(&inp.id()) {
                    stack.push((inp.clone(), false));
                }
            }
        }
    }
    order
}

fn backprop(output: &Tensor, seed: Tensor, inputs: &[&Tensor]) -> Vec<Tensor> {
    let wanted: HashSet<u64> = inputs.iter().map(|t| t.id()).collect();
    let order = topo_order(output);
    // Nodes with a path to some wanted input; gradients elsewhere are skipped.
    let mut relevant: HashSet<u64> = HashSet::new();
    for node in &order {
        let feeds = wanted.contains(&node.id())
            || node.0.grad_fn.as_ref().is_some_and(|gf| gf.inputs.iter().any(|i| relevant.contains(&i.id())));
        if feeds {
            relevant.insert(node.id());
        }
    }
    let mut found: HashMap<u64, Tensor> = HashMap::new();
    let mut pending: HashMap<u64, Tensor> = HashMap::new();
    pending.insert(output.id(), seed);

    for node in order.iter().rev() {
        let Some(g) = pending.remove(&node.id()) else { continue };
        if wanted.contains(&node.id()) {
            found.insert(node.id(), g.clone());
        }
        let Some(gf) = &node.0.grad_fn else { continue };
        let local = backward_rule(&gf.op, &gf.inputs, node, &g, &relevant);
        for (inp, gi) in gf.inputs.iter().zip(local) {
            let Some(gi) = gi else { continue };
            if !relevant.contains(&inp.id()) {
                continue;
            }
            let acc = match pending.remove(&inp.id()) {
                Some(prev) => prev.add(&gi),
                None => gi,
            };
            pending.insert(inp.id(), acc);
        }
    }

    inputs
        .iter()
        .map(|t| found.remove(&t.id()).unwrap_or_else(|| Tensor::zeros(t.shape())))
        .collect()
}

fn backward_rule(op: &Op, inputs: &[Tensor], out: &Tensor, g: &Tensor, relevant: &HashSet<u64>) -> Vec<Option<Tensor>> {
    let need = |i: usize| relevant.contains(&inputs[i].id());
    match op {
        Op::Add => vec![Some(g.clone()), Some(g.clone())],
        Op::Sub => vec![Some(g.clone()), need(1).then(|| g.neg())],
        Op::Mul => {
            let (a, b) = (&inputs[0], &inputs[1]);
            vec![need(0).then(|| g.mul(b)), need(1).then(|| g.mul(a))]
        }
        Op::Div => {
            let b = &inputs[1];
            vec![need(0).then(|| g.div(b)), need(1).then(|| g.mul(out).div(b).neg())]
        }
        Op::Neg => vec![Some(g.neg())],
        Op::Scale(c) => vec![Some(g.scale(*c))],
        Op::AddScalar => vec![Some(g.clone())],
        Op::Sqrt => vec![Some(g.div(&out.scale(2.0)))],
        Op::LeakyRelu(slope) => vec![Some(g.mul(&inputs[0].leaky_relu_slope_mask(*slope)))],
        Op::MatMul => {
            let (a, b) = (&inputs[0], &inputs[1]);
            vec![need(0).then(|| g.matmul(&b.t())), need(1).then(|| a.t().matmul(g))]
        }
        Op::Transpose => vec![Some(g.t())],
        Op::Reshape => vec![Some(g.reshape(inputs[0].shape()))],
        Op::BroadcastTo => vec![Some(g.sum_to(inputs[0].shape()))],
        Op::SumTo => vec![Some(g.broadcast_to(inputs[0].shape()))],
        Op::Conv2d { pad } => {
            let (x, w) = (&inputs[0], &inputs[1]);
            let k = w.dim(2);
            vec![
                need(0).then(|| g.conv2d(&w.flip_transpose(), k - 1 - pad)),
                need(1).then(|| x.conv2d_weight_grad(g, k, *pad)),
            ]
        }
        Op::ConvWeightGrad { kernel, pad } => {
            let (x, go) = (&inputs[0], &inputs[1]);
            vec![
                need(0).then(|| go.conv2d(&g.flip_transpose(), kernel - 1 - pad)),
                need(1).then(|| x.conv2d(g, *pad)),
            ]
        }
        Op::FlipTranspose => vec![Some(g.flip_transpose())],
        Op::Upsample2 => vec![Some(g.sum_pool2())],
        Op::SumPool2 => vec![Some(g.upsample2())],
        Op::Narrow { axis, start } => {
            let full = inputs[0].dim(*axis);
            let len = out.dim(*axis);
            vec![Some(g.pad_axis(*axis, *start, full - start - len))]
        }
        Op::PadAxis { axis, before } => vec![Some(g.narrow(*axis, *before, inputs[0].dim(*axis)))],
        Op::Concat { axis } => {
            let mut offset = 0;
            inputs
                .iter()
                .map(|inp| {
                    let len = inp.dim(*axis);
                    let piece = relevant.contains(&inp.id()).then(|| g.narrow(*axis, offset, len));
                    offset += len;
                    piece
                })
                .collect()
        }
    }
}
