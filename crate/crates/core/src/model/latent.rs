//! Conditional latent construction: W = f([Y·R ⌢ Z]).

use condgan_autograd::{Bound, ParamStore, Tensor};
use rand::Rng;

use super::layers::{pixel_norm, Dense, LRELU_SLOPE};
use crate::error::{invalid, Result};
use crate::imaging::normal_vec;
use crate::rng::{stream, tag};

/// Frozen `c × e` matrix of class embeddings drawn from N(0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassEmbedding {
    pub classes: usize,
    pub dim: usize,
    pub seed: u64,
    /// Row-major `c × e`.
    pub matrix: Vec<f64>,
}

impl ClassEmbedding {
    /// Draws R, redrawing until all rows are pairwise distinct.
    pub fn sample(classes: usize, dim: usize, seed: u64) -> Self {
        assert!(dim > 0 || classes <= 1, "{classes} classes need a non-empty embedding");
        let mut attempt = 0u64;
        loop {
            let matrix = normal_vec(classes * dim, &mut stream(seed, &[tag::EMBEDDING, attempt]));
            let e = Self { classes, dim, seed, matrix };
            if e.rows_distinct() {
                return e;
            }
            attempt += 1;
        }
    }

    /// Wraps a stored matrix, rejecting duplicate rows.
    pub fn from_matrix(classes: usize, dim: usize, seed: u64, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != classes * dim {
            return Err(invalid(format!("class embedding has {} values, expected {classes}×{dim}", matrix.len())));
        }
        let e = Self { classes, dim, seed, matrix };
        if !e.rows_distinct() {
            return Err(invalid("class embedding rows are not distinct"));
        }
        Ok(e)
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.matrix[k * self.dim..(k + 1) * self.dim]
    }

    fn rows_distinct(&self) -> bool {
        if self.dim == 0 {
            return self.classes <= 1;
        }
        (0..self.classes).all(|a| (a + 1..self.classes).all(|b| self.row(a) != self.row(b)))
    }

    pub fn tensor(&self) -> Tensor {
        Tensor::new(&[self.classes, self.dim], self.matrix.clone())
    }
}

/// f in W = f(input): maps `[n, e + d]` to `[n, d]`.
pub trait MappingNetwork {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn map(&self, input: &Tensor) -> Tensor;
}

/// Z, the one-hot Y, and the mapped W for one batch.
#[derive(Debug, Clone)]
pub struct LatentBatch {
    /// `[n, d]`
    pub z: Tensor,
    /// `[n, c]`
    pub y: Tensor,
    /// `[n, d]`
    pub w: Tensor,
}

impl LatentBatch {
    pub fn len(&self) -> usize {
        self.z.dim(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Class index per row (0 for every row when unconditional).
    pub fn classes(&self) -> Vec<usize> {
        let c = self.y.dim(1);
        if c == 0 {
            return vec![0; self.len()];
        }
        self.y.data().chunks(c).map(|row| row.iter().position(|&v| v == 1.0).unwrap_or(0)).collect()
    }
}

/// Class index of every row of a one-hot `[n, c]` matrix.
pub fn one_hot_classes(y: &Tensor) -> Result<Vec<usize>> {
    if y.rank() != 2 {
        return Err(invalid(format!("conditions must be [n, c], got {:?}", y.shape())));
    }
    let (n, c) = (y.dim(0), y.dim(1));
    if c == 0 {
        return Ok(vec![0; n]);
    }
    y.data()
        .chunks(c)
        .enumerate()
        .map(|(i, row)| {
            let ones = row.iter().filter(|&&v| v == 1.0).count();
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            if ones != 1 || zeros != c - 1 {
                return Err(invalid(format!("condition row {i} is not one-hot: {row:?}")));
            }
            Ok(row.iter().position(|&v| v == 1.0).unwrap())
        })
        .collect()
}

/// W = f([Y·R ⌢ Z]). With no classes the mapping sees Z alone.
pub fn build_conditional_latent(
    z: &Tensor,
    y: &Tensor,
    embedding: &ClassEmbedding,
    mapping: &dyn MappingNetwork,
) -> Result<LatentBatch> {
    if z.rank() != 2 {
        return Err(invalid(format!("Z must be [n, d], got {:?}", z.shape())));
    }
    let (n, d) = (z.dim(0), z.dim(1));
    one_hot_classes(y)?;
    if y.dim(0) != n {
        return Err(invalid(format!("Z has {n} rows but Y has {}", y.dim(0))));
    }
    if y.dim(1) != embedding.classes {
        return Err(invalid(format!("Y has {} columns, embedding has {} classes", y.dim(1), embedding.classes)));
    }
    let e = if embedding.classes == 0 { 0 } else { embedding.dim };
    if mapping.input_dim() != e + d {
        return Err(invalid(format!("mapping expects {} inputs, got e + d = {}", mapping.input_dim(), e + d)));
    }
    if mapping.output_dim() != d {
        return Err(invalid(format!("mapping outputs {} values, latent width is {d}", mapping.output_dim())));
    }
    let input = if e == 0 { z.clone() } else { Tensor::concat(&[y.matmul(&embedding.tensor()), z.clone()], 1) };
    let w = mapping.map(&input);
    Ok(LatentBatch { z: z.clone(), y: y.clone(), w })
}

/// Stack of dense + leaky-ReLU layers of width d. The Z part of the input is
/// pixel-normalized first when enabled.
#[derive(Debug, Clone)]
pub struct MappingLayers {
    pub layers: Vec<Dense>,
    pub embed_dim: usize,
    pub latent_dim: usize,
    pub pixel_norm: bool,
}

impl MappingLayers {
    pub fn new(
        store: &mut ParamStore,
        embed_dim: usize,
        latent_dim: usize,
        depth: usize,
        pixel_norm: bool,
        equalized: bool,
        rng: &mut impl Rng,
    ) -> Self {
        let layers = (0..depth)
            .map(|i| {
                let fan_in = if i == 0 { embed_dim + latent_dim } else { latent_dim };
                Dense::new(store, &format!("mapping.{i}"), fan_in, latent_dim, 2f64.sqrt(), equalized, vec![0.0; latent_dim], rng)
            })
            .collect();
        Self { layers, embed_dim, latent_dim, pixel_norm }
    }

    pub fn bind<'a>(&'a self, params: &'a Bound) -> BoundMapping<'a> {
        BoundMapping { net: self, params }
    }
}

/// [`MappingLayers`] with concrete parameter values.
pub struct BoundMapping<'a> {
    net: &'a MappingLayers,
    params: &'a Bound,
}

impl MappingNetwork for BoundMapping<'_> {
    fn input_dim(&self) -> usize {
        self.net.embed_dim + self.net.latent_dim
    }

    fn output_dim(&self) -> usize {
        self.net.latent_dim
    }

    fn map(&self, input: &Tensor) -> Tensor {
        let e = self.net.embed_dim;
        let mut x = if self.net.pixel_norm {
            let z = pixel_norm(&input.narrow(1, e, self.net.latent_dim));
            if e == 0 {
                z
            } else {
                Tensor::concat(&[input.narrow(1, 0, e), z], 1)
            }
        } else {
            input.clone()
        };
        for layer in &self.net.layers {
            x = layer.forward(self.params, &x).leaky_relu(LRELU_SLOPE);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::one_hot;
    use crate::imaging::normal_tensor;

    /// Passes through the first `d` inputs.
    struct Prefix {
        input: usize,
        d: usize,
    }

    impl MappingNetwork for Prefix {
        fn input_dim(&self) -> usize {
            self.input
        }
        fn output_dim(&self) -> usize {
            self.d
        }
        fn map(&self, input: &Tensor) -> Tensor {
            input.narrow(1, 0, self.d)
        }
    }

    #[test]
    fn prefix_stub_selects_class_row() {
        let r = ClassEmbedding::from_matrix(2, 1, 0, vec![0.25, -0.75]).unwrap();
        let z = Tensor::new(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let y = one_hot(&[0, 1], 2);
        let out = build_conditional_latent(&z, &y, &r, &Prefix { input: 4, d: 3 }).unwrap();
        assert_eq!(out.w.to_vec(), vec![0.25, 1.0, 2.0, -0.75, 4.0, 5.0]);
        assert_eq!(out.classes(), vec![0, 1]);
    }

    #[test]
    fn full_width_512_shapes() {
        let mut store = ParamStore::new();
        let mut rng = stream(1, &[0]);
        let net = MappingLayers::new(&mut store, 10, 512, 1, true, true, &mut rng);
        let params = store.bind(false);
        let m = net.bind(&params);
        assert_eq!(m.input_dim(), 522);
        let r = ClassEmbedding::sample(10, 10, 3);
        let z = normal_tensor(&[4, 512], &mut rng);
        let out = build_conditional_latent(&z, &one_hot(&[0, 3, 9, 9], 10), &r, &m).unwrap();
        assert_eq!(out.w.shape(), &[4, 512]);
    }

    #[test]
    fn classes_change_w() {
        let mut store = ParamStore::new();
        let mut rng = stream(2, &[0]);
        let net = MappingLayers::new(&mut store, 2, 8, 4, true, true, &mut rng);
        let params = store.bind(false);
        let r = ClassEmbedding::sample(2, 2, 5);
        let zrow = normal_vec(8, &mut rng);
        let z = Tensor::new(&[2, 8], [zrow.clone(), zrow].concat());
        let out = build_conditional_latent(&z, &one_hot(&[0, 1], 2), &r, &net.bind(&params)).unwrap();
        let w = out.w.data();
        let dist: f64 = (0..8).map(|i| (w[i] - w[8 + i]).powi(2)).sum::<f64>().sqrt();
        assert!(dist > 0.0);
    }

    #[test]
    fn width_is_d_for_many_shapes() {
        for (n, c, e, d) in [(1, 1, 1, 1), (3, 2, 5, 4), (2, 7, 1, 3), (5, 0, 0, 6)] {
            let mut store = ParamStore::new();
            let mut rng = stream(9, &[n as u64, c as u64]);
            let net = MappingLayers::new(&mut store, if c == 0 { 0 } else { e }, d, 2, true, true, &mut rng);
            let params = store.bind(false);
            let r = ClassEmbedding::sample(c, e, 1);
            let classes: Vec<usize> = (0..n).map(|i| if c == 0 { 0 } else { i % c }).collect();
            let z = normal_tensor(&[n, d], &mut rng);
            let out = build_conditional_latent(&z, &one_hot(&classes, c), &r, &net.bind(&params)).unwrap();
            assert_eq!(out.w.shape(), &[n, d]);
        }
    }

    #[test]
    fn rejects_bad_conditions() {
        let r = ClassEmbedding::sample(2, 1, 0);
        let stub = Prefix { input: 3, d: 2 };
        let z = Tensor::zeros(&[1, 2]);
        assert!(build_conditional_latent(&z, &Tensor::new(&[1, 2], vec![1.0, 1.0]), &r, &stub).is_err());
        assert!(build_conditional_latent(&z, &Tensor::new(&[1, 2], vec![0.5, 0.5]), &r, &stub).is_err());
        assert!(build_conditional_latent(&z, &one_hot(&[0], 3), &r, &stub).is_err());
        assert!(build_conditional_latent(&Tensor::zeros(&[1, 3]), &one_hot(&[0], 2), &r, &stub).is_err());
        assert!(build_conditional_latent(&z, &one_hot(&[0, 1], 2), &r, &stub).is_err());
    }

    #[test]
    fn unconditional_is_f_of_z() {
        let mut store = ParamStore::new();
        let mut rng = stream(4, &[0]);
        let net = MappingLayers::new(&mut store, 0, 4, 2, true, true, &mut rng);
        let params = store.bind(false);
        let m = net.bind(&params);
        let z = normal_tensor(&[3, 4], &mut rng);
        let out = build_conditional_latent(&z, &Tensor::zeros(&[3, 0]), &ClassEmbedding::sample(0, 0, 0), &m).unwrap();
        assert_eq!(out.w.to_vec(), m.map(&z).to_vec());
    }

    #[test]
    fn embedding_rows_distinct_and_seeded() {
        let a = ClassEmbedding::sample(10, 3, 42);
        assert_eq!(a, ClassEmbedding::sample(10, 3, 42));
        assert_ne!(a.matrix, ClassEmbedding::sample(10, 3, 43).matrix);
        assert!(ClassEmbedding::from_matrix(2, 2, 0, vec![1.0, 2.0, 1.0, 2.0]).is_err());
    }
}
