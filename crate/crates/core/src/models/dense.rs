use super::input::{labels_of, tabular_batch};
use super::network::Network;
use crate::error::{Error, Result};
use crate::features::SliceTensor;
use crate::numcore::{
    affine_backward, affine_forward, dropout, init, softmax_cross_entropy, Activation, DropoutMask, Matrix, Param,
    RngStream,
};

/// Relu hidden layers, each followed by dropout, then a two-logit head.
#[derive(Clone, Debug)]
pub struct DenseStack {
    pub hidden: Vec<(Param, Param)>,
    pub dropout: Vec<f64>,
    pub head_w: Param,
    pub head_b: Param,
}

pub struct DenseCache {
    inputs: Vec<Matrix>,
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
    masks: Vec<DropoutMask>,
    head_in: Matrix,
}

fn affine(prefix: &str, fan_in: usize, fan_out: usize, rng: &mut RngStream) -> (Param, Param) {
    (
        Param::new(format!("{prefix}.w"), init::glorot_uniform(fan_in, fan_out, fan_in, fan_out, rng)),
        Param::zeros(format!("{prefix}.b"), 1, fan_out),
    )
}

impl DenseStack {
    pub fn new(prefix: &str, input: usize, widths: &[usize], dropout: &[f64], rng: &mut RngStream) -> Self {
        assert_eq!(widths.len(), dropout.len(), "one dropout rate per hidden layer");
        let mut hidden = Vec::new();
        let mut fan_in = input;
        for (k, &w) in widths.iter().enumerate() {
            hidden.push(affine(&format!("{prefix}.hidden{k}"), fan_in, w, rng));
            fan_in = w;
        }
        let (head_w, head_b) = affine(&format!("{prefix}.head"), fan_in, 2, rng);
        Self {
            hidden,
            dropout: dropout.to_vec(),
            head_w,
            head_b,
        }
    }

    pub fn input_width(&self) -> usize {
        self.hidden.first().map_or(self.head_w.value.rows(), |(w, _)| w.value.rows())
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut a = x.clone();
        for (w, b) in &self.hidden {
            a = Activation::Relu.forward(&affine_forward(&a, w, b)?);
        }
        affine_forward(&a, &self.head_w, &self.head_b)
    }

    pub fn forward_train(&self, x: Matrix, mut rng: Option<&mut RngStream>) -> Result<(Matrix, DenseCache)> {
        let mut cache = DenseCache {
            inputs: Vec::new(),
            pre: Vec::new(),
            post: Vec::new(),
            masks: Vec::new(),
            head_in: Matrix::zeros(0, 0),
        };
        let mut a = x;
        for ((w, b), &rate) in self.hidden.iter().zip(&self.dropout) {
            let z = affine_forward(&a, w, b)?;
            let y = Activation::Relu.forward(&z);
            let (d, mask) = match rng.as_deref_mut() {
                Some(r) => dropout(&y, rate, r, true)?,
                None => (y.clone(), DropoutMask::Identity),
            };
            cache.inputs.push(a);
            cache.pre.push(z);
            cache.post.push(y);
            cache.masks.push(mask);
            a = d;
        }
        let logits = affine_forward(&a, &self.head_w, &self.head_b)?;
        cache.head_in = a;
        Ok((logits, cache))
    }

    pub fn backward(&mut self, cache: &DenseCache, dlogits: &Matrix) -> Result<Matrix> {
        let mut d = affine_backward(&cache.head_in, &mut self.head_w, &mut self.head_b, dlogits)?;
        for k in (0..self.hidden.len()).rev() {
            let dy = cache.masks[k].apply(&d);
            let dz = Activation::Relu.backward(&cache.pre[k], &cache.post[k], &dy)?;
            let (w, b) = &mut self.hidden[k];
            d = affine_backward(&cache.inputs[k], w, b, &dz)?;
        }
        Ok(d)
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut v: Vec<&Param> = self.hidden.iter().flat_map(|(w, b)| [w, b]).collect();
        v.extend([&self.head_w, &self.head_b]);
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v: Vec<&mut Param> = self.hidden.iter_mut().flat_map(|(w, b)| [w, b]).collect();
        v.extend([&mut self.head_w, &mut self.head_b]);
        v
    }
}

/// Logistic regression (no hidden layers) or MLP over the flattened table.
#[derive(Clone, Debug)]
pub struct TabularNet {
    pub stack: DenseStack,
}

impl TabularNet {
    pub fn logistic(input: usize, rng: &mut RngStream) -> Self {
        Self {
            stack: DenseStack::new("lr", input, &[], &[], rng),
        }
    }

    pub fn mlp(input: usize, widths: &[usize], dropout: &[f64], rng: &mut RngStream) -> Self {
        Self {
            stack: DenseStack::new("mlp", input, widths, dropout, rng),
        }
    }
}

impl Network for TabularNet {
    fn check_input(&self, x: &SliceTensor) -> Result<()> {
        if x.tabular_width() != self.stack.input_width() {
            return Err(Error::Dimension {
                op: "tabular input",
                left: (x.n, x.tabular_width()),
                right: (self.stack.input_width(), 2),
            });
        }
        Ok(())
    }

    fn logits(&self, x: &SliceTensor, rows: &[usize]) -> Result<Matrix> {
        self.stack.forward(&tabular_batch(x, rows))
    }

    fn loss_and_grad(&mut self, x: &SliceTensor, rows: &[usize], rng: Option<&mut RngStream>) -> Result<f64> {
        let (logits, cache) = self.stack.forward_train(tabular_batch(x, rows), rng)?;
        let (loss, dl) = softmax_cross_entropy(&logits, &labels_of(x, rows))?;
        self.stack.backward(&cache, &dl)?;
        Ok(loss)
    }

    fn params(&self) -> Vec<&Param> {
        self.stack.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.stack.params_mut()
    }
}
