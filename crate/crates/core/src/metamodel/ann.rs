//! Single-hidden-layer feed-forward net predicting one scalar output.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Bounded sigmoid-type hidden activation. The output layer is linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Logistic,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Logistic => 1.0 / (1.0 + (-x).exp()),
        }
    }

    /// Derivative expressed through the activation value itself.
    #[inline]
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Logistic => a * (1.0 - a),
        }
    }
}

/// One sub-ANN: topology `n_in → hidden → 1`, predicting a single state
/// variable from its selected inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubAnn {
    /// Output variable id (`level:<tank>` or `energy`).
    pub target: String,
    /// Selected input variable ids, in evaluation order.
    pub input_ids: Vec<String>,
    pub hidden: usize,
    pub activation: Activation,
    /// hidden × n_in.
    pub w1: Matrix,
    pub b1: Vec<f64>,
    /// 1 × hidden output weights.
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl SubAnn {
    /// Fresh net with weights uniform in [−0.5, 0.5].
    pub fn random<R: Rng + ?Sized>(
        target: &str,
        input_ids: Vec<String>,
        hidden: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let n_in = input_ids.len();
        let draw = |rng: &mut R| rng.random::<f64>() - 0.5;
        let w1 = Matrix::from_fn(hidden, n_in, |_, _| draw(rng));
        let b1 = (0..hidden).map(|_| draw(rng)).collect();
        let w2 = (0..hidden).map(|_| draw(rng)).collect();
        let b2 = draw(rng);
        Self {
            target: target.to_string(),
            input_ids,
            hidden,
            activation,
            w1,
            b1,
            w2,
            b2,
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.input_ids.len()
    }

    /// Validates weight shapes against the declared topology.
    pub fn check_dimensions(&self) -> Result<()> {
        self.w1.check_shape()?;
        if self.input_ids.is_empty() {
            return Err(Error::Dimension(format!("sub-ANN '{}' has no inputs", self.target)));
        }
        let mut unique = self.input_ids.clone();
        unique.sort();
        unique.dedup();
        if unique.len() != self.input_ids.len() {
            return Err(Error::Dimension(format!(
                "sub-ANN '{}' lists a duplicate input",
                self.target
            )));
        }
        if self.w1.rows() != self.hidden
            || self.w1.cols() != self.n_inputs()
            || self.b1.len() != self.hidden
            || self.w2.len() != self.hidden
        {
            return Err(Error::Dimension(format!(
                "sub-ANN '{}' weight shapes do not match topology {} -> {} -> 1",
                self.target,
                self.n_inputs(),
                self.hidden
            )));
        }
        Ok(())
    }

    fn hidden_outputs(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for h in 0..self.hidden {
            let row = self.w1.row(h);
            let z: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + self.b1[h];
            out.push(self.activation.apply(z));
        }
    }

    /// Forward pass on a single input vector (length `n_inputs`).
    pub fn forward(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n_inputs());
        let mut hidden = Vec::with_capacity(self.hidden);
        self.hidden_outputs(x, &mut hidden);
        self.w2.iter().zip(&hidden).map(|(w, a)| w * a).sum::<f64>() + self.b2
    }

    /// Root-mean-square error over a row set.
    pub fn rmse(&self, inputs: &Matrix, targets: &[f64]) -> f64 {
        let n = targets.len();
        if n == 0 {
            return 0.0;
        }
        let sum: f64 = (0..n)
            .map(|r| {
                let err = self.forward(inputs.row(r)) - targets[r];
                err * err
            })
            .sum();
        (sum / n as f64).sqrt()
    }
}

/// Gradients of the mean-squared-error loss with respect to every weight,
/// in the same shapes as the net.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

/// Mean squared error over the given rows and its analytic gradient.
///
/// Loss: L = (1/n) Σ_r (ŷ_r − y_r)². Backpropagation through the linear
/// output and the hidden activation.
pub fn mse_loss_and_gradients(net: &SubAnn, inputs: &Matrix, targets: &[f64]) -> (f64, Gradients) {
    let n = targets.len();
    assert!(n > 0, "loss over an empty batch");
    assert_eq!(inputs.rows(), n);
    let inv_n = 1.0 / n as f64;

    let mut loss = 0.0;
    let mut g_w1 = Matrix::zeros(net.hidden, net.n_inputs());
    let mut g_b1 = vec![0.0; net.hidden];
    let mut g_w2 = vec![0.0; net.hidden];
    let mut g_b2 = 0.0;

    let mut hidden = Vec::with_capacity(net.hidden);
    for r in 0..n {
        let x = inputs.row(r);
        net.hidden_outputs(x, &mut hidden);
        let y_hat: f64 = net.w2.iter().zip(&hidden).map(|(w, a)| w * a).sum::<f64>() + net.b2;
        let err = y_hat - targets[r];
        loss += err * err * inv_n;

        let d_out = 2.0 * err * inv_n;
        g_b2 += d_out;
        for h in 0..net.hidden {
            g_w2[h] += d_out * hidden[h];
            let d_hidden = d_out * net.w2[h] * net.activation.derivative_from_output(hidden[h]);
            g_b1[h] += d_hidden;
            let row = g_w1.row_mut(h);
            for (i, xi) in x.iter().enumerate() {
                row[i] += d_hidden * xi;
            }
        }
    }

    (
        loss,
        Gradients {
            w1: g_w1,
            b1: g_b1,
            w2: g_w2,
            b2: g_b2,
        },
    )
}

/// Applies one gradient-descent update in place.
pub fn apply_gradients(net: &mut SubAnn, grads: &Gradients, learning_rate: f64) {
    for (w, g) in net.w1.data_mut().iter_mut().zip(grads.w1.data()) {
        *w -= learning_rate * g;
    }
    for (b, g) in net.b1.iter_mut().zip(&grads.b1) {
        *b -= learning_rate * g;
    }
    for (w, g) in net.w2.iter_mut().zip(&grads.w2) {
        *w -= learning_rate * g;
    }
    net.b2 -= learning_rate * grads.b2;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_net(n_in: usize, hidden: usize, seed: u64) -> SubAnn {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids = (0..n_in).map(|i| format!("x{i}")).collect();
        SubAnn::random("y", ids, hidden, Activation::Tanh, &mut rng)
    }

    #[test]
    fn zero_weights_output_the_bias() {
        let mut net = random_net(3, 4, 1);
        net.w1 = Matrix::zeros(4, 3);
        net.b1 = vec![0.0; 4];
        net.w2 = vec![0.0; 4];
        net.b2 = 0.37;
        assert_eq!(net.forward(&[0.1, 0.9, 0.4]), 0.37);
        assert_eq!(net.forward(&[0.8, 0.0, 0.2]), 0.37);
    }

    #[test]
    fn forward_is_deterministic() {
        let net = random_net(4, 8, 2);
        let x = [0.3, 0.7, 0.1, 0.5];
        assert_eq!(net.forward(&x), net.forward(&x));
    }

    /// Central-difference check of the analytic gradients, step 1e-5.
    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..20 {
            let n_in = 1 + (case % 4);
            let hidden = 2 + (case % 3);
            let mut net = random_net(n_in, hidden, 100 + case as u64);
            let rows = 6;
            let inputs = Matrix::from_fn(rows, n_in, |_, _| rng.random::<f64>());
            let targets: Vec<f64> = (0..rows).map(|_| rng.random::<f64>()).collect();

            let (_, grads) = mse_loss_and_gradients(&net, &inputs, &targets);
            let h = 1e-5;
            let check = |net: &mut SubAnn, idx: usize, analytic: f64| {
                let write = |net: &mut SubAnn, v: f64| {
                    let n_w1 = net.w1.data().len();
                    let n_b1 = net.b1.len();
                    let n_w2 = net.w2.len();
                    if idx < n_w1 {
                        net.w1.data_mut()[idx] = v;
                    } else if idx < n_w1 + n_b1 {
                        net.b1[idx - n_w1] = v;
                    } else if idx < n_w1 + n_b1 + n_w2 {
                        net.w2[idx - n_w1 - n_b1] = v;
                    } else {
                        net.b2 = v;
                    }
                };
                let read = |net: &SubAnn| {
                    let n_w1 = net.w1.data().len();
                    let n_b1 = net.b1.len();
                    let n_w2 = net.w2.len();
                    if idx < n_w1 {
                        net.w1.data()[idx]
                    } else if idx < n_w1 + n_b1 {
                        net.b1[idx - n_w1]
                    } else if idx < n_w1 + n_b1 + n_w2 {
                        net.w2[idx - n_w1 - n_b1]
                    } else {
                        net.b2
                    }
                };
                let original = read(net);
                write(net, original + h);
                let (plus, _) = mse_loss_and_gradients(net, &inputs, &targets);
                write(net, original - h);
                let (minus, _) = mse_loss_and_gradients(net, &inputs, &targets);
                write(net, original);
                let numeric = (plus - minus) / (2.0 * h);
                let scale = analytic.abs().max(numeric.abs()).max(1.0);
                assert!(
                    (analytic - numeric).abs() / scale <= 1e-6,
                    "gradient mismatch at parameter {idx}: analytic {analytic}, numeric {numeric}"
                );
            };

            let n_params = grads.w1.data().len() + grads.b1.len() + grads.w2.len() + 1;
            let flat: Vec<f64> = grads
                .w1
                .data()
                .iter()
                .chain(&grads.b1)
                .chain(&grads.w2)
                .chain(std::iter::once(&grads.b2))
                .copied()
                .collect();
            for idx in 0..n_params {
                check(&mut net, idx, flat[idx]);
            }
        }
    }

    #[test]
    fn logistic_activation_gradients_also_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut net = random_net(3, 4, 33);
        net.activation = Activation::Logistic;
        let inputs = Matrix::from_fn(5, 3, |_, _| rng.random::<f64>());
        let targets: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
        let (_, grads) = mse_loss_and_gradients(&net, &inputs, &targets);
        let h = 1e-5;
        let original = net.b1[0];
        net.b1[0] = original + h;
        let (plus, _) = mse_loss_and_gradients(&net, &inputs, &targets);
        net.b1[0] = original - h;
        let (minus, _) = mse_loss_and_gradients(&net, &inputs, &targets);
        net.b1[0] = original;
        let numeric = (plus - minus) / (2.0 * h);
        assert!((grads.b1[0] - numeric).abs() / numeric.abs().max(1e-10) < 1e-6);
    }
}
