//! Fully-convolutional regressor: stages of 3x3 convolutions with ReLU, each
//! followed by 2x2 average pooling, then optional 3x3 convolutions at grid
//! resolution and a 1x1 convolution with sigmoid that produces the
//! `S x S x C` grid tensor.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridcodec::GridTensor;

const KERNEL: usize = 3;

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Side length of the square input image in pixels.
    pub input_size: usize,
    /// Side length `S` of the output grid.
    pub grid_size: usize,
    /// Feature channels of each convolution stage; every stage ends with a pooling step.
    pub stage_channels: Vec<usize>,
    #[serde(default = "one")]
    pub convs_per_stage: usize,
    /// Extra 3x3 convolutions at grid resolution before the head.
    #[serde(default)]
    pub grid_channels: Vec<usize>,
    /// `C`, 8 or 7 for revolution objects.
    pub output_channels: usize,
    pub seed: u64,
}

impl ModelConfig {
    /// The miniature default for a 32x32 input and an 8x8 grid.
    pub fn miniature(output_channels: usize, seed: u64) -> Self {
        Self {
            input_size: 32,
            grid_size: 8,
            stage_channels: vec![16, 32],
            convs_per_stage: 1,
            grid_channels: Vec::new(),
            output_channels,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !self.input_size.is_power_of_two() || !self.grid_size.is_power_of_two() {
            return bad(format!(
                "input size {} and grid size {} must be powers of two",
                self.input_size, self.grid_size
            ));
        }
        let pools = self.stage_channels.len() as u32;
        if self.grid_size.checked_shl(pools) != Some(self.input_size) {
            return bad(format!(
                "input size {} / grid size {} must equal 2^{} (one pooling step per stage)",
                self.input_size, self.grid_size, pools
            ));
        }
        let zero = self.stage_channels.iter().chain(&self.grid_channels).any(|&c| c == 0);
        if zero || self.convs_per_stage == 0 {
            return bad("stage channels and convolutions per stage must be positive".into());
        }
        if !(self.output_channels == 7 || self.output_channels == 8) {
            return bad(format!("output channels must be 7 or 8, got {}", self.output_channels));
        }
        Ok(())
    }

    /// Convolution layers in declaration order, the head last.
    pub fn layers(&self) -> Vec<LayerShape> {
        let mut layers = Vec::new();
        let mut cin = 1;
        for &c in &self.stage_channels {
            for _ in 0..self.convs_per_stage {
                layers.push(LayerShape { cin, cout: c, kernel: KERNEL });
                cin = c;
            }
        }
        for &c in &self.grid_channels {
            layers.push(LayerShape { cin, cout: c, kernel: KERNEL });
            cin = c;
        }
        layers.push(LayerShape {
            cin,
            cout: self.output_channels,
            kernel: 1,
        });
        layers
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(LayerShape::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub cin: usize,
    pub cout: usize,
    pub kernel: usize,
}

impl LayerShape {
    pub fn weight_len(&self) -> usize {
        self.cout * self.cin * self.kernel * self.kernel
    }

    pub fn len(&self) -> usize {
        self.weight_len() + self.cout
    }
}

/// All kernels and biases in one flat vector: per layer the weights
/// (`[cout][cin][k][k]`) followed by the biases.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub values: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(config: &ModelConfig) -> Self {
        Self {
            values: vec![0.0; config.param_count()],
        }
    }

    /// He-uniform kernels, zero biases, drawn from the config seed.
    pub fn init(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut values = Vec::with_capacity(config.param_count());
        for layer in config.layers() {
            let fan_in = (layer.cin * layer.kernel * layer.kernel) as f64;
            let bound = (6.0 / fan_in).sqrt();
            values.extend((0..layer.weight_len()).map(|_| rng.gen_range(-bound..bound)));
            values.extend(std::iter::repeat(0.0).take(layer.cout));
        }
        Ok(Self { values })
    }

    pub fn check(&self, config: &ModelConfig) -> Result<()> {
        if self.values.len() != config.param_count() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} parameters", config.param_count()),
                found: format!("{} parameters", self.values.len()),
            });
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite model parameter".into()));
        }
        Ok(())
    }
}

/// Intermediate activations of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `values[0]` is the input; then one entry per convolution (after ReLU)
    /// and per pooling step. The last entry is the sigmoid output in
    /// channel-major layout.
    pub values: Vec<Vec<f64>>,
}

impl Trace {
    /// Signs of every ReLU-activated unit, for detecting kinks.
    pub fn activation_pattern(&self) -> Vec<bool> {
        let n = self.values.len();
        self.values[1..n - 1]
            .iter()
            .flat_map(|v| v.iter().map(|&x| x > 0.0))
            .collect()
    }
}

enum Step {
    Conv { layer: usize, offset: usize },
    Pool,
}

fn steps(config: &ModelConfig) -> Vec<Step> {
    let layers = config.layers();
    let mut steps = Vec::new();
    let mut offset = 0;
    let mut l = 0;
    for _ in &config.stage_channels {
        for _ in 0..config.convs_per_stage {
            steps.push(Step::Conv { layer: l, offset });
            offset += layers[l].len();
            l += 1;
        }
        steps.push(Step::Pool);
    }
    for _ in &config.grid_channels {
        steps.push(Step::Conv { layer: l, offset });
        offset += layers[l].len();
        l += 1;
    }
    steps.push(Step::Conv { layer: l, offset });
    steps
}

/// Unrolls every `k x k` neighborhood of a `[cin][n][n]` input into a
/// `[cin * k * k][n * n]` matrix, zero outside the image.
fn im2col(input: &[f64], n: usize, shape: LayerShape) -> Vec<f64> {
    let (k, pad) = (shape.kernel, shape.kernel / 2);
    let area = n * n;
    let mut cols = vec![0.0; shape.cin * k * k * area];
    for i in 0..shape.cin {
        let in_i = &input[i * area..(i + 1) * area];
        for ky in 0..k {
            let dy = ky as isize - pad as isize;
            let (y0, y1) = valid_range(n, dy);
            for kx in 0..k {
                let dx = kx as isize - pad as isize;
                let (x0, x1) = valid_range(n, dx);
                let row = &mut cols[((i * k + ky) * k + kx) * area..][..area];
                for y in y0..y1 {
                    let src = ((y as isize + dy) as usize * n) as isize + x0 as isize + dx;
                    row[y * n + x0..y * n + x1]
                        .copy_from_slice(&in_i[src as usize..src as usize + (x1 - x0)]);
                }
            }
        }
    }
    cols
}

/// Inverse scatter of [`im2col`]: accumulates column gradients into `d_input`.
fn col2im(cols: &[f64], n: usize, shape: LayerShape, d_input: &mut [f64]) {
    let (k, pad) = (shape.kernel, shape.kernel / 2);
    let area = n * n;
    for i in 0..shape.cin {
        let d_i = &mut d_input[i * area..(i + 1) * area];
        for ky in 0..k {
            let dy = ky as isize - pad as isize;
            let (y0, y1) = valid_range(n, dy);
            for kx in 0..k {
                let dx = kx as isize - pad as isize;
                let (x0, x1) = valid_range(n, dx);
                let row = &cols[((i * k + ky) * k + kx) * area..][..area];
                for y in y0..y1 {
                    let dst = ((y as isize + dy) as usize * n) as isize + x0 as isize + dx;
                    let dst = &mut d_i[dst as usize..dst as usize + (x1 - x0)];
                    for (d, g) in dst.iter_mut().zip(&row[y * n + x0..y * n + x1]) {
                        *d += g;
                    }
                }
            }
        }
    }
}

/// `c = a * b + beta * c` for row-major `a: m x k`, `b: k x n`; `a_t`
/// reads `a` as the transpose of a stored `k x m` matrix, `b_t` likewise.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], a_t: bool, b: &[f64], b_t: bool, beta: f64, c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the slices cover the m x k, k x n and m x n extents checked above.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// Same-padded convolution of a `[cin][n][n]` input into `[cout][n][n]`.
fn conv_forward(input: &[f64], n: usize, shape: LayerShape, params: &[f64], out: &mut [f64]) {
    let area = n * n;
    let (weights, bias) = params.split_at(shape.weight_len());
    let depth = shape.cin * shape.kernel * shape.kernel;
    for (o, row) in out.chunks_exact_mut(area).enumerate() {
        row.fill(bias[o]);
    }
    if shape.kernel == 1 {
        gemm(shape.cout, depth, area, weights, false, input, false, 1.0, out);
    } else {
        let cols = im2col(input, n, shape);
        gemm(shape.cout, depth, area, weights, false, &cols, false, 1.0, out);
    }
}

/// Accumulates parameter gradients and, if requested, the input gradient.
fn conv_backward(
    input: &[f64],
    n: usize,
    shape: LayerShape,
    params: &[f64],
    d_out: &[f64],
    d_params: &mut [f64],
    d_input: Option<&mut [f64]>,
) {
    let area = n * n;
    let depth = shape.cin * shape.kernel * shape.kernel;
    let (weights, _) = params.split_at(shape.weight_len());
    let (d_weights, d_bias) = d_params.split_at_mut(shape.weight_len());
    for (o, g) in d_out.chunks_exact(area).enumerate() {
        d_bias[o] += g.iter().sum::<f64>();
    }
    let cols;
    let cols_ref = if shape.kernel == 1 {
        input
    } else {
        cols = im2col(input, n, shape);
        &cols
    };
    gemm(shape.cout, area, depth, d_out, false, cols_ref, true, 1.0, d_weights);
    if let Some(d_in) = d_input {
        if shape.kernel == 1 {
            gemm(depth, shape.cout, area, weights, true, d_out, false, 1.0, d_in);
        } else {
            let mut d_cols = vec![0.0; depth * area];
            gemm(depth, shape.cout, area, weights, true, d_out, false, 0.0, &mut d_cols);
            col2im(&d_cols, n, shape, d_in);
        }
    }
}

/// Output positions `x` with `x + d` inside `[0, n)`.
fn valid_range(n: usize, d: isize) -> (usize, usize) {
    let lo = (-d).max(0) as usize;
    let hi = (n as isize - d).min(n as isize) as usize;
    (lo, hi)
}

fn pool_forward(input: &[f64], channels: usize, n: usize) -> Vec<f64> {
    let m = n / 2;
    let mut out = vec![0.0; channels * m * m];
    for c in 0..channels {
        for y in 0..m {
            for x in 0..m {
                let base = c * n * n + 2 * y * n + 2 * x;
                out[c * m * m + y * m + x] =
                    0.25 * (input[base] + input[base + 1] + input[base + n] + input[base + n + 1]);
            }
        }
    }
    out
}

fn pool_backward(d_out: &[f64], channels: usize, n: usize) -> Vec<f64> {
    let m = n / 2;
    let mut d_in = vec![0.0; channels * n * n];
    for c in 0..channels {
        for y in 0..n {
            for x in 0..n {
                d_in[c * n * n + y * n + x] = 0.25 * d_out[c * m * m + (y / 2) * m + x / 2];
            }
        }
    }
    d_in
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn check_input(input: &[f64], config: &ModelConfig) -> Result<()> {
    let expected = config.input_size * config.input_size;
    if input.len() != expected {
        return Err(Error::ShapeMismatch {
            expected: format!("{0}x{0} input", config.input_size),
            found: format!("{} values", input.len()),
        });
    }
    Ok(())
}

/// Runs the network on a normalized depth image (row-major, `input_size^2` values).
pub fn forward_trace(input: &[f64], params: &ModelParams, config: &ModelConfig) -> Result<Trace> {
    config.validate()?;
    params.check(config)?;
    check_input(input, config)?;
    let layers = config.layers();
    let mut n = config.input_size;
    let mut channels = 1;
    let mut values = vec![input.to_vec()];
    for step in steps(config) {
        let prev = values.last().expect("trace starts with the input");
        let next = match step {
            Step::Conv { layer, offset } => {
                let shape = layers[layer];
                let mut out = vec![0.0; shape.cout * n * n];
                conv_forward(prev, n, shape, &params.values[offset..offset + shape.len()], &mut out);
                let head = layer + 1 == layers.len();
                for v in out.iter_mut() {
                    *v = if head { sigmoid(*v) } else { v.max(0.0) };
                }
                channels = shape.cout;
                out
            }
            Step::Pool => {
                let out = pool_forward(prev, channels, n);
                n /= 2;
                out
            }
        };
        values.push(next);
    }
    Ok(Trace { values })
}

fn to_grid(channel_major: &[f64], config: &ModelConfig) -> GridTensor {
    let (s, c) = (config.grid_size, config.output_channels);
    let mut grid = GridTensor::zeros(s, c);
    let out = grid.as_mut_slice();
    for ch in 0..c {
        for k in 0..s * s {
            out[k * c + ch] = channel_major[ch * s * s + k];
        }
    }
    grid
}

fn from_grid(grid: &GridTensor, config: &ModelConfig) -> Vec<f64> {
    let (s, c) = (config.grid_size, config.output_channels);
    let data = grid.as_slice();
    let mut out = vec![0.0; s * s * c];
    for ch in 0..c {
        for k in 0..s * s {
            out[ch * s * s + k] = data[k * c + ch];
        }
    }
    out
}

impl Trace {
    pub fn output(&self, config: &ModelConfig) -> GridTensor {
        to_grid(self.values.last().expect("non-empty trace"), config)
    }
}

pub fn forward(input: &[f64], params: &ModelParams, config: &ModelConfig) -> Result<GridTensor> {
    Ok(forward_trace(input, params, config)?.output(config))
}

/// Backpropagates `d_output` (gradient of a scalar with respect to the
/// sigmoid outputs) and returns the parameter gradient.
pub fn backward(
    trace: &Trace,
    d_output: &GridTensor,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<ModelParams> {
    let expected = GridTensor::zeros(config.grid_size, config.output_channels);
    expected.ensure_same_shape(d_output)?;
    let layers = config.layers();
    let steps = steps(config);
    let mut grads = ModelParams::zeros(config);

    // size and channel count of every trace entry
    let mut dims = vec![(config.input_size, 1)];
    for step in &steps {
        let (n, c) = *dims.last().expect("non-empty");
        dims.push(match step {
            Step::Conv { layer, .. } => (n, layers[*layer].cout),
            Step::Pool => (n / 2, c),
        });
    }

    let y = trace.values.last().expect("non-empty trace");
    let mut grad: Vec<f64> = from_grid(d_output, config)
        .iter()
        .zip(y)
        .map(|(g, y)| g * y * (1.0 - y))
        .collect();
    for (s, step) in steps.iter().enumerate().rev() {
        let (n, c_in) = dims[s];
        match *step {
            Step::Conv { layer, offset } => {
                let shape = layers[layer];
                if layer + 1 != layers.len() {
                    for (g, &out) in grad.iter_mut().zip(&trace.values[s + 1]) {
                        if out <= 0.0 {
                            *g = 0.0;
                        }
                    }
                }
                let range = offset..offset + shape.len();
                let mut d_input = (s > 0).then(|| vec![0.0; c_in * n * n]);
                conv_backward(
                    &trace.values[s],
                    n,
                    shape,
                    &params.values[range.clone()],
                    &grad,
                    &mut grads.values[range],
                    d_input.as_deref_mut(),
                );
                match d_input {
                    Some(d) => grad = d,
                    None => break,
                }
            }
            Step::Pool => grad = pool_backward(&grad, c_in, n),
        }
    }
    Ok(grads)
}
