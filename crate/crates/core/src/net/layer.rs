use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channel-major tensor shape `(channels, height, width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape3 {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape3 {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
        }
    }

    pub const fn flat(len: usize) -> Self {
        Self::new(len, 1, 1)
    }

    pub const fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Valid-padding 2-D cross-correlation geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvGeometry {
    pub input: Shape3,
    pub out_channels: usize,
    pub kernel: [usize; 2],
    pub stride: usize,
}

impl ConvGeometry {
    pub fn validate(&self) -> Result<()> {
        let [kh, kw] = self.kernel;
        if self.stride == 0 || kh == 0 || kw == 0 || self.out_channels == 0 || self.input.is_empty() {
            return Err(Error::contract(format!("degenerate conv geometry {self:?}")));
        }
        if kh > self.input.height || kw > self.input.width {
            return Err(Error::contract(format!(
                "kernel {kh}x{kw} larger than input {}x{}",
                self.input.height, self.input.width
            )));
        }
        Ok(())
    }

    /// `floor((in - k) / stride) + 1` per spatial axis.
    pub fn output(&self) -> Shape3 {
        let [kh, kw] = self.kernel;
        Shape3::new(
            self.out_channels,
            (self.input.height - kh) / self.stride + 1,
            (self.input.width - kw) / self.stride + 1,
        )
    }

    pub fn kernel_len(&self) -> usize {
        self.out_channels * self.input.channels * self.kernel[0] * self.kernel[1]
    }

    #[inline]
    fn kernel_index(&self, o: usize, c: usize, ky: usize, kx: usize) -> usize {
        ((o * self.input.channels + c) * self.kernel[0] + ky) * self.kernel[1] + kx
    }

    #[inline]
    fn input_index(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.input.height + y) * self.input.width + x
    }
}

/// Cross-correlates `input` with a `[out][in][kh][kw]` kernel, valid padding.
///
/// Each output accumulates over channel, then kernel row, then kernel column.
pub fn conv2d_apply(geometry: &ConvGeometry, weights: &[f64], input: &[f64]) -> Result<Vec<f64>> {
    geometry.validate()?;
    if weights.len() != geometry.kernel_len() {
        return Err(Error::contract(format!(
            "kernel has {} weights, geometry needs {}",
            weights.len(),
            geometry.kernel_len()
        )));
    }
    if input.len() != geometry.input.len() {
        return Err(Error::contract(format!(
            "input has {} values, geometry needs {}",
            input.len(),
            geometry.input.len()
        )));
    }
    let mut out = vec![0.0; geometry.output().len()];
    conv_forward(geometry, weights, input, &mut out);
    Ok(out)
}

fn conv_forward(g: &ConvGeometry, w: &[f64], x: &[f64], out: &mut [f64]) {
    let o_shape = g.output();
    let [kh, kw] = g.kernel;
    for o in 0..g.out_channels {
        for oy in 0..o_shape.height {
            for ox in 0..o_shape.width {
                let mut acc = 0.0;
                for c in 0..g.input.channels {
                    for ky in 0..kh {
                        let row = g.input_index(c, oy * g.stride + ky, ox * g.stride);
                        let krow = g.kernel_index(o, c, ky, 0);
                        for kx in 0..kw {
                            acc += w[krow + kx] * x[row + kx];
                        }
                    }
                }
                out[(o * o_shape.height + oy) * o_shape.width + ox] = acc;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LayerKind {
    Dense { inputs: usize, outputs: usize },
    Conv2d(ConvGeometry),
}

/// One synaptic layer and the neurons it drives.
///
/// Weights are stored flat: the main matrix (`[out][in]` for dense,
/// `[out][in][kh][kw]` for conv) followed, when `constant_input` is set, by
/// one weight per output channel from an always-on input unit. That unit is
/// how converted networks carry their source biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    /// False only for the final rate-readout layer.
    pub spiking: bool,
    #[serde(default)]
    pub constant_input: bool,
}

impl LayerSpec {
    pub fn dense(inputs: usize, outputs: usize) -> Self {
        Self {
            kind: LayerKind::Dense { inputs, outputs },
            spiking: true,
            constant_input: false,
        }
    }

    pub fn conv2d(input: Shape3, out_channels: usize, kernel: [usize; 2], stride: usize) -> Self {
        Self {
            kind: LayerKind::Conv2d(ConvGeometry {
                input,
                out_channels,
                kernel,
                stride,
            }),
            spiking: true,
            constant_input: false,
        }
    }

    /// Non-spiking output layer reading the mean spike rate of its inputs.
    pub fn readout(inputs: usize, outputs: usize) -> Self {
        Self {
            spiking: false,
            ..Self::dense(inputs, outputs)
        }
    }

    pub fn with_constant_input(mut self) -> Self {
        self.constant_input = true;
        self
    }

    pub fn in_shape(&self) -> Shape3 {
        match self.kind {
            LayerKind::Dense { inputs, .. } => Shape3::flat(inputs),
            LayerKind::Conv2d(g) => g.input,
        }
    }

    pub fn out_shape(&self) -> Shape3 {
        match self.kind {
            LayerKind::Dense { outputs, .. } => Shape3::flat(outputs),
            LayerKind::Conv2d(g) => g.output(),
        }
    }

    pub fn input_len(&self) -> usize {
        self.in_shape().len()
    }

    pub fn output_len(&self) -> usize {
        self.out_shape().len()
    }

    /// Number of presynaptic values feeding each output, counting the constant unit.
    pub fn fan_in(&self) -> usize {
        let main = match self.kind {
            LayerKind::Dense { inputs, .. } => inputs,
            LayerKind::Conv2d(g) => g.input.channels * g.kernel[0] * g.kernel[1],
        };
        main + usize::from(self.constant_input)
    }

    fn main_weight_len(&self) -> usize {
        match self.kind {
            LayerKind::Dense { inputs, outputs } => inputs * outputs,
            LayerKind::Conv2d(g) => g.kernel_len(),
        }
    }

    fn constant_len(&self) -> usize {
        if self.constant_input {
            self.out_shape().channels
        } else {
            0
        }
    }

    pub fn weight_len(&self) -> usize {
        self.main_weight_len() + self.constant_len()
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            LayerKind::Dense { inputs, outputs } => {
                if inputs == 0 || outputs == 0 {
                    return Err(Error::contract("dense layer with zero width"));
                }
            }
            LayerKind::Conv2d(g) => g.validate()?,
        }
        Ok(())
    }

    /// Splits flat weights into the main tensor and the constant-unit weights.
    pub fn split_weights<'w>(&self, weights: &'w [f64]) -> (&'w [f64], &'w [f64]) {
        weights.split_at(self.main_weight_len())
    }

    fn split_weights_mut<'w>(&self, weights: &'w mut [f64]) -> (&'w mut [f64], &'w mut [f64]) {
        weights.split_at_mut(self.main_weight_len())
    }

    fn per_channel(&self) -> usize {
        let s = self.out_shape();
        s.height * s.width
    }

    /// `out = W x (+ constant weights)`; each output sums its inputs in index order.
    pub(crate) fn apply(&self, weights: &[f64], x: &[f64], out: &mut [f64]) {
        let (w, bias) = self.split_weights(weights);
        match self.kind {
            LayerKind::Dense { inputs, .. } => {
                for (o, row) in out.iter_mut().zip(w.chunks_exact(inputs)) {
                    let mut acc = 0.0;
                    for (wi, xi) in row.iter().zip(x) {
                        acc += wi * xi;
                    }
                    *o = acc;
                }
            }
            LayerKind::Conv2d(g) => conv_forward(&g, w, x, out),
        }
        self.add_constant(bias, out);
    }

    /// Same as [`apply`](Self::apply) for a binary input given by the indices of its ones.
    pub(crate) fn apply_active(&self, weights: &[f64], x: &[f64], active: &[usize], out: &mut [f64]) {
        let (w, bias) = self.split_weights(weights);
        match self.kind {
            LayerKind::Dense { inputs, .. } => {
                for (o, row) in out.iter_mut().zip(w.chunks_exact(inputs)) {
                    let mut acc = 0.0;
                    for &j in active {
                        acc += row[j];
                    }
                    *o = acc;
                }
            }
            LayerKind::Conv2d(g) => conv_forward(&g, w, x, out),
        }
        self.add_constant(bias, out);
    }

    fn add_constant(&self, bias: &[f64], out: &mut [f64]) {
        if bias.is_empty() {
            return;
        }
        let per = self.per_channel();
        for (chunk, b) in out.chunks_exact_mut(per).zip(bias) {
            for o in chunk {
                *o += b;
            }
        }
    }

    /// `grad_w += scale * dOut (x)^T`, including the constant unit.
    pub(crate) fn accumulate_weight_grad(&self, grad: &mut [f64], d_out: &[f64], x: &[f64], scale: f64) {
        let (gw, gb) = self.split_weights_mut(grad);
        match self.kind {
            LayerKind::Dense { inputs, .. } => {
                for (row, &d) in gw.chunks_exact_mut(inputs).zip(d_out) {
                    if d == 0.0 {
                        continue;
                    }
                    let d = d * scale;
                    for (g, xi) in row.iter_mut().zip(x) {
                        *g += d * xi;
                    }
                }
            }
            LayerKind::Conv2d(g) => {
                let os = g.output();
                let [kh, kw] = g.kernel;
                for o in 0..g.out_channels {
                    for c in 0..g.input.channels {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let mut acc = 0.0;
                                for oy in 0..os.height {
                                    for ox in 0..os.width {
                                        let d = d_out[(o * os.height + oy) * os.width + ox];
                                        acc += d * x[g.input_index(c, oy * g.stride + ky, ox * g.stride + kx)];
                                    }
                                }
                                gw[g.kernel_index(o, c, ky, kx)] += scale * acc;
                            }
                        }
                    }
                }
            }
        }
        if !gb.is_empty() {
            let per = self.per_channel();
            for (b, chunk) in gb.iter_mut().zip(d_out.chunks_exact(per)) {
                *b += scale * chunk.iter().sum::<f64>();
            }
        }
    }

    /// [`accumulate_weight_grad`](Self::accumulate_weight_grad) for a binary input given by
    /// the indices of its ones.
    pub(crate) fn accumulate_weight_grad_active(
        &self,
        grad: &mut [f64],
        d_out: &[f64],
        x: &[f64],
        active: &[usize],
        scale: f64,
    ) {
        let LayerKind::Dense { inputs, .. } = self.kind else {
            return self.accumulate_weight_grad(grad, d_out, x, scale);
        };
        let (gw, gb) = self.split_weights_mut(grad);
        for (row, &d) in gw.chunks_exact_mut(inputs).zip(d_out) {
            let d = d * scale;
            for &j in active {
                row[j] += d;
            }
        }
        for (b, d) in gb.iter_mut().zip(d_out) {
            *b += scale * d;
        }
    }

    /// `d_in += scale * W^T dOut`.
    pub(crate) fn accumulate_input_grad(&self, weights: &[f64], d_out: &[f64], d_in: &mut [f64], scale: f64) {
        let (w, _) = self.split_weights(weights);
        match self.kind {
            LayerKind::Dense { inputs, .. } => {
                for (row, &d) in w.chunks_exact(inputs).zip(d_out) {
                    if d == 0.0 {
                        continue;
                    }
                    let d = d * scale;
                    for (gi, wi) in d_in.iter_mut().zip(row) {
                        *gi += d * wi;
                    }
                }
            }
            LayerKind::Conv2d(g) => {
                let os = g.output();
                let [kh, kw] = g.kernel;
                for o in 0..g.out_channels {
                    for oy in 0..os.height {
                        for ox in 0..os.width {
                            let d = d_out[(o * os.height + oy) * os.width + ox];
                            if d == 0.0 {
                                continue;
                            }
                            let d = d * scale;
                            for c in 0..g.input.channels {
                                for ky in 0..kh {
                                    for kx in 0..kw {
                                        d_in[g.input_index(c, oy * g.stride + ky, ox * g.stride + kx)] +=
                                            d * w[g.kernel_index(o, c, ky, kx)];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}
