//! Finite-difference gradient verification for every differentiable piece:
//! individual layers, the LSTM cell, and the five architectures end to end
//! on miniaturized specs. Central differences with a curvature guard that
//! skips coordinates straddling a relu kink or a pooling argmax switch.

// Perturb-coordinate-k loops index the parameter slice and the gradient
// slice in lockstep; an iterator form would obscure that symmetry.
#![allow(clippy::needless_range_loop)]

use ndarray::{Array1, Array2};

use crate::architectures::{AssembledInput, Geom, Model, ModelKind, ModelSpec};
use crate::error::Result;
use crate::layers::{ActKind, Activation, Conv1d, ConvSpec, Dense, Pool1d, PoolKind, PoolSpec};
use crate::numerics::Rng;
use crate::recurrent::Lstm;

#[derive(Clone, Copy, Debug)]
pub struct CheckSettings {
    /// Central-difference step.
    pub step: f64,
    /// Maximum allowed relative error.
    pub tol: f64,
    /// Randomized instances per check.
    pub trials: usize,
    pub seed: u64,
    /// Negative-control hook: scale every analytic gradient before the
    /// comparison so the check MUST fail. Proves failures are detected and
    /// reported, never used in a real verification run.
    pub corrupt: bool,
}

impl Default for CheckSettings {
    fn default() -> CheckSettings {
        CheckSettings {
            step: 1e-5,
            tol: 1e-4,
            trials: 100,
            seed: 0x5eed,
            corrupt: false,
        }
    }
}

/// Result of one check: worst relative error over all compared coordinates,
/// plus descriptions of any coordinates that exceeded the tolerance.
#[derive(Debug)]
pub struct CheckOutcome {
    pub label: String,
    pub trials: usize,
    pub coords_checked: usize,
    pub coords_skipped: usize,
    pub max_rel_err: f64,
    pub tol: f64,
    pub failures: Vec<String>,
    corrupt: bool,
}

impl CheckOutcome {
    fn new(label: &str, settings: &CheckSettings) -> CheckOutcome {
        CheckOutcome {
            label: label.to_string(),
            trials: settings.trials,
            coords_checked: 0,
            coords_skipped: 0,
            max_rel_err: 0.0,
            tol: settings.tol,
            failures: Vec::new(),
            corrupt: settings.corrupt,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.coords_checked > 0
    }

    /// Richardson-checked central difference: slopes estimated with steps h
    /// and h/2 agree to O(h^2) on a smooth function but diverge when a relu
    /// kink or pooling argmax switch lies inside the probed interval; such
    /// coordinates are skipped rather than compared.
    fn richardson(&mut self, up1: f64, dn1: f64, up2: f64, dn2: f64, h: f64) -> Option<f64> {
        let fd1 = (up1 - dn1) / (2.0 * h);
        let fd2 = (up2 - dn2) / h;
        if (fd1 - fd2).abs() > 5e-4 * fd1.abs().max(fd2.abs()).max(1e-3) {
            self.coords_skipped += 1;
            return None;
        }
        Some((4.0 * fd2 - fd1) / 3.0)
    }

    fn compare(&mut self, what: &str, analytic: f64, fd: f64) {
        let analytic = if self.corrupt {
            analytic * 1.5 + 0.1
        } else {
            analytic
        };
        self.coords_checked += 1;
        let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-6);
        if rel > self.max_rel_err {
            self.max_rel_err = rel;
        }
        if rel > self.tol && self.failures.len() < 8 {
            self.failures.push(format!(
                "{what}: backprop={analytic:.9e} fd={fd:.9e} rel={rel:.3e}"
            ));
        }
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {} — {} coords checked ({} skipped at kinks), max rel err {:.3e} (tol {:.1e})",
            self.label,
            if self.passed() { "ok" } else { "FAILED" },
            self.coords_checked,
            self.coords_skipped,
            self.max_rel_err,
            self.tol
        )
    }
}

fn rand_array2(rng: &mut Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.uniform(lo, hi))
}

fn rand_array1(rng: &mut Rng, n: usize, lo: f64, hi: f64) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| rng.uniform(lo, hi))
}

fn input_of(w: &[Option<Array2<f64>>; 3]) -> AssembledInput<'_> {
    AssembledInput {
        long_window: w[0].as_ref().map(|a| a.view()),
        short_window: w[1].as_ref().map(|a| a.view()),
        daily_window: w[2].as_ref().map(|a| a.view()),
    }
}

/// Convolution: kernel, bias, and input gradients on random geometries.
pub fn check_conv(settings: &CheckSettings) -> CheckOutcome {
    let mut out = CheckOutcome::new("conv1d", settings);
    let mut rng = Rng::new(settings.seed ^ 0xc0);
    let h = settings.step;
    for _ in 0..settings.trials {
        let kernel_size = 1 + rng.index(4);
        let spec = ConvSpec {
            in_channels: 1 + rng.index(3),
            out_channels: 1 + rng.index(3),
            kernel_size,
            stride: 1 + rng.index(3),
            padding: rng.index(kernel_size),
        };
        let in_len = 5 + rng.index(8);
        let out_len = match spec.out_len(in_len) {
            Ok(l) => l,
            Err(_) => continue,
        };
        let mut conv = Conv1d::new("c", spec, &mut rng).unwrap();
        let input = rand_array2(&mut rng, spec.in_channels, in_len, -1.0, 1.0);
        let dout = rand_array2(&mut rng, spec.out_channels, out_len, -1.0, 1.0);

        conv.forward(input.view()).unwrap();
        let dx = conv.backward(dout.view(), true).unwrap().unwrap();
        let dk = conv.kernels.grad_slice().to_vec();
        let db = conv.bias.grad_slice().to_vec();

        let loss = |conv: &mut Conv1d, input: &Array2<f64>| -> f64 {
            let o = conv.forward(input.view()).unwrap();
            o.iter().zip(dout.iter()).map(|(a, b)| a * b).sum()
        };
        for k in 0..dk.len() {
            let orig = conv.kernels.values_slice()[k];
            conv.kernels.values_slice_mut()[k] = orig + h;
            let up1 = loss(&mut conv, &input);
            conv.kernels.values_slice_mut()[k] = orig - h;
            let dn1 = loss(&mut conv, &input);
            conv.kernels.values_slice_mut()[k] = orig + h / 2.0;
            let up2 = loss(&mut conv, &input);
            conv.kernels.values_slice_mut()[k] = orig - h / 2.0;
            let dn2 = loss(&mut conv, &input);
            conv.kernels.values_slice_mut()[k] = orig;
            if let Some(fd) = out.richardson(up1, dn1, up2, dn2, h) {
                out.compare(&format!("kernel[{k}]"), dk[k], fd);
            }
        }
        for k in 0..db.len() {
            let orig = conv.bias.values_slice()[k];
            conv.bias.values_slice_mut()[k] = orig + h;
            let up1 = loss(&mut conv, &input);
            conv.bias.values_slice_mut()[k] = orig - h;
            let dn1 = loss(&mut conv, &input);
            conv.bias.values_slice_mut()[k] = orig + h / 2.0;
            let up2 = loss(&mut conv, &input);
            conv.bias.values_slice_mut()[k] = orig - h / 2.0;
            let dn2 = loss(&mut conv, &input);
            conv.bias.values_slice_mut()[k] = orig;
            if let Some(fd) = out.richardson(up1, dn1, up2, dn2, h) {
                out.compare(&format!("bias[{k}]"), db[k], fd);
            }
        }
        let mut input = input;
        for r in 0..input.nrows() {
            for c in 0..input.ncols() {
                let orig = input[[r, c]];
                input[[r, c]] = orig + h;
                let up1 = loss(&mut conv, &input);
                input[[r, c]] = orig - h;
                let dn1 = loss(&mut conv, &input);
                input[[r, c]] = orig + h / 2.0;
                let up2 = loss(&mut conv, &input);
                input[[r, c]] = orig - h / 2.0;
                let dn2 = loss(&mut conv, &input);
                input[[r, c]] = orig;
                if let Some(fd) = out.richardson(up1, dn1, up2, dn2, h) {
                    out.compare(&format!("input[{r},{c}]"), dx[[r, c]], fd);
                }
            }
        }
    }
    out
}

/// Pooling has no parameters; checks input gradients only.
pub fn check_pool(kind: PoolKind, settings: &CheckSettings) -> CheckOutcome {
    let label = match kind {
        PoolKind::Max => "pool1d/max",
        PoolKind::Average => "pool1d/average",
    };
    let mut out = CheckOutcome::new(label, settings);
    let mut rng = Rng::new(settings.seed ^ 0xb0);
    let h = settings.step;
    for _ in 0..settings.trials {
        let kernel_size = 2 + rng.index(3);
        let spec = PoolSpec {
            kind,
            kernel_size,
            stride: 1 + rng.index(3),
            padding: rng.index(kernel_size),
        };
        let in_len = 5 + rng.index(8);
        if spec.out_len(in_len).is_err() {
            continue;
        }
        let mut pool = Pool1d::new(spec).unwrap();
        let channels = 1 + rng.index(2);
        let input = rand_array2(&mut rng, channels, in_len, -1.0, 1.0);
        let o = pool.forward(input.view()).unwrap();
        let dout = rand_array2(&mut rng, o.nrows(), o.ncols(), -1.0, 1.0);
        let dx = pool.backward(dout.view()).unwrap();

        let loss = |pool: &mut Pool1d, input: &Array2<f64>| -> f64 {
            let o = pool.forward(input.view()).unwrap();
            o.iter().zip(dout.iter()).map(|(a, b)| a * b).sum()
        };
        let mut input = input;
        for r in 0..input.nrows() {
            for c in 0..input.ncols() {
                let orig = input[[r, c]];
                input[[r, c]] = orig + h;
                let up1 = loss(&mut pool, &input);
                input[[r, c]] = orig - h;
                let dn1 = loss(&mut pool, &input);
                input[[r, c]] = orig + h / 2.0;
                let up2 = loss(&mut pool, &input);
                input[[r, c]] = orig - h / 2.0;
                let dn2 = loss(&mut pool, &input);
                input[[r, c]] = orig;
                if let Some(fd) = out.richardson(up1, dn1, up2, dn2, h) {
                    out.compare(&format!("input[{r},{c}]"), dx[[r, c]], fd);
                }
            }
        }
    }
    out
}

pub fn check_dense(settings: &CheckSettings) -> CheckOutcome {
    let mut out = CheckOutcome::new("dense", settings);
    let mut rng = Rng::new(settings.seed ^ 0xd0);
    let h = settings.step;
    for _ in 0..settings.trials {
        let (in_dim, out_dim) = (1 + rng.index(5), 1 + rng.index(4));
        let mut dense = Dense::new("d", in_dim, out_dim, &mut rng).unwrap();
        let input = rand_array1(&mut rng, in_dim, -1.0, 1.0);
        let dout = rand_array1(&mut rng, out_dim, -1.0, 1.0);
        dense.forward(input.view()).unwrap();
        let dx = dense.backward(dout.view()).unwrap();
        let dw = dense.w.grad_slice().to_vec();
        let db = dense.b.grad_slice().to_vec();

        let loss = |dense: &mut Dense, input: &Array1<f64>| -> f64 {
            let o = dense.forward(input.view()).unwrap();
            o.iter().zip(dout.iter()).map(|(a, b)| a * b).sum()
        };
        for k in 0..dw.len() {
            let orig = dense.w.values_slice()[k];
            dense.w.values_slice_mut()[k] = orig + h;
            let up1 = loss(&mut dense, &input);
            dense.w.values_slice_mut()[k] = orig - h;
            let dn1 = loss(&mut dense, &input);
            dense.w.values_slice_mut()[k] = orig + h / 2.0;
            let up2 = loss(&mut dense, &input);
            dense.w.values_slice_mut()[k] = orig - h / 2.0;
            let dn2 = loss(&mut dense, &input);
            dense.w.values_slice_mut()[k] = orig;
            if let Some(fd) = out.richardson(up1, dn1, up2, dn2, h) {
                out.compare(&format!("w[{k}]"), dw[k], fd);
            }
        }
        for k in 0..db.len() {
            let orig = dense.b.values_slice()[k];
            dense.b.values_slice_mut()[k] = orig + h;
            let up1 = loss(&mut dense, &input);
            dense.b.values_slice_mut()[k] = orig - h;
            let dn1 = loss(&mut dense, &input);
            dense.b.values_slice_mut()[k] = orig + h / 2.0;
            let up2 = loss(&mut dense, &input);
            dense.b.values_slice_mut()[k] = orig - h / 2.0;
            let dn2 = loss(&mut dense, &input);
            dense.b.values_slice_mut()[k] = orig;
            if let Some(fd) = out.richardson(up1, dn1, up2, dn2, h) {
                out.compare(&format!("b[{k}]"), db[k], fd);
            }
        }
        let mut input = input;
        for k in 0..in_dim {
            let orig = input[k];
            input[k] = orig + h;
            let up1 = loss(&mut dense, &input);
            input[k] = orig - h;
            let dn1 = loss(&mut dense, &input);
            input[k] = orig + h / 2.0;
            let up2 = loss(&mut dense, &input);
            input[k] = orig - h / 2.0;
            let dn2 = loss(&mut dense, &input);
            input[k] = orig;
            if let Some(fd) = out.richardson(up1, dn1, up2, dn2, h) {
                out.compare(&format!("input[{k}]"), dx[k], fd);
            }
        }
    }
    out
}

pub fn check_activation(kind: ActKind, settings: &CheckSettings) -> CheckOutcome {
    let label = match kind {
        ActKind::Relu => "activation/relu",
        ActKind::Sigmoid => "activation/sigmoid",
        ActKind::Tanh => "activation/tanh",
    };
    let mut out = CheckOutcome::new(label, settings);
    let mut rng = Rng::new(settings.seed ^ 0xa0);
    let h = settings.step;
    for _ in 0..settings.trials {
        let n = 4 + rng.index(5);
        let input = rand_array1(&mut rng, n, -2.0, 2.0);
        let dout = rand_array1(&mut rng, n, -1.0, 1.0);
        let mut act = Activation::new(kind);
        let loss = |act: &mut Activation, x: &Array1<f64>| -> f64 {
            let mut v = x.to_vec();
            act.forward_inplace(&mut v);
            v.iter().zip(dout.iter()).map(|(a, b)| a * b).sum()
        };
        let mut v = input.to_vec();
        act.forward_inplace(&mut v);
        let mut dx = dout.to_vec();
        act.backward_inplace(&mut dx);
        let mut input = input;
        for k in 0..n {
            let orig = input[k];
            input[k] = orig + h;
            let up1 = loss(&mut act, &input);
            input[k] = orig - h;
            let dn1 = loss(&mut act, &input);
            input[k] = orig + h / 2.0;
            let up2 = loss(&mut act, &input);
            input[k] = orig - h / 2.0;
            let dn2 = loss(&mut act, &input);
            input[k] = orig;
            if let Some(fd) = out.richardson(up1, dn1, up2, dn2, h) {
                out.compare(&format!("input[{k}]"), dx[k], fd);
            }
        }
    }
    out
}

/// Full BPTT check: every coordinate of all sixteen tensors plus the input
/// sequence, T=5.
pub fn check_lstm_cell(settings: &CheckSettings) -> CheckOutcome {
    let mut out = CheckOutcome::new("lstm-cell", settings);
    let mut rng = Rng::new(settings.seed ^ 0x15);
    let h = settings.step;
    let (t_len, input_size, hidden) = (5, 3, 4);
    for _ in 0..settings.trials {
        let mut lstm = Lstm::new("l", input_size, hidden, &mut rng).unwrap();
        let seq = rand_array2(&mut rng, input_size, t_len, -1.0, 1.0);
        let dh = rand_array1(&mut rng, hidden, -1.0, 1.0);
        lstm.forward(seq.view()).unwrap();
        let dx = lstm.backward(dh.view(), true).unwrap().unwrap();
        let grads: Vec<Vec<f64>> = lstm
            .cell
            .params()
            .iter()
            .map(|p| p.grad_slice().to_vec())
            .collect();
        let names: Vec<String> = lstm
            .cell
            .params()
            .iter()
            .map(|p| p.name().to_string())
            .collect();

        let loss = |lstm: &mut Lstm, seq: &Array2<f64>| -> f64 {
            let hv = lstm.forward(seq.view()).unwrap();
            hv.iter().zip(dh.iter()).map(|(a, b)| a * b).sum()
        };
        for pi in 0..grads.len() {
            for k in 0..grads[pi].len() {
                let orig = lstm.cell.params()[pi].values_slice()[k];
                lstm.cell.params_mut()[pi].values_slice_mut()[k] = orig + h;
                let up1 = loss(&mut lstm, &seq);
                lstm.cell.params_mut()[pi].values_slice_mut()[k] = orig - h;
                let dn1 = loss(&mut lstm, &seq);
                lstm.cell.params_mut()[pi].values_slice_mut()[k] = orig + h / 2.0;
                let up2 = loss(&mut lstm, &seq);
                lstm.cell.params_mut()[pi].values_slice_mut()[k] = orig - h / 2.0;
                let dn2 = loss(&mut lstm, &seq);
                lstm.cell.params_mut()[pi].values_slice_mut()[k] = orig;
                if let Some(fd) = out.richardson(up1, dn1, up2, dn2, h) {
                    out.compare(&format!("{}[{k}]", names[pi]), grads[pi][k], fd);
                }
            }
        }
        let mut seq = seq;
        for r in 0..input_size {
            for c in 0..t_len {
                let orig = seq[[r, c]];
                seq[[r, c]] = orig + h;
                let up1 = loss(&mut lstm, &seq);
                seq[[r, c]] = orig - h;
                let dn1 = loss(&mut lstm, &seq);
                seq[[r, c]] = orig + h / 2.0;
                let up2 = loss(&mut lstm, &seq);
                seq[[r, c]] = orig - h / 2.0;
                let dn2 = loss(&mut lstm, &seq);
                seq[[r, c]] = orig;
                if let Some(fd) = out.richardson(up1, dn1, up2, dn2, h) {
                    out.compare(&format!("input[{r},{c}]"), dx[[r, c]], fd);
                }
            }
        }
    }
    out
}

/// A spec small enough for exhaustive-ish finite differencing: long window
/// 24, short window 6, two variables, hidden size 3.
pub fn miniature_spec(kind: ModelKind) -> ModelSpec {
    let mut spec = ModelSpec::new(kind, 2);
    spec.nchf = 2;
    spec.long_len = 24;
    spec.short_len = 6;
    spec.daily_len = 6;
    spec.hidden_size = 3;
    // pooled: 24 -> 12 -> 6 -> 3 -> 1 -> 1 -> 1; serial: 24 -> 12 -> 6 -> 6
    spec.pooled_convs = [Geom::new(3, 2, 1), Geom::new(3, 2, 1), Geom::new(3, 1, 1)];
    spec.pooled_pools = [Geom::new(2, 2, 0), Geom::new(2, 2, 0), Geom::new(1, 1, 0)];
    spec.serial_convs = [Geom::new(3, 2, 1), Geom::new(3, 2, 1), Geom::new(3, 1, 1)];
    spec.head_widths = [6, 4];
    spec.branch_width = 5;
    spec.fused_width = 4;
    spec
}

/// End-to-end check of one architecture on its miniature spec: a sample of
/// coordinates from every parameter tensor plus every input window.
pub fn check_architecture(kind: ModelKind, settings: &CheckSettings) -> Result<CheckOutcome> {
    let spec = miniature_spec(kind);
    let mut out = CheckOutcome::new(&format!("architecture/{}", kind.label()), settings);
    let mut rng = Rng::new(settings.seed ^ 0xae);
    let h = settings.step;
    let coords_per_tensor = 4;
    for trial in 0..settings.trials {
        let mut model = Model::build(&spec, &mut Rng::new(settings.seed ^ (trial as u64 + 1)))?;
        // Freshly built models keep biases at zero, which can park a ReLU
        // pre-activation exactly on its kink (a dead window upstream makes the
        // pre-activation equal the bias). A kink centred on the probe point
        // fools even step-halving — both steps measure the same averaged
        // slope — so randomise every tensor to push the model off such ties.
        for p in model.params_mut() {
            for v in p.values_slice_mut() {
                *v = rng.uniform(-0.5, 0.5);
            }
        }
        let long = rand_array2(&mut rng, spec.n_vars, spec.long_len, -1.0, 1.0);
        let short = rand_array2(&mut rng, spec.n_vars, spec.short_len, -1.0, 1.0);
        let daily = rand_array2(&mut rng, spec.n_vars, spec.daily_len, -1.0, 1.0);
        let windows = [Some(long), Some(short), Some(daily)];
        model.forward(&input_of(&windows))?;
        let input_grads = model.backward(1.0, true)?.unwrap();
        let grads: Vec<Vec<f64>> = model
            .params_mut()
            .iter()
            .map(|p| p.grad_slice().to_vec())
            .collect();
        let names: Vec<String> = model
            .params_mut()
            .iter()
            .map(|p| p.name().to_string())
            .collect();

        for pi in 0..grads.len() {
            let n = grads[pi].len();
            for _ in 0..coords_per_tensor.min(n) {
                let k = rng.index(n);
                let orig = model.params_mut()[pi].values_slice()[k];
                model.params_mut()[pi].values_slice_mut()[k] = orig + h;
                let up1 = model.forward(&input_of(&windows))?;
                model.params_mut()[pi].values_slice_mut()[k] = orig - h;
                let dn1 = model.forward(&input_of(&windows))?;
                model.params_mut()[pi].values_slice_mut()[k] = orig + h / 2.0;
                let up2 = model.forward(&input_of(&windows))?;
                model.params_mut()[pi].values_slice_mut()[k] = orig - h / 2.0;
                let dn2 = model.forward(&input_of(&windows))?;
                model.params_mut()[pi].values_slice_mut()[k] = orig;
                if let Some(fd) = out.richardson(up1, dn1, up2, dn2, h) {
                    out.compare(&format!("{}[{k}]", names[pi]), grads[pi][k], fd);
                }
            }
        }
        // Input-window gradients (only windows this kind consumes).
        let (wants_long, wants_short, wants_daily) = kind.needs();
        let flags = [wants_long, wants_short, wants_daily];
        let grads_by_window = [
            &input_grads.long_window,
            &input_grads.short_window,
            &input_grads.daily_window,
        ];
        let window_names = ["long_window", "short_window", "daily_window"];
        let mut windows = windows;
        for wi in 0..3 {
            if !flags[wi] {
                continue;
            }
            let g = grads_by_window[wi]
                .as_ref()
                .expect("missing input gradient")
                .clone();
            let (rows, cols) = g.dim();
            for _ in 0..6 {
                let (r, c) = (rng.index(rows), rng.index(cols));
                let orig = windows[wi].as_ref().unwrap()[[r, c]];
                windows[wi].as_mut().unwrap()[[r, c]] = orig + h;
                let up1 = model.forward(&input_of(&windows))?;
                windows[wi].as_mut().unwrap()[[r, c]] = orig - h;
                let dn1 = model.forward(&input_of(&windows))?;
                windows[wi].as_mut().unwrap()[[r, c]] = orig + h / 2.0;
                let up2 = model.forward(&input_of(&windows))?;
                windows[wi].as_mut().unwrap()[[r, c]] = orig - h / 2.0;
                let dn2 = model.forward(&input_of(&windows))?;
                windows[wi].as_mut().unwrap()[[r, c]] = orig;
                if let Some(fd) = out.richardson(up1, dn1, up2, dn2, h) {
                    out.compare(&format!("{}[{r},{c}]", window_names[wi]), g[[r, c]], fd);
                }
            }
        }
    }
    Ok(out)
}

/// Runs every gradient check; the full verification suite.
pub fn check_all(settings: &CheckSettings) -> Result<Vec<CheckOutcome>> {
    let mut outcomes = vec![
        check_conv(settings),
        check_pool(PoolKind::Max, settings),
        check_pool(PoolKind::Average, settings),
        check_dense(settings),
        check_activation(ActKind::Relu, settings),
        check_activation(ActKind::Sigmoid, settings),
        check_activation(ActKind::Tanh, settings),
        check_lstm_cell(settings),
    ];
    for kind in ModelKind::ALL {
        outcomes.push(check_architecture(kind, settings)?);
    }
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> CheckSettings {
        CheckSettings {
            trials: 8,
            ..CheckSettings::default()
        }
    }

    #[test]
    fn layer_checks_pass() {
        for outcome in [
            check_conv(&quick()),
            check_pool(PoolKind::Max, &quick()),
            check_pool(PoolKind::Average, &quick()),
            check_dense(&quick()),
            check_activation(ActKind::Relu, &quick()),
            check_activation(ActKind::Sigmoid, &quick()),
            check_activation(ActKind::Tanh, &quick()),
        ] {
            assert!(outcome.passed(), "{}", outcome.summary());
        }
    }

    #[test]
    fn lstm_cell_check_passes() {
        let outcome = check_lstm_cell(&quick());
        assert!(outcome.passed(), "{}", outcome.summary());
    }

    #[test]
    fn all_architectures_pass_end_to_end() {
        for kind in ModelKind::ALL {
            let outcome = check_architecture(
                kind,
                &CheckSettings {
                    trials: 3,
                    ..CheckSettings::default()
                },
            )
            .unwrap();
            assert!(
                outcome.passed(),
                "{}\n{}",
                outcome.summary(),
                outcome.failures.join("\n")
            );
        }
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        // Negative control: with the corruption hook armed, every analytic
        // value is deliberately wrong and the check must fail, naming the
        // offending coordinates.
        let settings = CheckSettings {
            trials: 2,
            corrupt: true,
            ..CheckSettings::default()
        };
        let outcome = check_dense(&settings);
        assert!(!outcome.passed());
        assert!(!outcome.failures.is_empty());
        assert!(outcome.failures[0].contains("rel="));
        assert!(outcome.summary().contains("FAILED"));
    }
}
