//! LSTM block with full backpropagation through time, plus the linear
//! output head that maps the final hidden state to a scalar.
//!
//! Gate equations, for step s with input x and previous state (h, c):
//!
//! ```text
//! g_i = sigmoid(W_ii x + b_ii + W_hi h + b_hi)      input gate
//! g_f = sigmoid(W_if x + b_if + W_hf h + b_hf)      forget gate
//! g_o = sigmoid(W_io x + b_io + W_ho h + b_ho)      output gate
//! g_c = tanh   (W_ic x + b_ic + W_hc h + b_hc)      cell candidate
//! c   = g_f * c_prev + g_i * g_c
//! h   = g_o * tanh(c)
//! ```
//!
//! All sixteen tensors are independent parameters; the split input/recurrent
//! biases are redundant in exact arithmetic but kept separate so checkpoints
//! store exactly what the equations name.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::layers::sigmoid;
use crate::numerics::{axpy, dot, Param, Rng};

// Parameter vector layout. Weight order groups input matrices before
// recurrent matrices; biases follow in the same gate order.
// Indices of each gate's first tensor; gate g of a group sits at base + g.
const W_II: usize = 0;
const W_HI: usize = 4;
const B_II: usize = 8;
const B_HI: usize = 12;
const N_PARAMS: usize = 16;

const GATE_NAMES: [&str; 4] = ["i", "f", "o", "c"];

/// The sixteen weight/bias tensors of one LSTM cell.
pub struct LstmCellParams {
    input_size: usize,
    hidden_size: usize,
    params: Vec<Param>,
}

impl LstmCellParams {
    pub fn new(
        name_prefix: &str,
        input_size: usize,
        hidden_size: usize,
        rng: &mut Rng,
    ) -> Result<LstmCellParams> {
        if input_size < 1 || hidden_size < 1 {
            return Err(Error::Config("lstm: sizes must be >= 1".into()));
        }
        let mut params = Vec::with_capacity(N_PARAMS);
        for g in GATE_NAMES {
            params.push(Param::glorot(
                format!("{name_prefix}.w_i{g}"),
                &[hidden_size, input_size],
                input_size,
                hidden_size,
                rng,
            ));
        }
        for g in GATE_NAMES {
            params.push(Param::glorot(
                format!("{name_prefix}.w_h{g}"),
                &[hidden_size, hidden_size],
                hidden_size,
                hidden_size,
                rng,
            ));
        }
        for g in GATE_NAMES {
            params.push(Param::zeros(
                format!("{name_prefix}.b_i{g}"),
                &[hidden_size],
            ));
        }
        for g in GATE_NAMES {
            params.push(Param::zeros(
                format!("{name_prefix}.b_h{g}"),
                &[hidden_size],
            ));
        }
        Ok(LstmCellParams {
            input_size,
            hidden_size,
            params,
        })
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.params.iter_mut().collect()
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    #[inline]
    fn w_input(&self, gate: usize) -> &[f64] {
        self.params[W_II + gate].values_slice()
    }

    #[inline]
    fn w_hidden(&self, gate: usize) -> &[f64] {
        self.params[W_HI + gate].values_slice()
    }

    #[inline]
    fn biases(&self, gate: usize) -> (&[f64], &[f64]) {
        (
            self.params[B_II + gate].values_slice(),
            self.params[B_HI + gate].values_slice(),
        )
    }
}

/// Hidden and cell state after a step. Zero before the first step.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmState {
    pub h: Array1<f64>,
    pub c: Array1<f64>,
}

impl LstmState {
    pub fn zeros(hidden_size: usize) -> LstmState {
        LstmState {
            h: Array1::zeros(hidden_size),
            c: Array1::zeros(hidden_size),
        }
    }
}

/// Gate activations of one step, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct StepCache {
    pub g_i: Array1<f64>,
    pub g_f: Array1<f64>,
    pub g_o: Array1<f64>,
    pub g_c: Array1<f64>,
    pub tanh_c: Array1<f64>,
}

/// One LSTM step. Shared by `lstm_step` and the fused sequence loop so both
/// paths are bit-identical. All slices have length `hidden` except `x` (input
/// size); outputs are written in place.
#[allow(clippy::too_many_arguments)]
#[inline]
fn step_into(
    cell: &LstmCellParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    g_out: [&mut [f64]; 4],
    c_out: &mut [f64],
    tanh_c_out: &mut [f64],
    h_out: &mut [f64],
) {
    let (hidden, input) = (cell.hidden_size, cell.input_size);
    let [gi, gf, go, gc] = g_out;
    for (gate, out) in [&mut *gi, &mut *gf, &mut *go, &mut *gc]
        .into_iter()
        .enumerate()
    {
        let wx = cell.w_input(gate);
        let wh = cell.w_hidden(gate);
        let (bi, bh) = cell.biases(gate);
        for j in 0..hidden {
            let a = dot(&wx[j * input..(j + 1) * input], x)
                + dot(&wh[j * hidden..(j + 1) * hidden], h_prev)
                + bi[j]
                + bh[j];
            out[j] = if gate == 3 { a.tanh() } else { sigmoid(a) };
        }
    }
    for j in 0..hidden {
        c_out[j] = gf[j] * c_prev[j] + gi[j] * gc[j];
        tanh_c_out[j] = c_out[j].tanh();
        h_out[j] = go[j] * tanh_c_out[j];
    }
}

/// Single LSTM step from an explicit previous state.
pub fn lstm_step(
    x: ArrayView1<'_, f64>,
    prev: &LstmState,
    cell: &LstmCellParams,
) -> Result<(LstmState, StepCache)> {
    if x.len() != cell.input_size {
        return Err(Error::Shape(format!(
            "lstm step: input length {} does not match input size {}",
            x.len(),
            cell.input_size
        )));
    }
    if prev.h.len() != cell.hidden_size || prev.c.len() != cell.hidden_size {
        return Err(Error::Shape(format!(
            "lstm step: state length {} does not match hidden size {}",
            prev.h.len(),
            cell.hidden_size
        )));
    }
    let h = cell.hidden_size;
    let x = x.to_owned();
    let mut gates = [
        Array1::zeros(h),
        Array1::zeros(h),
        Array1::zeros(h),
        Array1::zeros(h),
    ];
    let mut state = LstmState::zeros(h);
    let mut tanh_c = Array1::zeros(h);
    {
        let [gi, gf, go, gc] = &mut gates;
        let (h_out, c_out) = (&mut state.h, &mut state.c);
        step_into(
            cell,
            x.as_slice().unwrap(),
            prev.h.as_slice().unwrap(),
            prev.c.as_slice().unwrap(),
            [
                gi.as_slice_mut().unwrap(),
                gf.as_slice_mut().unwrap(),
                go.as_slice_mut().unwrap(),
                gc.as_slice_mut().unwrap(),
            ],
            c_out.as_slice_mut().unwrap(),
            tanh_c.as_slice_mut().unwrap(),
            h_out.as_slice_mut().unwrap(),
        );
    }
    let [g_i, g_f, g_o, g_c] = gates;
    Ok((
        state,
        StepCache {
            g_i,
            g_f,
            g_o,
            g_c,
            tanh_c,
        },
    ))
}

struct LstmCache {
    t_len: usize,
    /// Input transposed to time-major `[T x input_size]`.
    input: Array2<f64>,
    /// States `[T+1 x hidden]`; row 0 is the zero initial state.
    h: Array2<f64>,
    c: Array2<f64>,
    /// Gate activations `[T x hidden]`, indexed i/f/o/c.
    gates: [Array2<f64>; 4],
    tanh_c: Array2<f64>,
}

/// An LSTM over a whole sequence: many-to-one, zero initial state.
pub struct Lstm {
    pub cell: LstmCellParams,
    cache: Option<LstmCache>,
}

impl Lstm {
    pub fn new(
        name_prefix: &str,
        input_size: usize,
        hidden_size: usize,
        rng: &mut Rng,
    ) -> Result<Lstm> {
        Ok(Lstm {
            cell: LstmCellParams::new(name_prefix, input_size, hidden_size, rng)?,
            cache: None,
        })
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.cell.params_mut()
    }

    /// Runs the cell over `sequence` (`[input_size x T]`, oldest step first)
    /// and returns the final hidden state.
    pub fn forward(&mut self, sequence: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        let (d, t_len) = sequence.dim();
        if d != self.cell.input_size {
            return Err(Error::Shape(format!(
                "lstm forward: sequence has {d} rows, input size is {}",
                self.cell.input_size
            )));
        }
        if t_len < 1 {
            return Err(Error::Shape("lstm forward: empty sequence".into()));
        }
        let hid = self.cell.hidden_size;
        // Time-major copy so each step reads one contiguous row.
        let input: Array2<f64> = sequence.t().as_standard_layout().to_owned();
        let mut h = Array2::zeros((t_len + 1, hid));
        let mut c = Array2::zeros((t_len + 1, hid));
        let mut gates = [
            Array2::zeros((t_len, hid)),
            Array2::zeros((t_len, hid)),
            Array2::zeros((t_len, hid)),
            Array2::zeros((t_len, hid)),
        ];
        let mut tanh_c = Array2::zeros((t_len, hid));

        let xs = input.as_slice().unwrap();
        let hs = h.as_slice_mut().unwrap();
        let cs = c.as_slice_mut().unwrap();
        let tcs = tanh_c.as_slice_mut().unwrap();
        for t in 0..t_len {
            let (h_prevs, h_rest) = hs[t * hid..].split_at_mut(hid);
            let (c_prevs, c_rest) = cs[t * hid..].split_at_mut(hid);
            let [gi, gf, go, gc] = &mut gates;
            step_into(
                &self.cell,
                &xs[t * d..(t + 1) * d],
                h_prevs,
                c_prevs,
                [
                    &mut gi.as_slice_mut().unwrap()[t * hid..(t + 1) * hid],
                    &mut gf.as_slice_mut().unwrap()[t * hid..(t + 1) * hid],
                    &mut go.as_slice_mut().unwrap()[t * hid..(t + 1) * hid],
                    &mut gc.as_slice_mut().unwrap()[t * hid..(t + 1) * hid],
                ],
                &mut c_rest[..hid],
                &mut tcs[t * hid..(t + 1) * hid],
                &mut h_rest[..hid],
            );
        }
        let last = h.row(t_len).to_owned();
        self.cache = Some(LstmCache {
            t_len,
            input,
            h,
            c,
            gates,
            tanh_c,
        });
        Ok(last)
    }

    /// BPTT from a gradient at the final hidden state. Accumulates into all
    /// sixteen parameter tensors; returns the input-sequence gradient
    /// (`[input_size x T]`) unless `need_input_grads` is false.
    pub fn backward(
        &mut self,
        dh_last: ArrayView1<'_, f64>,
        need_input_grads: bool,
    ) -> Result<Option<Array2<f64>>> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::State("lstm backward called without a cached forward".into()))?;
        let hid = self.cell.hidden_size;
        let d = self.cell.input_size;
        if dh_last.len() != hid {
            return Err(Error::Shape(format!(
                "lstm backward: gradient length {} does not match hidden size {hid}",
                dh_last.len()
            )));
        }
        // Weight values are read on every step while gradients are being
        // accumulated into the same Param set; snapshot them once.
        let w_vals: Vec<Vec<f64>> = (0..8)
            .map(|i| self.cell.params[i].values_slice().to_vec())
            .collect();

        let mut dh: Vec<f64> = dh_last.to_vec();
        let mut dc = vec![0.0; hid];
        let mut da = [
            vec![0.0; hid],
            vec![0.0; hid],
            vec![0.0; hid],
            vec![0.0; hid],
        ];
        let mut d_input = if need_input_grads {
            Some(Array2::<f64>::zeros((d, cache.t_len)))
        } else {
            None
        };
        let mut dx_t = vec![0.0; d];
        let mut dh_prev = vec![0.0; hid];

        for t in (0..cache.t_len).rev() {
            let g_i = &cache.gates[0].as_slice().unwrap()[t * hid..(t + 1) * hid];
            let g_f = &cache.gates[1].as_slice().unwrap()[t * hid..(t + 1) * hid];
            let g_o = &cache.gates[2].as_slice().unwrap()[t * hid..(t + 1) * hid];
            let g_c = &cache.gates[3].as_slice().unwrap()[t * hid..(t + 1) * hid];
            let tanh_c = &cache.tanh_c.as_slice().unwrap()[t * hid..(t + 1) * hid];
            let c_prev = &cache.c.as_slice().unwrap()[t * hid..(t + 1) * hid];
            let h_prev = &cache.h.as_slice().unwrap()[t * hid..(t + 1) * hid];
            let x_t = &cache.input.as_slice().unwrap()[t * d..(t + 1) * d];

            for j in 0..hid {
                let dgo = dh[j] * tanh_c[j];
                dc[j] += dh[j] * g_o[j] * (1.0 - tanh_c[j] * tanh_c[j]);
                let dgf = dc[j] * c_prev[j];
                let dgi = dc[j] * g_c[j];
                let dgc = dc[j] * g_i[j];
                da[0][j] = dgi * g_i[j] * (1.0 - g_i[j]);
                da[1][j] = dgf * g_f[j] * (1.0 - g_f[j]);
                da[2][j] = dgo * g_o[j] * (1.0 - g_o[j]);
                da[3][j] = dgc * (1.0 - g_c[j] * g_c[j]);
            }

            dx_t.fill(0.0);
            dh_prev.fill(0.0);
            for gate in 0..4 {
                let dag = &da[gate];
                {
                    let dw_i = self.cell.params[W_II + gate].grad_slice_mut();
                    for j in 0..hid {
                        if dag[j] != 0.0 {
                            axpy(dag[j], x_t, &mut dw_i[j * d..(j + 1) * d]);
                        }
                    }
                }
                {
                    let dw_h = self.cell.params[W_HI + gate].grad_slice_mut();
                    for j in 0..hid {
                        if dag[j] != 0.0 {
                            axpy(dag[j], h_prev, &mut dw_h[j * hid..(j + 1) * hid]);
                        }
                    }
                }
                axpy(1.0, dag, self.cell.params[B_II + gate].grad_slice_mut());
                axpy(1.0, dag, self.cell.params[B_HI + gate].grad_slice_mut());
                if d_input.is_some() {
                    let w_i = &w_vals[W_II + gate];
                    for j in 0..hid {
                        if dag[j] != 0.0 {
                            axpy(dag[j], &w_i[j * d..(j + 1) * d], &mut dx_t);
                        }
                    }
                }
                let w_h = &w_vals[W_HI + gate];
                for j in 0..hid {
                    if dag[j] != 0.0 {
                        axpy(dag[j], &w_h[j * hid..(j + 1) * hid], &mut dh_prev);
                    }
                }
            }
            if let Some(di) = d_input.as_mut() {
                for (k, &v) in dx_t.iter().enumerate() {
                    di[[k, t]] = v;
                }
            }
            for j in 0..hid {
                dc[j] *= g_f[j];
            }
            dh.copy_from_slice(&dh_prev);
        }
        Ok(d_input)
    }
}

/// Linear output head: `y = W_out h + b_out` with `W_out: [1 x hidden]`.
pub fn output_head(h: ArrayView1<'_, f64>, w_out: &Param, b_out: &Param) -> Result<f64> {
    if w_out.shape() != [1, h.len()] || b_out.shape() != [1] {
        return Err(Error::Shape(format!(
            "output head: weight shape {:?} / bias shape {:?} do not fit hidden length {}",
            w_out.shape(),
            b_out.shape(),
            h.len()
        )));
    }
    let h = h.to_owned();
    Ok(dot(w_out.values_slice(), h.as_slice().unwrap()) + b_out.values_slice()[0])
}
