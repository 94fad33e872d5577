//! Square two-dimensional FFTs and the zero-padded convolution engine behind
//! the solid Cauchy transforms.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};

const TILE: usize = 8;

static PLANNER: Lazy<Mutex<FftPlanner<f64>>> = Lazy::new(|| Mutex::new(FftPlanner::new()));

fn plan(len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut planner = PLANNER.lock().unwrap();
    (planner.plan_fft_forward(len), planner.plan_fft_inverse(len))
}

fn smooth_factors(n: usize) -> Option<(u32, u32, u32)> {
    let mut q = n;
    let mut exps = [0u32; 3];
    for (e, f) in exps.iter_mut().zip([2, 3, 5]) {
        while q.is_multiple_of(f) {
            q /= f;
            *e += 1;
        }
    }
    (q == 1).then_some((exps[0], exps[1], exps[2]))
}

/// Smallest even `2^a 3^b 5^c` that is at least `n`.
pub(crate) fn fast_len(n: usize) -> usize {
    (n.max(2)..).find(|&p| p % 2 == 0 && smooth_factors(p).is_some()).unwrap()
}

/// Padded length for a convolution of an `m`-block: the even smooth length
/// `p ≥ 2m − 1` with the lowest estimated cost of the `2m + 2p` line
/// transforms it takes. Radix-2 lengths run noticeably faster per point than
/// mixed ones, and factors of five slower still.
pub(crate) fn conv_len(m: usize) -> usize {
    let need = 2 * m - 1;
    let weight = |p: usize| match smooth_factors(p) {
        Some((_, 0, 0)) => 1.0,
        Some((_, _, 0)) => 1.25,
        _ => 1.7,
    };
    let mut best = (f64::INFINITY, need);
    let mut p = fast_len(need);
    while p <= 2 * need.next_power_of_two() {
        let cost = (2 * m + 2 * p) as f64 * p as f64 * (p as f64).log2() * weight(p);
        if cost < best.0 {
            best = (cost, p);
        }
        p = fast_len(p + 1);
    }
    best.1
}

/// Out-of-place transpose of a `rows × cols` row-major block.
pub(crate) fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Unnormalized 2D FFT on an `n × n` row-major array.
pub(crate) struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub(crate) fn new(n: usize) -> Self {
        let (fwd, inv) = plan(n);
        Fft2 { n, fwd, inv }
    }

    fn run(&self, fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let n = self.n;
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let mut tmp = vec![Complex64::default(); n * n];
        fft.process_with_scratch(data, &mut scratch);
        transpose(data, &mut tmp, n, n);
        fft.process_with_scratch(&mut tmp, &mut scratch);
        transpose(&tmp, data, n, n);
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(&self.fwd.clone(), data)
    }

    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(&self.inv.clone(), data)
    }
}

/// Which of the two Cauchy kernels to convolve with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kernel {
    /// `1 / (π (z − ζ))`, the inverse of `∂̄`.
    DbarInv,
    /// `1 / (π (z̄ − ζ̄))`, the inverse of `∂`.
    DInv,
}

/// Reusable buffers for [`Convolver::apply`].
pub(crate) struct ConvScratch {
    rows: Vec<Complex64>,
    cols: Vec<Complex64>,
    fft: Vec<Complex64>,
}

/// Aperiodic convolution of an `m × m` block with a Cauchy kernel, computed on
/// a zero-padded `p × p` periodic grid with `p ≥ 2m − 1` so that no wrapped
/// contribution reaches the output block.
pub(crate) struct Convolver {
    m: usize,
    p: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    // kernel spectra stored column-major (transposed), normalization folded in
    dbar_hat_t: Vec<Complex64>,
    d_hat_t: Vec<Complex64>,
}

impl Convolver {
    fn new(m: usize, spacing: f64) -> Self {
        let p = conv_len(m);
        let (fwd, inv) = plan(p);
        let mut kern = vec![Complex64::default(); p * p];
        let lim = m as isize - 1;
        for dy in -lim..=lim {
            for dx in -lim..=lim {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let w = Complex64::new(dx as f64, dy as f64);
                let mut v = spacing / (std::f64::consts::PI * w);
                if dx.abs() + dy.abs() == 1 {
                    // singular-cell correction −(h²/π)∂f as a central difference
                    v *= 1.25;
                }
                let r = dy.rem_euclid(p as isize) as usize;
                let c = dx.rem_euclid(p as isize) as usize;
                kern[r * p + c] = v;
            }
        }
        let mut conj_kern: Vec<Complex64> = kern.iter().map(|v| v.conj()).collect();
        let f2 = Fft2 { n: p, fwd: fwd.clone(), inv: inv.clone() };
        f2.forward(&mut kern);
        f2.forward(&mut conj_kern);
        let norm = 1.0 / (p * p) as f64;
        let mut dbar_hat_t = vec![Complex64::default(); p * p];
        let mut d_hat_t = vec![Complex64::default(); p * p];
        transpose(&kern, &mut dbar_hat_t, p, p);
        transpose(&conj_kern, &mut d_hat_t, p, p);
        dbar_hat_t.iter_mut().for_each(|v| *v *= norm);
        d_hat_t.iter_mut().for_each(|v| *v *= norm);
        Convolver { m, p, fwd, inv, dbar_hat_t, d_hat_t }
    }

    pub(crate) fn side(&self) -> usize {
        self.m
    }

    pub(crate) fn scratch(&self) -> ConvScratch {
        let p = self.p;
        let len = self.fwd.get_inplace_scratch_len().max(self.inv.get_inplace_scratch_len());
        ConvScratch {
            rows: vec![Complex64::default(); self.m * p],
            cols: vec![Complex64::default(); TILE * p],
            fft: vec![Complex64::default(); len],
        }
    }

    /// `out = K * input` on the `m × m` block.
    pub(crate) fn apply(
        &self,
        kernel: Kernel,
        input: &[Complex64],
        out: &mut [Complex64],
        ws: &mut ConvScratch,
    ) {
        let (m, p) = (self.m, self.p);
        debug_assert_eq!(input.len(), m * m);
        debug_assert_eq!(out.len(), m * m);
        let zero = Complex64::default();

        // rows: only the m nonzero rows are transformed
        for r in 0..m {
            let row = &mut ws.rows[r * p..(r + 1) * p];
            row[..m].copy_from_slice(&input[r * m..(r + 1) * m]);
            row[m..].fill(zero);
        }
        self.fwd.process_with_scratch(&mut ws.rows, &mut ws.fft);

        // columns, a tile at a time: rows m..p of the padded array are zero and
        // only output rows 0..m are kept
        let spectrum = match kernel {
            Kernel::DbarInv => &self.dbar_hat_t,
            Kernel::DInv => &self.d_hat_t,
        };
        for c0 in (0..p).step_by(TILE) {
            let width = TILE.min(p - c0);
            let tile = &mut ws.cols[..width * p];
            for (t, col) in tile.chunks_mut(p).enumerate() {
                let c = c0 + t;
                for r in 0..m {
                    col[r] = ws.rows[r * p + c];
                }
                col[m..].fill(zero);
            }
            self.fwd.process_with_scratch(tile, &mut ws.fft);
            tile.iter_mut().zip(&spectrum[c0 * p..(c0 + width) * p]).for_each(|(v, k)| *v *= k);
            self.inv.process_with_scratch(tile, &mut ws.fft);
            for (t, col) in tile.chunks(p).enumerate() {
                let c = c0 + t;
                for r in 0..m {
                    ws.rows[r * p + c] = col[r];
                }
            }
        }
        self.inv.process_with_scratch(&mut ws.rows, &mut ws.fft);
        for r in 0..m {
            out[r * m..(r + 1) * m].copy_from_slice(&ws.rows[r * p..r * p + m]);
        }
    }
}

static CONVOLVERS: Lazy<Mutex<HashMap<(usize, u64), Arc<Convolver>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Shared convolver for an `m × m` block with lattice spacing `spacing`.
pub(crate) fn convolver(m: usize, spacing: f64) -> Arc<Convolver> {
    let key = (m, spacing.to_bits());
    if let Some(c) = CONVOLVERS.lock().unwrap().get(&key) {
        return c.clone();
    }
    let built = Arc::new(Convolver::new(m, spacing));
    CONVOLVERS.lock().unwrap().entry(key).or_insert(built).clone()
}

/// `out[j] = Σₙ x[n] exp(i β n j)` for `n < len_in`, `j < len_out`, computed
/// as a chirp convolution (Bluestein).
pub(crate) struct Chirp {
    len_in: usize,
    len_out: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    kernel_hat: Vec<Complex64>,
}

impl Chirp {
    pub(crate) fn new(len_in: usize, len_out: usize, beta: f64) -> Self {
        let p = fast_len(len_in + len_out - 1);
        let (fwd, inv) = plan(p);
        let chirp = |d: isize| Complex64::from_polar(1.0, 0.5 * beta * (d * d) as f64);
        let pre = (0..len_in as isize).map(chirp).collect();
        let post = (0..len_out as isize).map(chirp).collect();
        let mut kernel_hat = vec![Complex64::default(); p];
        for d in -(len_in as isize - 1)..len_out as isize {
            kernel_hat[d.rem_euclid(p as isize) as usize] = chirp(d).conj();
        }
        fwd.process(&mut kernel_hat);
        let norm = 1.0 / p as f64;
        kernel_hat.iter_mut().for_each(|v| *v *= norm);
        Chirp { len_in, len_out, fwd, inv, pre, post, kernel_hat }
    }

    pub(crate) fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        let p = self.kernel_hat.len();
        let mut buf = vec![Complex64::default(); p];
        for ((b, xi), c) in buf.iter_mut().zip(x).zip(&self.pre) {
            *b = xi * c;
        }
        self.fwd.process(&mut buf);
        buf.iter_mut().zip(&self.kernel_hat).for_each(|(b, k)| *b *= k);
        self.inv.process(&mut buf);
        for ((o, b), c) in out[..self.len_out].iter_mut().zip(&buf).zip(&self.post) {
            *o = b * c;
        }
        debug_assert_eq!(x.len(), self.len_in);
    }
}
