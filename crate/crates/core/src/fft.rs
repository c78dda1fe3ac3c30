//! Cube FFTs on contiguous `n³` blocks with centered index layout.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

#[derive(Clone)]
pub(crate) struct CubeFft {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl CubeFft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    /// Unnormalized transform with `e^{-2πi jk/n}` kernel, natural FFT ordering.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.fwd);
    }

    /// Unnormalized transform with `e^{+2πi jk/n}` kernel, natural FFT ordering.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.inv);
    }

    /// Transform between centered layouts (index `i` ↔ signed index `i - n/2`).
    pub fn forward_centered(&self, buf: &mut [Complex64]) {
        self.recenter(buf);
        self.forward(buf);
        self.recenter(buf);
    }

    pub fn inverse_centered(&self, buf: &mut [Complex64]) {
        self.recenter(buf);
        self.inverse(buf);
        self.recenter(buf);
    }

    /// Rotates every axis by n/2; an involution for even n.
    pub fn recenter(&self, buf: &mut [Complex64]) {
        let n = self.n;
        let h = n / 2;
        let tmp = buf.to_vec();
        for a in 0..n {
            let ra = (a + h) % n;
            for b in 0..n {
                let rb = (b + h) % n;
                let src = (a * n + b) * n;
                let dst = (ra * n + rb) * n;
                for c in 0..n {
                    buf[dst + (c + h) % n] = tmp[src + c];
                }
            }
        }
    }

    fn run(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        debug_assert_eq!(buf.len(), n * n * n);
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        let mut line = vec![Complex64::default(); n];
        for a in 0..n {
            for c in 0..n {
                for b in 0..n {
                    line[b] = buf[(a * n + b) * n + c];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for b in 0..n {
                    buf[(a * n + b) * n + c] = line[b];
                }
            }
        }
        for b in 0..n {
            for c in 0..n {
                for a in 0..n {
                    line[a] = buf[(a * n + b) * n + c];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for a in 0..n {
                    buf[(a * n + b) * n + c] = line[a];
                }
            }
        }
    }
}

/// Signed FFT frequency index for position `m` of an `n`-point transform.
/// The Nyquist slot maps to `-n/2`.
pub(crate) fn signed_index(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity_up_to_volume() {
        let n = 8;
        let fft = CubeFft::new(n);
        let orig: Vec<Complex64> = (0..n * n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut buf = orig.clone();
        fft.forward_centered(&mut buf);
        fft.inverse_centered(&mut buf);
        let scale = (n * n * n) as f64;
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a / scale - b).norm() < 1e-13);
        }
    }

    #[test]
    fn single_mode_lands_on_its_bin() {
        let n = 8;
        let fft = CubeFft::new(n);
        let mut buf = vec![Complex64::default(); n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let ph = 2.0 * std::f64::consts::PI * (a as f64 * 2.0 + c as f64) / n as f64;
                    buf[(a * n + b) * n + c] = Complex64::from_polar(1.0, ph);
                }
            }
        }
        fft.forward(&mut buf);
        let peak = (2 * n) * n + 1;
        assert!((buf[peak].re - (n * n * n) as f64).abs() < 1e-9);
        let rest: f64 = buf.iter().enumerate().filter(|(i, _)| *i != peak).map(|(_, z)| z.norm()).sum();
        assert!(rest < 1e-9);
    }
}
