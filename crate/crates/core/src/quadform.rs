//! Time series of Hermitian quadratic forms
//!
//! ```text
//! f(t) = Re Σ_jl conj(c_j(t)) H_jl c_l(t),   c_j(t) = c_j exp(−i k_j² t / 2)
//! ```
//!
//! which is the shape of every double (k, k′) integral in the detection
//! rates. With `H = Hr + i Hi` (Hr symmetric, Hi antisymmetric) and
//! `c = a + i b`, the real part is `aᵀHr a + bᵀHr b − 2 aᵀHi b`, so a block
//! of times costs two real matrix products.

use num_complex::Complex64;

/// Hermitian matrix stored as separate real and imaginary row-major parts.
#[derive(Debug, Clone)]
pub(crate) struct HermitianForm {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Columns per block of times; bounds the scratch memory.
const BLOCK: usize = 256;

impl HermitianForm {
    /// Fills `H_jl = entry(j, l)` for `j ≤ l` and mirrors the rest.
    pub fn from_upper(n: usize, entry: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut re = vec![0.0; n * n];
        let mut im = vec![0.0; n * n];
        for j in 0..n {
            let d = entry(j, j);
            re[j * n + j] = d.re;
            for l in j + 1..n {
                let h = entry(j, l);
                re[j * n + l] = h.re;
                im[j * n + l] = h.im;
                re[l * n + j] = h.re;
                im[l * n + j] = -h.im;
            }
        }
        HermitianForm { n, re, im }
    }

    #[cfg(test)]
    pub fn entry(&self, j: usize, l: usize) -> Complex64 {
        Complex64::new(self.re[j * self.n + l], self.im[j * self.n + l])
    }

    /// Evaluates the form at every time in `times`.
    pub fn evaluate(&self, coeffs: &[Complex64], k2: &[f64], times: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(coeffs.len(), n);
        assert_eq!(k2.len(), n);
        let mut out = Vec::with_capacity(times.len());
        let mut ab = vec![0.0; n * 2 * BLOCK];
        let mut hab = vec![0.0; n * 2 * BLOCK];
        let mut hib = vec![0.0; n * BLOCK];
        for block in times.chunks(BLOCK) {
            let m = block.len();
            let w = 2 * m;
            // row j: [a_j(t_0..t_m) | b_j(t_0..t_m)]
            for j in 0..n {
                let row = &mut ab[j * w..(j + 1) * w];
                for (i, &t) in block.iter().enumerate() {
                    let c = coeffs[j] * Complex64::from_polar(1.0, -0.5 * k2[j] * t);
                    row[i] = c.re;
                    row[m + i] = c.im;
                }
            }
            // SAFETY: every pointer addresses a live buffer of at least the
            // extent described by its dimensions and strides.
            unsafe {
                matrixmultiply::dgemm(
                    n,
                    n,
                    w,
                    1.0,
                    self.re.as_ptr(),
                    n as isize,
                    1,
                    ab.as_ptr(),
                    w as isize,
                    1,
                    0.0,
                    hab.as_mut_ptr(),
                    w as isize,
                    1,
                );
                matrixmultiply::dgemm(
                    n,
                    n,
                    m,
                    1.0,
                    self.im.as_ptr(),
                    n as isize,
                    1,
                    ab.as_ptr().add(m),
                    w as isize,
                    1,
                    0.0,
                    hib.as_mut_ptr(),
                    m as isize,
                    1,
                );
            }
            let mut acc = vec![0.0; m];
            for j in 0..n {
                let x = &ab[j * w..(j + 1) * w];
                let hx = &hab[j * w..(j + 1) * w];
                let hb = &hib[j * m..(j + 1) * m];
                for i in 0..m {
                    acc[i] += x[i] * hx[i] + x[m + i] * hx[m + i] - 2.0 * x[i] * hb[i];
                }
            }
            out.extend(acc);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct complex evaluation, kept separate from the real-GEMM path.
    fn brute_force(h: &HermitianForm, coeffs: &[Complex64], k2: &[f64], t: f64) -> Complex64 {
        let n = coeffs.len();
        let c: Vec<Complex64> = (0..n)
            .map(|j| coeffs[j] * Complex64::from_polar(1.0, -0.5 * k2[j] * t))
            .collect();
        let mut sum = Complex64::default();
        for j in 0..n {
            for l in 0..n {
                sum += c[j].conj() * h.entry(j, l) * c[l];
            }
        }
        sum
    }

    #[test]
    fn matches_direct_complex_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 37;
        let raw: Vec<Complex64> = (0..n * n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let h = HermitianForm::from_upper(n, |j, l| {
            if j == l {
                Complex64::new(raw[j * n + l].re, 0.0)
            } else {
                raw[j * n + l]
            }
        });
        let coeffs: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let k2: Vec<f64> = (0..n).map(|j| (0.3 * j as f64).powi(2)).collect();
        let times: Vec<f64> = (0..600).map(|i| -3.0 + 0.01 * i as f64).collect();
        let fast = h.evaluate(&coeffs, &k2, &times);
        for (i, &t) in times.iter().enumerate().step_by(37) {
            let exact = brute_force(&h, &coeffs, &k2, t);
            // Hermitian form: imaginary part is rounding only
            assert!(exact.im.abs() < 1e-12 * exact.norm().max(1.0));
            assert!((fast[i] - exact.re).abs() < 1e-11 * exact.norm().max(1.0), "t = {t}");
        }
    }
}
