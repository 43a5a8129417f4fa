//! Scattering on the imaginary square barrier `−iV` on `[a, a + L]` and the
//! photon detection rate it produces.
//!
//! Inside the barrier (coordinates shifted so that it starts at 0) the
//! stationary state for an incident plane wave e^{ikx}/√(2π) is
//!
//! ```text
//! φ_k(x) = (A₊ e^{iqx} + A₋ e^{−iqx}) / √(2π),   q² = k² + 2iV,  Im q > 0
//! A±     = k (q ± k) e^{∓iqL} / (2kq cos qL − i(k² + q²) sin qL)
//! ```
//!
//! `Im(q)·L` reaches several hundred for strong barriers, so everything is
//! rewritten with exponentials e^{iq·s}, s ≥ 0, whose magnitude is at most
//! one: `D̂ = D e^{iqL} = kq(1 + e^{2iqL}) − (k² + q²)(e^{2iqL} − 1)/2`,
//! `A₊ = k(q + k)/D̂` and `A₋ e^{−iqx} = B e^{iq(2L − x)}` with
//! `B = k(q − k)/D̂`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{trapezoid, TimeGrid, TimeSeries};
use crate::quadform::HermitianForm;
use crate::wavepacket::WavePacket;

/// Smallest |D̂| accepted before the solve is declared singular.
pub const SINGULAR_DENOMINATOR: f64 = 1e-30;

/// Imaginary square barrier, solver units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSpec {
    pub height: f64,
    pub length: f64,
    pub offset: f64,
}

impl BarrierSpec {
    pub fn new(height: f64, length: f64, offset: f64) -> Result<Self> {
        if !(height.is_finite() && height > 0.0) {
            return Err(invalid("V", format!("barrier height must be > 0, got {height}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(invalid("L", format!("barrier length must be > 0, got {length}")));
        }
        if !offset.is_finite() {
            return Err(invalid("offset", "must be finite"));
        }
        Ok(BarrierSpec {
            height,
            length,
            offset,
        })
    }
}

/// Per-k barrier wavenumber and amplitudes on the packet's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSolution {
    pub k: Vec<f64>,
    pub q: Vec<Complex64>,
    pub a_plus: Vec<Complex64>,
    /// A₋ itself; underflows to zero for opaque barriers.
    pub a_minus: Vec<Complex64>,
    /// B = A₋ e^{−2iqL}, the overflow-safe form used for integrals.
    pub b: Vec<Complex64>,
    /// |D̂| per k.
    pub denominator: Vec<f64>,
    barrier: BarrierSpec,
}

/// Principal root with the decaying branch, Im q > 0.
pub fn barrier_wavenumber(k: f64, height: f64) -> Complex64 {
    let q = Complex64::new(k * k, 2.0 * height).sqrt();
    if q.im < 0.0 {
        -q
    } else {
        q
    }
}

/// `(A₊, B, |D̂|)` for one wavenumber.
fn coefficients(k: f64, q: Complex64, length: f64) -> Result<(Complex64, Complex64, f64)> {
    let e2 = (Complex64::i() * q * (2.0 * length)).exp();
    let d = k * q * (e2 + 1.0) - (q * q + k * k) * (e2 - 1.0) * 0.5;
    let magnitude = d.norm();
    if !(magnitude >= SINGULAR_DENOMINATOR) {
        return Err(Error::Singular { k, magnitude });
    }
    Ok((k * (q + k) / d, k * (q - k) / d, magnitude))
}

pub fn solve_barrier(packet: &WavePacket, barrier: &BarrierSpec) -> Result<ScatteringSolution> {
    let ks = packet.wavenumbers().to_vec();
    let n = ks.len();
    let (mut q, mut a_plus, mut a_minus, mut b, mut denominator) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for &k in &ks {
        let qk = barrier_wavenumber(k, barrier.height);
        let (ap, bk, d) = coefficients(k, qk, barrier.length)?;
        q.push(qk);
        a_plus.push(ap);
        a_minus.push(bk * (Complex64::i() * qk * (2.0 * barrier.length)).exp());
        b.push(bk);
        denominator.push(d);
    }
    Ok(ScatteringSolution {
        k: ks,
        q,
        a_plus,
        a_minus,
        b,
        denominator,
        barrier: *barrier,
    })
}

/// (e^{z} − 1) accurate for small |z|.
fn exp_m1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        z * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0)))
    } else {
        z.exp() - 1.0
    }
}

/// ∫₀^L e^{iαx} dx.
fn segment_integral(alpha: Complex64, length: f64) -> Complex64 {
    let z = Complex64::i() * alpha * length;
    if z.norm() < 1e-12 {
        Complex64::new(length, 0.0)
    } else {
        exp_m1(z) / (Complex64::i() * alpha)
    }
}

impl ScatteringSolution {
    /// Overlap matrix `M_jl = (2π)⁻¹ ∫₀^L φ_j*(x) φ_l(x) dx` in closed form.
    fn overlap_form(&self, scale: f64) -> HermitianForm {
        let length = self.barrier.length;
        let i = Complex64::i();
        // e^{iqL}, |·| ≤ 1
        let u: Vec<Complex64> = self.q.iter().map(|&q| (i * q * length).exp()).collect();
        let factor = scale / (2.0 * PI);
        HermitianForm::from_upper(self.k.len(), |j, l| {
            let (qj, ql) = (self.q[j], self.q[l]);
            let (aj, al) = (self.a_plus[j].conj(), self.a_plus[l]);
            let (bj, bl) = (self.b[j].conj(), self.b[l]);
            let alpha = ql - qj.conj();
            let beta = qj.conj() + ql;
            let e_alpha = u[l] * u[j].conj();
            let e_2l = u[l] * u[l];
            let e_2j = (u[j] * u[j]).conj();
            let seg = segment_integral(alpha, length);
            // ∫ e^{-iq̄_j x} e^{iq_l x}
            let i_aa = seg;
            // ∫ e^{-iq̄_j(2L-x)} e^{iq_l(2L-x)}
            let i_bb = e_alpha * seg;
            // ∫ e^{-iq̄_j x} e^{iq_l(2L-x)}
            let i_ab = if (beta * length).norm() < 1e-12 {
                e_2l * length
            } else {
                (e_alpha - e_2l) / (-i * beta)
            };
            // ∫ e^{-iq̄_j(2L-x)} e^{iq_l x}
            let i_ba = if (beta * length).norm() < 1e-12 {
                e_2j * length
            } else {
                (e_alpha - e_2j) / (i * beta)
            };
            (aj * al * i_aa + bj * bl * i_bb + aj * bl * i_ab + bj * al * i_ba) * factor
        })
    }

    /// Probability absorbed from a unit-flux plane wave e^{ikx}:
    /// `(2V/k) ∫₀^L |A₊e^{iqx} + B e^{iq(2L−x)}|² dx`.
    pub fn absorption_probability(&self, j: usize) -> f64 {
        let form = ScatteringSolution {
            k: vec![self.k[j]],
            q: vec![self.q[j]],
            a_plus: vec![self.a_plus[j]],
            a_minus: vec![self.a_minus[j]],
            b: vec![self.b[j]],
            denominator: vec![self.denominator[j]],
            barrier: self.barrier,
        }
        .overlap_form(2.0 * PI);
        2.0 * self.barrier.height / self.k[j] * form.evaluate(&[Complex64::new(1.0, 0.0)], &[0.0], &[0.0])[0]
    }
}

/// Largest beat frequency (k_max² − k_min²)/2 over the packet's support.
fn beat_frequency(packet: &WavePacket) -> f64 {
    let amp = packet.amplitude();
    let peak = amp.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let ks = packet.wavenumbers();
    let live: Vec<f64> = ks
        .iter()
        .zip(amp)
        .filter(|(_, a)| a.norm() > 1e-8 * peak)
        .map(|(&k, _)| k)
        .collect();
    match (live.first(), live.last()) {
        (Some(lo), Some(hi)) => 0.5 * (hi * hi - lo * lo),
        _ => 0.0,
    }
}

/// Returns a message when the time step cannot resolve the fastest beat of
/// the packet's momentum components.
pub fn beat_resolution_warning(packet: &WavePacket, tgrid: &TimeGrid) -> Option<String> {
    let omega = beat_frequency(packet);
    let nyquist = std::f64::consts::PI / tgrid.step();
    (omega > nyquist).then(|| {
        format!(
            "time step {:.3e} under-resolves the beat frequency {omega:.3e} (Nyquist {nyquist:.3e})",
            tgrid.step()
        )
    })
}

/// Π(t) = (2V/ħ) ∫_a^{a+L} |ψ(x, t)|² dx for the packet scattered by the
/// barrier, with the x-integral done in closed form for each (k, k′).
pub fn detection_rate(packet: &WavePacket, barrier: &BarrierSpec, tgrid: &TimeGrid) -> Result<TimeSeries> {
    if let Some(msg) = beat_resolution_warning(packet, tgrid) {
        log::warn!("detection_rate: {msg}");
    }
    let local = packet.shifted(-barrier.offset);
    let solution = solve_barrier(&local, barrier)?;
    let form = solution.overlap_form(2.0 * barrier.height);
    let weights = local.grid().weights();
    let coeffs: Vec<Complex64> = local.amplitude().iter().zip(&weights).map(|(a, w)| a * *w).collect();
    let k2: Vec<f64> = local.wavenumbers().iter().map(|k| k * k).collect();
    let values = form.evaluate(&coeffs, &k2, &tgrid.points());
    TimeSeries::new(*tgrid, values)
}

/// Π_N = Π / ∫Π dt.
pub fn normalized_rate(rate: &TimeSeries) -> Result<TimeSeries> {
    let total = crate::grid::trapezoid_integral(rate)?;
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::ZeroTotal(total));
    }
    Ok(rate.scaled(1.0 / total))
}

/// Large-V limit of Π_N: `(ħ/2πm k₀) |∫ dk k ψ̃(k) e^{ika − iħk²t/2m}|²`,
/// identical to `(2/p₀)⟨τ1(a)⟩_t`.
pub fn large_v_rate(packet: &WavePacket, offset: f64, tgrid: &TimeGrid) -> Result<TimeSeries> {
    let k0 = packet.p0();
    let values = tgrid
        .points()
        .into_par_iter()
        .map(|t| {
            packet.check_window(offset, t)?;
            Ok(packet.weighted_value(offset, t, |k| k).norm_sqr() / k0)
        })
        .collect::<Result<Vec<f64>>>()?;
    TimeSeries::new(*tgrid, values)
}

/// `2ħk₀ (mV)^{-1/2}`, the large-V total absorption probability.
pub fn large_v_total(packet: &WavePacket, height: f64) -> f64 {
    2.0 * packet.p0() / height.sqrt()
}

/// Total absorbed probability `∫|ψ̃|² P_abs(k) dk` from the per-k solution.
pub fn absorbed_fraction(packet: &WavePacket, barrier: &BarrierSpec) -> Result<f64> {
    let solution = solve_barrier(&packet.shifted(-barrier.offset), barrier)?;
    let density: Vec<f64> = packet
        .amplitude()
        .iter()
        .enumerate()
        .map(|(j, a)| a.norm_sqr() * solution.absorption_probability(j))
        .collect();
    Ok(trapezoid(&density, packet.grid().spacing()))
}
