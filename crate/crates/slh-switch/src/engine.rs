//! Fixed-step RK4 integrator for the hierarchy equations.
//!
//! All stored labels advance simultaneously as one stacked system (exact,
//! because the hierarchy couples lower-triangularly), with the integrated
//! channel fluxes carried as extra state so they accumulate inside the same
//! RK4 stages. Integration is segmented at every schedule breakpoint and
//! pulse arrival so that no stage straddles a discontinuity: within a
//! segment the rates are the segment constants and the wavepackets are
//! evaluated on the open (rising) branch, with the closing stage taking the
//! left limit.
//!
//! The coupling and hopping operators are ladder-structured, so the kernels
//! below apply them in coordinate form instead of forming dense products;
//! [`crate::hierarchy::rhs`] is the dense reference these kernels are tested
//! against.

use num_complex::Complex64 as C64;

use crate::error::{Result, SwitchError};
use crate::hierarchy::{
    build_labels, canonical_labels, HierarchyState, OccupancyLabel, Scenario,
};
use crate::model::{xi_rising, Variant};
use crate::observables::FluxSample;
use crate::operator::Operator;

/// Per-step ceiling on any label's max-norm; beyond this the run aborts
/// with a divergence error.
const DIVERGENCE_CEILING: f64 = 1e3;

/// Extra integration controls, mainly for validation tests.
#[derive(Clone, Debug, Default)]
pub struct EngineOptions {
    /// Drop the drive terms feeding this label (structural testing hook:
    /// the hierarchy is lower-triangular, so only labels above it change).
    pub disable_sources_into: Option<OccupancyLabel>,
}

/// Result of one integration run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Decimated time series (always includes t = 0 and t = T_end).
    pub samples: Vec<FluxSample>,
    /// Hierarchy state at T_end.
    pub final_state: HierarchyState,
    /// Integrated fluxes Φ₁, Φ₂, Φ₃ at T_end (from the in-stage accumulators).
    pub integrated: [f64; 3],
    /// Total outgoing rate Σᵢ φᵢ(T_end): the steady-state residual.
    pub residual: f64,
    /// Whether the residual is below the scenario threshold.
    pub converged: bool,
    /// max over every step of P₂(t) on the top label.
    pub max_p2: f64,
    pub steps: usize,
    pub horizon: f64,
    pub dt: f64,
}

/// Sparse coordinate form of an operator; only structurally nonzero entries
/// are kept, in deterministic row-major order.
struct SparseOp {
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    fn from_operator(op: &Operator) -> Self {
        let d = op.dim();
        let mut entries = Vec::new();
        for r in 0..d {
            for c in 0..d {
                let v = op.entry(r, c);
                if v != C64::new(0.0, 0.0) {
                    entries.push((r, c, v));
                }
            }
        }
        Self { entries }
    }
}

// out += α A ρ
fn acc_left(alpha: C64, a: &SparseOp, rho: &[C64], out: &mut [C64], d: usize) {
    for &(r, c, v) in &a.entries {
        let w = alpha * v;
        let src = &rho[c * d..(c + 1) * d];
        let dst = &mut out[r * d..(r + 1) * d];
        for (o, s) in dst.iter_mut().zip(src) {
            *o += w * s;
        }
    }
}

// out += α A† ρ
fn acc_left_dag(alpha: C64, a: &SparseOp, rho: &[C64], out: &mut [C64], d: usize) {
    for &(r, c, v) in &a.entries {
        let w = alpha * v.conj();
        let src = &rho[r * d..(r + 1) * d];
        let dst = &mut out[c * d..(c + 1) * d];
        for (o, s) in dst.iter_mut().zip(src) {
            *o += w * s;
        }
    }
}

// out += α ρ A
fn acc_right(alpha: C64, rho: &[C64], a: &SparseOp, out: &mut [C64], d: usize) {
    for &(r, c, v) in &a.entries {
        let w = alpha * v;
        for i in 0..d {
            out[i * d + c] += w * rho[i * d + r];
        }
    }
}

// out += α ρ A†
fn acc_right_dag(alpha: C64, rho: &[C64], a: &SparseOp, out: &mut [C64], d: usize) {
    for &(r, c, v) in &a.entries {
        let w = alpha * v.conj();
        for i in 0..d {
            out[i * d + r] += w * rho[i * d + c];
        }
    }
}

// out += α A ρ A†
fn acc_sandwich(alpha: f64, a: &SparseOp, rho: &[C64], out: &mut [C64], d: usize) {
    for &(r1, c1, v1) in &a.entries {
        for &(r2, c2, v2) in &a.entries {
            out[r1 * d + r2] += alpha * v1 * v2.conj() * rho[c1 * d + c2];
        }
    }
}

/// Stacked integration state: all label matrices plus the flux integrals.
#[derive(Clone)]
struct StateVec {
    mats: Vec<C64>,
    flux: [f64; 3],
}

impl StateVec {
    fn zeros(len: usize) -> Self {
        Self {
            mats: vec![C64::new(0.0, 0.0); len],
            flux: [0.0; 3],
        }
    }

    fn set_zero(&mut self) {
        self.mats.fill(C64::new(0.0, 0.0));
        self.flux = [0.0; 3];
    }

    // self = base + a * k
    fn assign_step(&mut self, base: &StateVec, a: f64, k: &StateVec) {
        for ((dst, &b), &kk) in self.mats.iter_mut().zip(&base.mats).zip(&k.mats) {
            *dst = b + kk * a;
        }
        for i in 0..3 {
            self.flux[i] = base.flux[i] + a * k.flux[i];
        }
    }

    // self += (h/6)(k1 + 2 k2 + 2 k3 + k4)
    fn rk4_accumulate(&mut self, h6: f64, k1: &StateVec, k2: &StateVec, k3: &StateVec, k4: &StateVec) {
        for i in 0..self.mats.len() {
            self.mats[i] +=
                (k1.mats[i] + (k2.mats[i] + k3.mats[i]) * 2.0 + k4.mats[i]) * h6;
        }
        for i in 0..3 {
            self.flux[i] += h6 * (k1.flux[i] + 2.0 * (k2.flux[i] + k3.flux[i]) + k4.flux[i]);
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Side {
    Ket,
    Bra,
}

/// A drive term of one label's equation: the channel it comes through, which
/// side of the label is decremented, and where the lower operator lives.
struct Source {
    channel: usize,
    side: Side,
    lower: usize,
    lower_conj: bool,
}

/// Label indices needed by the flux formula of an occupied channel.
struct FluxRefs {
    /// (S, S − eᵢ): bra-decremented top label.
    dec_bra: usize,
    /// (S − eᵢ, S − eᵢ): doubly decremented diagonal label.
    dec_diag: usize,
}

/// Integration segment between two discontinuities, with the constant rates
/// and pulse-branch activity holding throughout it.
struct Segment {
    t0: f64,
    t1: f64,
    gammas: [f64; 3],
    /// Pulse rising-branch activity for (signal, control).
    xi_on: [bool; 2],
}

/// Scenario compiled into sparse kernels and resolved label references.
struct Compiled<'a> {
    scenario: &'a Scenario,
    d: usize,
    labels: Vec<OccupancyLabel>,
    chan: [SparseOp; 3],
    /// Diagonals of cᵢ†cᵢ (they are number-like, hence diagonal).
    chan_norm_diag: [Vec<f64>; 3],
    /// Static Hamiltonian diagonal −Δ_s n₁ − Δ_c σ₊σ₋ (+ 0 for cavity 2).
    h_diag: Vec<f64>,
    /// a₁σ₊ with unit coefficient.
    jc: SparseOp,
    /// a₁†a₂ with unit coefficient (variant B).
    hop: Option<SparseOp>,
    g: f64,
    j: f64,
    delta_sc: f64,
    sources: Vec<Vec<Source>>,
    flux_refs: [Option<FluxRefs>; 3],
    top_idx: usize,
    /// Flattened diagonal indices contributing to P₁ₑ and P₂g.
    p1e_idx: Vec<usize>,
    p2g_idx: Vec<usize>,
}

impl<'a> Compiled<'a> {
    fn new(scenario: &'a Scenario, options: &EngineOptions) -> Result<Self> {
        let spec = &scenario.spec;
        let sig = spec.signature();
        let d = sig.dim();

        let labels = if scenario.full_label_set {
            build_labels(scenario)
        } else {
            canonical_labels(scenario)
        };
        let find = |l: OccupancyLabel| labels.iter().position(|&x| x == l);
        let resolve = |l: OccupancyLabel| -> Result<(usize, bool)> {
            if let Some(i) = find(l) {
                Ok((i, false))
            } else if let Some(i) = find(l.conjugate()) {
                Ok((i, true))
            } else {
                Err(SwitchError::MissingLowerLabel(
                    "compile".into(),
                    l.to_string(),
                ))
            }
        };

        let chan = [0, 1, 2].map(|ch| SparseOp::from_operator(&spec.channel_op(ch)));
        let chan_norm_diag = [0, 1, 2].map(|ch| {
            let c = spec.channel_op(ch);
            let cc = &c.dagger() * &c;
            (0..d).map(|k| cc.entry(k, k).re).collect::<Vec<f64>>()
        });

        let a1 = spec.a1();
        let sm = spec.sigma_minus();
        let n1 = &a1.dagger() * &a1;
        let nq = &sm.dagger() * &sm;
        let h_diag: Vec<f64> = (0..d)
            .map(|k| {
                -spec.rates.delta_s * n1.entry(k, k).re - spec.rates.delta_c * nq.entry(k, k).re
            })
            .collect();
        let jc = SparseOp::from_operator(&(&a1 * &sm.dagger()));
        let hop = match spec.variant {
            Variant::A => None,
            Variant::B => Some(SparseOp::from_operator(
                &(&a1.dagger() * &spec.a2().unwrap()),
            )),
        };

        let mut sources = Vec::with_capacity(labels.len());
        for &label in &labels {
            let mut terms = Vec::new();
            if options.disable_sources_into != Some(label) {
                for ch in [0usize, 2] {
                    if let Some(lower) = label.decrement_m(ch) {
                        let (idx, conj) = resolve(lower)?;
                        terms.push(Source {
                            channel: ch,
                            side: Side::Ket,
                            lower: idx,
                            lower_conj: conj,
                        });
                    }
                    if let Some(lower) = label.decrement_n(ch) {
                        let (idx, conj) = resolve(lower)?;
                        terms.push(Source {
                            channel: ch,
                            side: Side::Bra,
                            lower: idx,
                            lower_conj: conj,
                        });
                    }
                }
            }
            sources.push(terms);
        }

        let top = scenario.top_label();
        let top_idx = find(top).expect("top label is stored");
        let mut flux_refs: [Option<FluxRefs>; 3] = [None, None, None];
        for ch in [0usize, 2] {
            if top.m[ch] == 1 {
                let dec_bra_label = top.decrement_n(ch).unwrap();
                let dec_diag_label = dec_bra_label.decrement_m(ch).unwrap();
                let (dec_bra, conj) = resolve(dec_bra_label)?;
                debug_assert!(!conj, "(S, S-e) is canonical");
                let (dec_diag, conj) = resolve(dec_diag_label)?;
                debug_assert!(!conj, "diagonal labels are canonical");
                flux_refs[ch] = Some(FluxRefs { dec_bra, dec_diag });
            }
        }

        let cav2_dim = if spec.variant == Variant::B {
            spec.cutoff_cavity2 + 1
        } else {
            1
        };
        let mut p1e_idx = Vec::new();
        let mut p2g_idx = Vec::new();
        if spec.cutoff_cavity1 >= 2 {
            for k in 0..cav2_dim {
                let (i1e, i2g) = if spec.variant == Variant::B {
                    (sig.flatten(&[1, 1, k])?, sig.flatten(&[2, 0, k])?)
                } else {
                    (sig.flatten(&[1, 1])?, sig.flatten(&[2, 0])?)
                };
                p1e_idx.push(i1e * d + i1e);
                p2g_idx.push(i2g * d + i2g);
            }
        }

        Ok(Self {
            scenario,
            d,
            labels,
            chan,
            chan_norm_diag,
            h_diag,
            jc,
            hop,
            g: spec.rates.g,
            j: spec.rates.j,
            delta_sc: spec.rates.delta_sc(),
            sources,
            flux_refs,
            top_idx,
            p1e_idx,
            p2g_idx,
        })
    }

    fn dd(&self) -> usize {
        self.d * self.d
    }

    /// Diagonal of M = −iH_static − ½Σᵢ γᵢ cᵢ†cᵢ for one segment.
    fn drift_diag(&self, gammas: &[f64; 3]) -> Vec<C64> {
        (0..self.d)
            .map(|k| {
                let damp: f64 = (0..3)
                    .map(|i| gammas[i] * self.chan_norm_diag[i][k])
                    .sum();
                C64::new(-0.5 * damp, -self.h_diag[k])
            })
            .collect()
    }

    /// Complex pulse amplitude on an input channel at a stage time, on the
    /// segment's branch of the wavepacket.
    fn stage_xi(&self, channel: usize, t: f64, seg: &Segment) -> C64 {
        let (pulse, on) = match channel {
            0 => (&self.scenario.spec.signal, seg.xi_on[0]),
            2 => (&self.scenario.spec.control, seg.xi_on[1]),
            _ => unreachable!("channel 2 carries no pulse"),
        };
        if !on {
            return C64::new(0.0, 0.0);
        }
        C64::from_polar(xi_rising(pulse, t), pulse.phase)
    }

    /// Full right-hand side at a stage: derivative of every label matrix and
    /// the three flux rates, written into `out`.
    fn eval_rhs(
        &self,
        t: f64,
        seg: &Segment,
        diag: &[C64],
        y: &StateVec,
        out: &mut StateVec,
        scratch: &mut [C64],
    ) {
        out.set_zero();
        let d = self.d;
        let dd = self.dd();

        // Stage-dependent coefficients of the off-diagonal Hamiltonian parts.
        let phase = C64::from_polar(1.0, -self.delta_sc * t);
        let minus_i = C64::new(0.0, -1.0);
        let c_jc = minus_i * self.g * phase; // on a₁σ₊
        let c_jcd = minus_i * self.g * phase.conj(); // on (a₁σ₊)†
        let c_hop = minus_i * self.j;

        let sqrt_g: [f64; 3] = [
            seg.gammas[0].sqrt(),
            seg.gammas[1].sqrt(),
            seg.gammas[2].sqrt(),
        ];
        let xi_vals: [C64; 2] = [self.stage_xi(0, t, seg), self.stage_xi(2, t, seg)];

        for li in 0..self.labels.len() {
            let rho = &y.mats[li * dd..(li + 1) * dd];
            let o = &mut out.mats[li * dd..(li + 1) * dd];

            // Drift: Mρ + ρM† with M = −iH(t) − ½Σγᵢcᵢ†cᵢ.
            for r in 0..d {
                let mr = diag[r];
                for c in 0..d {
                    o[r * d + c] += (mr + diag[c].conj()) * rho[r * d + c];
                }
            }
            acc_left(c_jc, &self.jc, rho, o, d);
            acc_left_dag(c_jcd, &self.jc, rho, o, d);
            acc_right_dag(c_jc.conj(), rho, &self.jc, o, d);
            acc_right(c_jcd.conj(), rho, &self.jc, o, d);
            if let Some(hop) = &self.hop {
                if self.j != 0.0 {
                    acc_left(c_hop, hop, rho, o, d);
                    acc_left_dag(c_hop, hop, rho, o, d);
                    acc_right_dag(c_hop.conj(), rho, hop, o, d);
                    acc_right(c_hop.conj(), rho, hop, o, d);
                }
            }
            // Jump parts of the dissipators.
            for i in 0..3 {
                if seg.gammas[i] > 0.0 {
                    acc_sandwich(seg.gammas[i], &self.chan[i], rho, o, d);
                }
            }
            // Drive terms from decremented labels.
            for s in &self.sources[li] {
                let pidx = if s.channel == 0 { 0 } else { 1 };
                let gam = sqrt_g[s.channel];
                if gam == 0.0 {
                    continue;
                }
                let xi_c = xi_vals[pidx];
                if xi_c == C64::new(0.0, 0.0) {
                    continue;
                }
                let lower = &y.mats[s.lower * dd..(s.lower + 1) * dd];
                let lower: &[C64] = if s.lower_conj {
                    for r in 0..d {
                        for c in 0..d {
                            scratch[r * d + c] = lower[c * d + r].conj();
                        }
                    }
                    &scratch[..dd]
                } else {
                    lower
                };
                let c_op = &self.chan[s.channel];
                match s.side {
                    Side::Ket => {
                        // ξ√γ (ρ_low c† − c† ρ_low)
                        let amp = xi_c * gam;
                        acc_right_dag(amp, lower, c_op, o, d);
                        acc_left_dag(-amp, c_op, lower, o, d);
                    }
                    Side::Bra => {
                        // ξ*√γ (c ρ_low − ρ_low c)
                        let amp = xi_c.conj() * gam;
                        acc_left(amp, c_op, lower, o, d);
                        acc_right(-amp, lower, c_op, o, d);
                    }
                }
            }
        }

        out.flux = self.flux_rates(y, seg.gammas, xi_vals);
    }

    /// Instantaneous flux rates φᵢ at the top label, given the channel
    /// rates and pulse amplitudes in force.
    fn flux_rates(&self, y: &StateVec, gammas: [f64; 3], xi_vals: [C64; 2]) -> [f64; 3] {
        let d = self.d;
        let dd = self.dd();
        let top = &y.mats[self.top_idx * dd..(self.top_idx + 1) * dd];
        let mut flux = [0.0; 3];
        for ch in 0..3 {
            let mut total = C64::new(0.0, 0.0);
            if gammas[ch] > 0.0 {
                // E[L†L] = γ Σ_k conj(ρ[k,k]) (c†c)[k,k]
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..d {
                    let w = self.chan_norm_diag[ch][k];
                    if w != 0.0 {
                        acc += top[k * d + k].conj() * w;
                    }
                }
                total += acc * gammas[ch];
            }
            if let Some(refs) = &self.flux_refs[ch] {
                let pidx = if ch == 0 { 0 } else { 1 };
                let xi_c = xi_vals[pidx];
                if xi_c != C64::new(0.0, 0.0) {
                    let sq = gammas[ch].sqrt();
                    if sq > 0.0 {
                        let dec_bra = &y.mats[refs.dec_bra * dd..(refs.dec_bra + 1) * dd];
                        // √γ ξ E_{(S,S−e)}[c†] = √γ ξ Σ conj(ρ[c,r]) conj(v)
                        let mut e_cd = C64::new(0.0, 0.0);
                        // √γ ξ* E_{(S−e,S)}[c] = √γ ξ* Σ ρ[c,r] v  (via ρ_{(S,S−e)})
                        let mut e_c = C64::new(0.0, 0.0);
                        for &(r, c, v) in &self.chan[ch].entries {
                            let z = dec_bra[c * d + r];
                            e_cd += z.conj() * v.conj();
                            e_c += z * v;
                        }
                        total += xi_c * sq * e_cd + xi_c.conj() * sq * e_c;
                    }
                    // |ξ|² E_{(S−e,S−e)}[I] = |ξ|² conj(Tr ρ_diag)
                    let dec_diag = &y.mats[refs.dec_diag * dd..(refs.dec_diag + 1) * dd];
                    let mut tr = C64::new(0.0, 0.0);
                    for k in 0..d {
                        tr += dec_diag[k * d + k];
                    }
                    total += xi_c.norm_sqr() * tr.conj();
                }
            }
            flux[ch] = total.re;
        }
        flux
    }

    /// P₁ₑ and P₂g read off the top label's diagonal.
    fn p2_parts(&self, y: &StateVec) -> (f64, f64) {
        let dd = self.dd();
        let top = &y.mats[self.top_idx * dd..(self.top_idx + 1) * dd];
        let p1e: f64 = self.p1e_idx.iter().map(|&i| top[i].re).sum();
        let p2g: f64 = self.p2g_idx.iter().map(|&i| top[i].re).sum();
        (p1e, p2g)
    }

    fn divergence_check(&self, y: &StateVec, step: usize, time: f64) -> Result<()> {
        let ceiling2 = DIVERGENCE_CEILING * DIVERGENCE_CEILING;
        for z in &y.mats {
            let q = z.norm_sqr();
            if !(q <= ceiling2) {
                return Err(SwitchError::Divergence {
                    step,
                    time,
                    norm: q.sqrt(),
                });
            }
        }
        Ok(())
    }

    fn record(
        &self,
        t: f64,
        y: &StateVec,
        samples: &mut Vec<FluxSample>,
        observers: &mut [SampleObserver<'_>],
    ) {
        let sample = self.sample_at(t, y);
        if !observers.is_empty() {
            let state = self.to_state(y, t);
            for obs in observers.iter_mut() {
                obs(&sample, &state);
            }
        }
        samples.push(sample);
    }

    /// Recorded sample, using the pointwise (right-continuous) schedule and
    /// wavepacket conventions.
    fn sample_at(&self, t: f64, y: &StateVec) -> FluxSample {
        let spec = &self.scenario.spec;
        let gammas = [0, 1, 2].map(|i| spec.schedules[i].eval(t));
        let xi_vals = [
            crate::hierarchy::xi_complex(&spec.signal, t),
            crate::hierarchy::xi_complex(&spec.control, t),
        ];
        let phi = self.flux_rates(y, gammas, xi_vals);
        let (p1e, p2g) = self.p2_parts(y);
        FluxSample {
            t,
            phi,
            integrated: y.flux,
            p2: p1e + p2g,
            p1e,
            p2g,
            gamma: gammas,
        }
    }

    fn to_state(&self, y: &StateVec, time: f64) -> HierarchyState {
        let sig = self.scenario.spec.signature();
        let dd = self.dd();
        let ops = (0..self.labels.len())
            .map(|li| {
                let mut op = Operator::zeros(sig.clone());
                for r in 0..self.d {
                    for c in 0..self.d {
                        op.set_entry(r, c, y.mats[li * dd + r * self.d + c]);
                    }
                }
                op
            })
            .collect();
        HierarchyState::new(self.labels.clone(), ops, y.flux, time)
    }

    fn segments(&self) -> Vec<Segment> {
        let spec = &self.scenario.spec;
        let horizon = self.scenario.horizon;
        let mut cuts: Vec<f64> = spec
            .schedule_breakpoints()
            .into_iter()
            .filter(|&t| t > 0.0 && t < horizon)
            .collect();
        cuts.push(horizon);
        let mut segs = Vec::new();
        let mut t0 = 0.0;
        for t1 in cuts {
            if t1 <= t0 {
                continue;
            }
            let gammas = [0, 1, 2].map(|i| spec.schedules[i].eval(t0));
            let xi_on = [
                spec.signal.present && t1 <= spec.signal.arrival,
                spec.control.present && t1 <= spec.control.arrival,
            ];
            segs.push(Segment { t0, t1, gammas, xi_on });
            t0 = t1;
        }
        segs
    }
}

/// Integrate a scenario with default options and no observers.
pub fn integrate(scenario: &Scenario) -> Result<Trajectory> {
    integrate_with_options(scenario, &EngineOptions::default(), &mut [])
}

/// Observer invoked at every recorded sample with the sample and the full
/// hierarchy state at that time.
pub type SampleObserver<'a> = &'a mut dyn FnMut(&FluxSample, &HierarchyState);

/// Integrate a scenario, decimating output by `record_stride` and invoking
/// the observers at every recorded sample.
pub fn integrate_with(
    scenario: &Scenario,
    observers: &mut [SampleObserver<'_>],
) -> Result<Trajectory> {
    integrate_with_options(scenario, &EngineOptions::default(), observers)
}

pub fn integrate_with_options(
    scenario: &Scenario,
    options: &EngineOptions,
    observers: &mut [SampleObserver<'_>],
) -> Result<Trajectory> {
    scenario.validate()?;
    let compiled = Compiled::new(scenario, options)?;
    let dd = compiled.dd();
    let nlab = compiled.labels.len();
    let len = nlab * dd;

    // Initial condition: ground state on diagonal labels.
    let init = crate::hierarchy::initial_state(scenario);
    let mut y = StateVec::zeros(len);
    for (li, label) in compiled.labels.iter().enumerate() {
        let op = init.stored(*label).expect("initial state stores all labels");
        for r in 0..compiled.d {
            for c in 0..compiled.d {
                y.mats[li * dd + r * compiled.d + c] = op.entry(r, c);
            }
        }
    }

    let mut k1 = StateVec::zeros(len);
    let mut k2 = StateVec::zeros(len);
    let mut k3 = StateVec::zeros(len);
    let mut k4 = StateVec::zeros(len);
    let mut ytmp = StateVec::zeros(len);
    let mut scratch = vec![C64::new(0.0, 0.0); dd];

    let mut samples = Vec::new();
    let mut max_p2 = 0.0_f64;
    compiled.record(0.0, &y, &mut samples, observers);

    let mut global_step = 0usize;
    let mut last_recorded_step = 0usize;
    for seg in compiled.segments() {
        let span = seg.t1 - seg.t0;
        // The epsilon keeps near-integer ratios from spilling into one extra
        // sliver step when span and dt carry rounding noise.
        let nsteps = ((span / scenario.dt) - 1e-9).ceil().max(1.0) as usize;
        let h = span / nsteps as f64;
        let diag = compiled.drift_diag(&seg.gammas);
        for k in 0..nsteps {
            let t = seg.t0 + k as f64 * h;
            compiled.eval_rhs(t, &seg, &diag, &y, &mut k1, &mut scratch);
            ytmp.assign_step(&y, 0.5 * h, &k1);
            compiled.eval_rhs(t + 0.5 * h, &seg, &diag, &ytmp, &mut k2, &mut scratch);
            ytmp.assign_step(&y, 0.5 * h, &k2);
            compiled.eval_rhs(t + 0.5 * h, &seg, &diag, &ytmp, &mut k3, &mut scratch);
            ytmp.assign_step(&y, h, &k3);
            compiled.eval_rhs(t + h, &seg, &diag, &ytmp, &mut k4, &mut scratch);
            y.rk4_accumulate(h / 6.0, &k1, &k2, &k3, &k4);

            global_step += 1;
            let t_now = if k + 1 == nsteps { seg.t1 } else { t + h };
            compiled.divergence_check(&y, global_step, t_now)?;
            let (p1e, p2g) = compiled.p2_parts(&y);
            max_p2 = max_p2.max(p1e + p2g);
            if global_step % scenario.record_stride == 0 {
                compiled.record(t_now, &y, &mut samples, observers);
                last_recorded_step = global_step;
            }
        }
    }
    if last_recorded_step != global_step {
        compiled.record(scenario.horizon, &y, &mut samples, observers);
    }

    let final_sample = samples.last().expect("at least the initial sample");
    let residual: f64 = final_sample.phi.iter().sum();
    let converged = residual.abs() < scenario.residual_threshold;
    let final_state = compiled.to_state(&y, scenario.horizon);

    Ok(Trajectory {
        samples,
        final_state,
        integrated: y.flux,
        residual,
        converged,
        max_p2,
        steps: global_step,
        horizon: scenario.horizon,
        dt: scenario.dt,
    })
}
