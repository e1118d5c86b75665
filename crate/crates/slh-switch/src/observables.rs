//! Physical quantities reported by the simulator: excitation probabilities,
//! per-channel photon flux, integrated flux, flux differences and the
//! extinction ratio.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::engine::Trajectory;
use crate::error::{Result, SwitchError};
use crate::hierarchy::{xi_complex, HierarchyState, Scenario};
use crate::operator::{expectation, Operator, SpaceSignature};

/// One recorded point of a simulation run. `phi` are the instantaneous
/// per-channel flux rates, `integrated` their running integrals, and the
/// excitation probabilities refer to the top hierarchy label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxSample {
    pub t: f64,
    pub phi: [f64; 3],
    pub integrated: [f64; 3],
    pub p2: f64,
    pub p1e: f64,
    pub p2g: f64,
    pub gamma: [f64; 3],
}

/// Double-excitation probabilities from a top-label density operator:
///
/// `P₁ₑ = Tr[ρ|1,e⟩⟨1,e|]`, `P₂g = Tr[ρ|2,g⟩⟨2,g|]`, `P₂ = P₁ₑ + P₂g`.
///
/// In variant B the projectors act as `projector ⊗ identity` on the filter
/// cavity, i.e. its occupancy is traced out. Returns `(P₂, P₁ₑ, P₂g)`.
pub fn p2(rho_top: &Operator, signature: &SpaceSignature) -> Result<(f64, f64, f64)> {
    let factors = signature.factors();
    if factors[0] < 3 {
        return Err(SwitchError::CutoffTooSmall(factors[0] - 1));
    }
    let cav2_dim = if factors.len() > 2 { factors[2] } else { 1 };
    let mut p1e = 0.0;
    let mut p2g = 0.0;
    for k in 0..cav2_dim {
        let idx_1e = if factors.len() > 2 {
            signature.flatten(&[1, 1, k])?
        } else {
            signature.flatten(&[1, 1])?
        };
        let idx_2g = if factors.len() > 2 {
            signature.flatten(&[2, 0, k])?
        } else {
            signature.flatten(&[2, 0])?
        };
        p1e += rho_top.entry(idx_1e, idx_1e).re;
        p2g += rho_top.entry(idx_2g, idx_2g).re;
    }
    Ok((p1e + p2g, p1e, p2g))
}

/// Average photon flux `φᵢ(t)` at the output of channel `i` (0-based),
/// evaluated at the scenario's top label:
///
/// `φᵢ = E_{m,n}[Lᵢ†Lᵢ] + √nᵢ ξᵢ(t) E_{m,nᵢ−1}[Lᵢ†] + √mᵢ ξᵢ*(t) E_{mᵢ−1,n}[Lᵢ]
///       + √(mᵢnᵢ) |ξᵢ(t)|² E_{mᵢ−1,nᵢ−1}[I]`
///
/// with `E` the asymmetric expectation `Tr[ρ†O]`. Since the scattering
/// matrix is the identity, no cross-channel terms survive; channels with no
/// input photon keep only the first term.
pub fn photon_flux(
    state: &HierarchyState,
    channel: usize,
    t: f64,
    scenario: &Scenario,
) -> Result<f64> {
    let spec = &scenario.spec;
    let top = scenario.top_label();
    let l_ops = spec.coupling_ops(t);
    let l = &l_ops[channel];
    let ld = l.dagger();

    let rho_top = state
        .operator(top)
        .ok_or_else(|| SwitchError::MissingLowerLabel("flux".into(), top.to_string()))?;
    let mut total = expectation(&rho_top, &(&ld * l))?;

    if top.m[channel] == 1 {
        let pulse = spec.pulse(channel).expect("occupied channel has a pulse");
        let amp = xi_complex(pulse, t);
        let lbl_n = top.decrement_n(channel).unwrap();
        let rho_n = state
            .operator(lbl_n)
            .ok_or_else(|| SwitchError::MissingLowerLabel("flux".into(), lbl_n.to_string()))?;
        total += amp * expectation(&rho_n, &ld)?;

        let lbl_m = top.decrement_m(channel).unwrap();
        let rho_m = state
            .operator(lbl_m)
            .ok_or_else(|| SwitchError::MissingLowerLabel("flux".into(), lbl_m.to_string()))?;
        total += amp.conj() * expectation(&rho_m, l)?;

        let lbl_mn = lbl_m.decrement_n(channel).unwrap();
        let rho_mn = state
            .operator(lbl_mn)
            .ok_or_else(|| SwitchError::MissingLowerLabel("flux".into(), lbl_mn.to_string()))?;
        total += C64::new(amp.norm_sqr(), 0.0) * rho_mn.trace().conj();
    }
    Ok(total.re)
}

/// Extinction ratio in dB with its finiteness flag.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionRatio {
    pub db: f64,
    pub finite: bool,
}

/// `R = 10·log₁₀(Φ_on / Φ_off)` in dB. A non-positive `Φ_off` yields the
/// +∞ sentinel with `finite = false`.
pub fn extinction_ratio(phi_on: f64, phi_off: f64) -> ExtinctionRatio {
    if phi_off <= 0.0 {
        return ExtinctionRatio {
            db: f64::INFINITY,
            finite: false,
        };
    }
    let db = 10.0 * (phi_on / phi_off).log10();
    ExtinctionRatio {
        db,
        finite: db.is_finite(),
    }
}

/// Steady-state figures of merit assembled from the ON (signal + control),
/// control-only and signal-only runs of the same network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchMetrics {
    /// Φ₂ with both photons present (switch ON).
    pub phi2_on: f64,
    /// Φ₂ with the control photon only.
    pub phi2_control: f64,
    /// Φ₂ with the signal photon only (switch OFF), when that run was made.
    pub phi2_signal: Option<f64>,
    /// Flux difference Φ₂(on) − Φ₂(control-only).
    pub difference: f64,
    /// Extinction ratio R(T_end) from the ON and signal-only runs.
    pub extinction: Option<ExtinctionRatio>,
    /// max_t P₂(t) over the ON run.
    pub max_p2: f64,
    /// Whether every contributing run reached its steady-state residual.
    pub converged: bool,
}

/// Assemble [`SwitchMetrics`] from completed runs. All runs must share the
/// same horizon.
pub fn switch_metrics(
    on: &Trajectory,
    control_only: &Trajectory,
    signal_only: Option<&Trajectory>,
) -> Result<SwitchMetrics> {
    if on.horizon != control_only.horizon {
        return Err(SwitchError::HorizonMismatch(
            on.horizon,
            control_only.horizon,
        ));
    }
    if let Some(s) = signal_only {
        if s.horizon != on.horizon {
            return Err(SwitchError::HorizonMismatch(on.horizon, s.horizon));
        }
    }
    let phi2_on = on.integrated[1];
    let phi2_control = control_only.integrated[1];
    let phi2_signal = signal_only.map(|s| s.integrated[1]);
    let extinction = phi2_signal.map(|off| extinction_ratio(phi2_on, off));
    let converged = on.converged
        && control_only.converged
        && signal_only.map_or(true, |s| s.converged);
    Ok(SwitchMetrics {
        phi2_on,
        phi2_control,
        phi2_signal,
        difference: phi2_on - phi2_control,
        extinction,
        max_p2: on.max_p2,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::initial_state;
    use crate::model::{
        xi, CouplingSchedule, NetworkSpec, PhysicalRates, PulseSpec, Variant,
    };
    use crate::operator::{basis_projector, embed, number_op};
    use approx::assert_abs_diff_eq;

    fn scenario(signal: bool, control: bool) -> Scenario {
        let spec = NetworkSpec {
            variant: Variant::A,
            rates: PhysicalRates::with_default_carriers(4000.0, 400.0, 0.0, [3.5, 0.0, 6.0])
                .unwrap(),
            cutoff_cavity1: 2,
            cutoff_cavity2: 2,
            schedules: [
                CouplingSchedule::constant(3.5).unwrap(),
                CouplingSchedule::constant(0.0).unwrap(),
                CouplingSchedule::constant(6.0).unwrap(),
            ],
            signal: if signal {
                PulseSpec::new(11.0, 5.0).unwrap()
            } else {
                PulseSpec::absent()
            },
            control: if control {
                PulseSpec::new(3.0, 4.8).unwrap()
            } else {
                PulseSpec::absent()
            },
        };
        Scenario {
            spec,
            horizon: 20.0,
            dt: 5e-4,
            record_stride: 100,
            full_label_set: false,
            residual_threshold: 1e-6,
        }
    }

    #[test]
    fn p2_ground_state_zero() {
        let sc = scenario(true, true);
        let sig = sc.spec.signature();
        let rho = basis_projector(&[0, 0], &sig).unwrap();
        assert_eq!(p2(&rho, &sig).unwrap(), (0.0, 0.0, 0.0));
    }

    #[test]
    fn p2_projector_states() {
        let sc = scenario(true, true);
        let sig = sc.spec.signature();
        let rho = basis_projector(&[1, 1], &sig).unwrap();
        assert_eq!(p2(&rho, &sig).unwrap(), (1.0, 1.0, 0.0));
        let rho = basis_projector(&[2, 0], &sig).unwrap();
        assert_eq!(p2(&rho, &sig).unwrap(), (1.0, 0.0, 1.0));
    }

    #[test]
    fn p2_traces_out_filter_cavity() {
        let mut sc = scenario(true, true);
        sc.spec.variant = Variant::B;
        sc.spec.rates.j = 1.0;
        let sig = sc.spec.signature();
        // |1,e,1⟩ still counts as a (1,e) excitation whatever cavity 2 holds.
        let rho = basis_projector(&[1, 1, 1], &sig).unwrap();
        assert_eq!(p2(&rho, &sig).unwrap(), (1.0, 1.0, 0.0));
    }

    #[test]
    fn p2_rejects_small_cutoff() {
        let sig = SpaceSignature::new(vec![2, 2]).unwrap();
        let rho = basis_projector(&[1, 1], &sig).unwrap();
        assert!(matches!(
            p2(&rho, &sig),
            Err(SwitchError::CutoffTooSmall(1))
        ));
    }

    #[test]
    fn photon_flux_vacuum_is_zero() {
        let sc = scenario(false, false);
        let state = initial_state(&sc);
        for ch in 0..3 {
            assert_eq!(photon_flux(&state, ch, 1.0, &sc).unwrap(), 0.0);
        }
    }

    #[test]
    fn photon_flux_includes_incident_term() {
        // Before any system response, the channel-1 flux at the initial
        // state is |ξ(t)|²: the incident wavepacket passing by.
        let sc = scenario(true, false);
        let state = initial_state(&sc);
        let t = 4.5;
        let expected = xi(&sc.spec.signal, t).powi(2);
        let phi = photon_flux(&state, 0, t, &sc).unwrap();
        assert_abs_diff_eq!(phi, expected, epsilon = 1e-12);
        // Vacuum output channel sees nothing from the ground state.
        assert_eq!(photon_flux(&state, 1, t, &sc).unwrap(), 0.0);
    }

    #[test]
    fn photon_flux_gamma_and_xi_zero_segment() {
        let mut sc = scenario(true, false);
        sc.spec.schedules[0] = CouplingSchedule::new(3.5, vec![(6.0, 0.0)]).unwrap();
        let mut state = initial_state(&sc);
        // Populate the cavity so the L†L term would be nonzero if γ were on.
        let sig = sc.spec.signature();
        let n1 = embed(&number_op(3).unwrap(), 0, &sig).unwrap();
        let top = sc.top_label();
        let idx = state.labels().iter().position(|l| *l == top).unwrap();
        let mut ops: Vec<Operator> = state.labels().iter().map(|&l| state.operator(l).unwrap()).collect();
        ops[idx] = n1.scale(C64::new(0.25, 0.0));
        let state = HierarchyState::new(state.labels().to_vec(), ops, [0.0; 3], 0.0);
        // After t = 6 the schedule is zero and the pulse is gone: φ₁ = 0.
        assert_eq!(photon_flux(&state, 0, 7.0, &sc).unwrap(), 0.0);
    }

    #[test]
    fn extinction_ratio_values() {
        assert_abs_diff_eq!(extinction_ratio(0.4, 0.4).db, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(extinction_ratio(1.0, 1e-3).db, 30.0, epsilon = 1e-9);
        let r = extinction_ratio(0.4, 0.0);
        assert!(!r.finite);
        assert!(r.db.is_infinite() && r.db > 0.0);
    }

    #[test]
    fn extinction_ratio_scale_invariant() {
        let a = extinction_ratio(0.37, 2.1e-4);
        let b = extinction_ratio(0.37 * 7.5, 2.1e-4 * 7.5);
        assert_abs_diff_eq!(a.db, b.db, epsilon = 1e-9);
    }
}
