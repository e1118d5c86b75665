//! Development probe: prints the key benchmark numbers.

use std::time::Instant;

use slh_switch::model::RateConvention;
use slh_switch::operator::{embed, expectation, number_op};
use slh_switch::{integrate, integrate_with, reference};

fn main() {
    let which: Vec<String> = std::env::args().skip(1).collect();
    let want = |name: &str| which.is_empty() || which.iter().any(|w| w == name);

    if want("absorb") {
        // Matched absorber: excitation at arrival should hit 1.
        for (gamma, dw) in [(11.0, 11.0), (2.0, 5.0)] {
            let sc = reference::matched_absorber(gamma, dw);
            let sig = sc.spec.signature();
            let n1 = embed(&number_op(3).unwrap(), 0, &sig).unwrap();
            let mut at_arrival = (0.0, 0.0);
            let mut cb = |sample: &slh_switch::FluxSample, state: &slh_switch::HierarchyState| {
                if sample.t == 5.0 {
                    let top = state.operator(sc.top_label()).unwrap();
                    at_arrival = (sample.t, expectation(&top, &n1).unwrap().re);
                }
            };
            let t0 = Instant::now();
            let traj = integrate_with(&sc, &mut [&mut cb]).unwrap();
            let analytic = 4.0 * gamma * dw / (gamma + dw).powi(2);
            println!(
                "absorber g={gamma} dw={dw}: P({}) = {:.8} (analytic {:.8})  [{} steps, {:?}]",
                at_arrival.0,
                at_arrival.1,
                analytic,
                traj.steps,
                t0.elapsed()
            );
        }
    }

    if want("p2") {
        for conv in [RateConvention::AsGiven, RateConvention::TimesTwoPi] {
            let sc = reference::p2_optimum(conv);
            let t0 = Instant::now();
            let traj = integrate(&sc).unwrap();
            println!(
                "p2 optimum {conv:?}: max P2 = {:.6} (dt={}, {} steps, residual {:.2e}, conv {}) [{:?}]",
                traj.max_p2,
                sc.dt,
                traj.steps,
                traj.residual,
                traj.converged,
                t0.elapsed()
            );
        }
    }

    if want("fig4") {
        let sc = reference::constant_flux(RateConvention::AsGiven);
        let t0 = Instant::now();
        let on = integrate(&sc.with_pulses(true, true)).unwrap();
        let ctl = integrate(&sc.with_pulses(false, true)).unwrap();
        let sig = integrate(&sc.with_pulses(true, false)).unwrap();
        println!(
            "constant: Phi2_on={:.6} Phi2_ctl={:.6} Phi2_sig={:.6} diff={:.6} [{:?}]",
            on.integrated[1],
            ctl.integrated[1],
            sig.integrated[1],
            on.integrated[1] - ctl.integrated[1],
            t0.elapsed()
        );
        println!(
            "  conservation: on sum={:.6} (want 2), ctl sum={:.6} (want 1), sig sum={:.6} (want 1)",
            on.integrated.iter().sum::<f64>(),
            ctl.integrated.iter().sum::<f64>(),
            sig.integrated.iter().sum::<f64>()
        );
        println!(
            "  residuals: on {:.2e} ctl {:.2e} sig {:.2e}",
            on.residual, ctl.residual, sig.residual
        );
    }

    if want("ladder") {
        for (name, sc) in [
            ("stepA", reference::step_a(RateConvention::AsGiven)),
            ("stepB", reference::step_b(RateConvention::AsGiven)),
            ("square", reference::square(RateConvention::AsGiven)),
        ] {
            let t0 = Instant::now();
            let on = integrate(&sc.with_pulses(true, true)).unwrap();
            let ctl = integrate(&sc.with_pulses(false, true)).unwrap();
            println!(
                "{name}: Phi2_on={:.6} Phi2_ctl={:.6} diff={:.6} (residuals {:.2e}/{:.2e}) [{:?}]",
                on.integrated[1],
                ctl.integrated[1],
                on.integrated[1] - ctl.integrated[1],
                on.residual,
                ctl.residual,
                t0.elapsed()
            );
        }
    }

    if want("modelb") {
        let sc = reference::model_b(RateConvention::AsGiven);
        let t0 = Instant::now();
        let on = integrate(&sc.with_pulses(true, true)).unwrap();
        println!("modelB on: Phi2={:.6} residual={:.3e} [{:?}]", on.integrated[1], on.residual, t0.elapsed());
        let ctl = integrate(&sc.with_pulses(false, true)).unwrap();
        println!("modelB ctl: Phi2={:.6e} residual={:.3e}", ctl.integrated[1], ctl.residual);
        let sig = integrate(&sc.with_pulses(true, false)).unwrap();
        println!("modelB sig: Phi2={:.6e} residual={:.3e}", sig.integrated[1], sig.residual);
        let r = 10.0 * (on.integrated[1] / sig.integrated[1]).log10();
        println!(
            "modelB: diff={:.6} extinction={:.2} dB",
            on.integrated[1] - ctl.integrated[1],
            r
        );
    }

    if want("recovery") {
        let sc = reference::recovery(RateConvention::AsGiven);
        let t0 = Instant::now();
        let on = integrate(&sc.with_pulses(true, true)).unwrap();
        let phi3_before = on
            .samples
            .iter()
            .take_while(|s| s.t <= reference::T_RECOVERY)
            .last()
            .map(|s| s.integrated[2])
            .unwrap_or(0.0);
        println!(
            "recovery: Phi3(T)={:.6} Phi3(t1)={:.6} released={:.6} [{:?}]",
            on.integrated[2],
            phi3_before,
            on.integrated[2] - phi3_before,
            t0.elapsed()
        );
    }
}
