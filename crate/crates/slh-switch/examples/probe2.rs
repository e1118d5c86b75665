//! Differential diagnostics for the double-excitation working point.

use slh_switch::model::RateConvention;
use slh_switch::operator::{embed, expectation, number_op, qubit_lowering};
use slh_switch::{integrate, integrate_with, reference};

fn main() {
    let which: Vec<String> = std::env::args().skip(1).collect();
    let want = |name: &str| which.is_empty() || which.iter().any(|w| w == name);

    if want("dressed") {
        // Control-only absorption into the dressed single-excitation state:
        // gamma1 = 0 so channel 3 is the only port. Matched condition is
        // bandwidth = gamma3/2.
        let mut sc = reference::p2_optimum(RateConvention::AsGiven);
        sc.spec.rates.gamma = [0.0, 0.0, 6.0];
        sc.spec.schedules = slh_switch::SchedulePreset::Constant
            .materialize([0.0, 0.0, 6.0], 5.0, 4.8)
            .unwrap();
        sc.spec.signal.present = false;
        sc.spec.signal = slh_switch::PulseSpec::absent();
        let sig = sc.spec.signature();
        let n1 = embed(&number_op(3).unwrap(), 0, &sig).unwrap();
        let sm = embed(&qubit_lowering(), 1, &sig).unwrap();
        let nq = &sm.dagger() * &sm;
        let ntot = &n1 + &nq;
        let mut peak = 0.0_f64;
        let mut at43 = 0.0_f64;
        let mut cb = |sample: &slh_switch::FluxSample, state: &slh_switch::HierarchyState| {
            let top = state.operator(sc.top_label()).unwrap();
            let exc = expectation(&top, &ntot).unwrap().re;
            peak = peak.max(exc);
            if sample.t == 4.8 {
                at43 = exc;
            }
        };
        let mut sc2 = sc.clone();
        sc2.record_stride = 10;
        let _ = integrate_with(&sc2, &mut [&mut cb]).unwrap();
        println!("dressed control absorption: exc(4.8) = {at43:.6}, peak = {peak:.6}");
    }

    if want("tau") {
        for k in -10..=10 {
            let tau = k as f64 / 10.0;
            let mut sc = reference::p2_optimum(RateConvention::AsGiven);
            sc.spec.control.arrival = 5.0 + tau;
            sc.horizon = 12.0;
            let traj = integrate(&sc).unwrap();
            println!("tau={tau:+.1}: maxP2={:.4}", traj.max_p2);
        }
    }

    if want("rates") {
        println!("gamma1 \\ gamma3 map of maxP2 (tau=-0.2, bw 11/3):");
        let g1s = [1.0, 2.0, 3.5, 5.0, 7.0, 10.0];
        let g3s = [2.0, 4.0, 6.0, 9.0, 12.0];
        print!("{:>6}", "");
        for g3 in g3s {
            print!(" {g3:>7.1}");
        }
        println!();
        for g1 in g1s {
            print!("{g1:>6.1}");
            for g3 in g3s {
                let mut sc = reference::p2_optimum(RateConvention::AsGiven);
                sc.spec.rates.gamma = [g1, 0.0, g3];
                sc.spec.schedules = slh_switch::SchedulePreset::Constant
                    .materialize([g1, 0.0, g3], 5.0, 4.8)
                    .unwrap();
                sc.horizon = 12.0;
                let traj = integrate(&sc).unwrap();
                print!(" {:>7.4}", traj.max_p2);
            }
            println!();
        }
    }

    if want("bw") {
        println!("bw_s \\ bw_c map of maxP2 (gamma 3.5/6, tau=-0.2):");
        let bs = [5.0, 8.0, 11.0, 15.0, 20.0];
        let bc = [1.5, 2.0, 3.0, 4.5, 6.0];
        print!("{:>6}", "");
        for c in bc {
            print!(" {c:>7.1}");
        }
        println!();
        for s in bs {
            print!("{s:>6.1}");
            for c in bc {
                let mut sc = reference::p2_optimum(RateConvention::AsGiven);
                sc.spec.signal.bandwidth = s;
                sc.spec.control.bandwidth = c;
                sc.horizon = 12.0;
                let traj = integrate(&sc).unwrap();
                print!(" {:>7.4}", traj.max_p2);
            }
            println!();
        }
    }
}
