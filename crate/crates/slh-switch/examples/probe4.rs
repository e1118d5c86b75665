//! Sweep-based probes: where do this model's own optima sit?

use slh_switch::model::RateConvention;
use slh_switch::reference;
use slh_switch::sweep::{
    gamma2_sweep, grid_sweep, j_sweep, Objective, SweepAxis, SweepBudget, SweepParam,
};

fn main() {
    let which: Vec<String> = std::env::args().skip(1).collect();
    let want = |name: &str| which.is_empty() || which.iter().any(|w| w == name);
    let budget = SweepBudget::unlimited();

    if want("gamma2") {
        let base = reference::constant_flux_base(RateConvention::AsGiven);
        let res = gamma2_sweep(&base, reference::gamma_grid(), budget).unwrap();
        for p in &res.points {
            println!(
                "gamma2={:<6} diff={:.5} (on {:.4} ctl {:.4}) conv={}",
                p.params[0],
                p.value,
                p.phi2_on.unwrap(),
                p.phi2_control.unwrap(),
                p.converged
            );
        }
        let best = res.argmax().unwrap();
        println!("argmax gamma2 = {} diff = {:.5}", best.params[0], best.value);
    }

    if want("tac") {
        let mut base = reference::constant_flux_base(RateConvention::AsGiven);
        base.preset = slh_switch::SchedulePreset::StepB;
        base.scenario.spec.schedules = base
            .preset
            .materialize(base.scenario.spec.rates.gamma, 5.0, 4.8)
            .unwrap();
        let res = grid_sweep(
            &base,
            &[SweepAxis::new(SweepParam::ControlArrival, reference::control_arrival_grid()).unwrap()],
            Objective::FluxDiff,
            budget,
        )
        .unwrap();
        for p in &res.points {
            println!("t_a_c={:<4} diff={:.5}", p.params[0], p.value);
        }
        let best = res.argmax().unwrap();
        println!("argmax t_a_c = {} diff = {:.5}", best.params[0], best.value);
    }

    if want("t0") {
        let mut base = reference::constant_flux_base(RateConvention::AsGiven);
        base.scenario.spec.control.arrival = 4.8;
        base.preset = slh_switch::SchedulePreset::Square { t0: 3.0 };
        base.scenario.spec.schedules = base
            .preset
            .materialize(base.scenario.spec.rates.gamma, 5.0, 4.8)
            .unwrap();
        let res = grid_sweep(
            &base,
            &[SweepAxis::new(SweepParam::T0, reference::t0_grid()).unwrap()],
            Objective::FluxDiff,
            budget,
        )
        .unwrap();
        for p in &res.points {
            println!("t0={:<4} diff={:.5}", p.params[0], p.value);
        }
        let best = res.argmax().unwrap();
        println!("argmax t0 = {} diff = {:.5}", best.params[0], best.value);
    }

    if want("j") {
        let base = reference::model_b_base(RateConvention::AsGiven);
        let res = j_sweep(&base, reference::j_grid(), budget).unwrap();
        for p in &res.points {
            println!("J={:<5} diff={:.5} conv={}", p.params[0], p.value, p.converged);
        }
        if let Some(best) = res.argmax() {
            println!("argmax J = {} diff = {:.5}", best.params[0], best.value);
        }
    }
}
