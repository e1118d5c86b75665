//! Convention-factor hypothesis scan: rate factor c on all channel rates,
//! bandwidth factor p on both pulse bandwidths.

use slh_switch::model::RateConvention;
use slh_switch::{integrate, reference, SchedulePreset};

fn run_combo(c: f64, p: f64) {
    // maxP2 at tau = -0.2
    let mut sc = reference::p2_optimum(RateConvention::AsGiven);
    sc.spec.rates.gamma = [3.5 * c, 0.0, 6.0 * c];
    sc.spec.schedules = SchedulePreset::Constant
        .materialize(sc.spec.rates.gamma, 5.0, 4.8)
        .unwrap();
    sc.spec.signal.bandwidth = 11.0 * p;
    sc.spec.control.bandwidth = 3.0 * p;
    sc.horizon = 15.0;
    let p2 = integrate(&sc).unwrap().max_p2;

    // tau profile peak
    let mut best = (0.0, f64::MIN);
    for k in -6..=2 {
        let tau = k as f64 / 10.0;
        let mut s = sc.clone();
        s.spec.control.arrival = 5.0 + tau;
        s.horizon = 12.0;
        let v = integrate(&s).unwrap().max_p2;
        if v > best.1 {
            best = (tau, v);
        }
    }

    // stepB and square differences
    let mk = |preset: SchedulePreset, t_ac: f64| {
        let mut s = reference::step_b(RateConvention::AsGiven);
        s.spec.rates.gamma = [3.5 * c, 3.5 * c, 6.0 * c];
        s.spec.schedules = preset.materialize(s.spec.rates.gamma, 5.0, t_ac).unwrap();
        s.spec.signal.bandwidth = 11.0 * p;
        s.spec.control.bandwidth = 3.0 * p;
        s.spec.control.arrival = t_ac;
        s
    };
    let diff = |s: &slh_switch::Scenario| {
        let on = integrate(&s.with_pulses(true, true)).unwrap().integrated[1];
        let ctl = integrate(&s.with_pulses(false, true)).unwrap().integrated[1];
        on - ctl
    };
    let sb = diff(&mk(SchedulePreset::StepB, 4.3));
    let sq = diff(&mk(SchedulePreset::Square { t0: 3.7 }, 4.3));
    let sa = diff(&mk(SchedulePreset::StepA, 4.8));

    println!(
        "c={c:.2} p={p:.1}: maxP2(-0.2)={p2:.4}  tau*={:+.1} ({:.4})  stepA={sa:.4} stepB={sb:.4} square={sq:.4}",
        best.0, best.1
    );
}

fn main() {
    println!("targets:      maxP2=0.279 at tau*=-0.2            stepA=0.316 stepB=0.404 square=0.489");
    for (c, p) in [(1.0, 1.0), (1.0, 2.0), (0.5, 1.0), (0.5, 2.0)] {
        run_combo(c, p);
    }
}
