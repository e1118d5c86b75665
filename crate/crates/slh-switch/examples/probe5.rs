//! Numerical-robustness probes: dt halving and cutoff increments.

use std::time::Instant;

use slh_switch::model::RateConvention;
use slh_switch::{integrate, reference};

fn main() {
    let which: Vec<String> = std::env::args().skip(1).collect();
    let want = |name: &str| which.is_empty() || which.iter().any(|w| w == name);

    if want("dt") {
        for (name, sc) in [
            ("constant", reference::constant_flux(RateConvention::AsGiven)),
            ("square", reference::square(RateConvention::AsGiven)),
        ] {
            let base = integrate(&sc).unwrap();
            let mut half = sc.clone();
            half.dt /= 2.0;
            let fine = integrate(&half).unwrap();
            println!(
                "{name}: Phi2(dt)={:.9} Phi2(dt/2)={:.9} |delta|={:.3e}",
                base.integrated[1],
                fine.integrated[1],
                (base.integrated[1] - fine.integrated[1]).abs()
            );
        }
    }

    if want("cutoff") {
        for (name, mut sc) in [
            ("square", reference::square(RateConvention::AsGiven)),
            ("modelB", reference::model_b(RateConvention::AsGiven)),
        ] {
            let t0 = Instant::now();
            let base = integrate(&sc).unwrap();
            sc.spec.cutoff_cavity1 += 1;
            sc.spec.cutoff_cavity2 += 1;
            let up = integrate(&sc).unwrap();
            println!(
                "{name}: Phi2(cut2)={:.9} Phi2(cut3)={:.9} |delta|={:.3e} maxP2 delta={:.3e} [{:?}]",
                base.integrated[1],
                up.integrated[1],
                (base.integrated[1] - up.integrated[1]).abs(),
                (base.max_p2 - up.max_p2).abs(),
                t0.elapsed()
            );
        }
    }

    if want("closure") {
        let mut sc = reference::model_b(RateConvention::AsGiven);
        sc.horizon = 12.0;
        let canonical = integrate(&sc).unwrap();
        sc.full_label_set = true;
        let full = integrate(&sc).unwrap();
        let mut worst = 0.0_f64;
        let closed =
            slh_switch::conjugate_closure(&canonical.final_state, &sc);
        for &label in full.final_state.labels() {
            let a = closed.operator(label).unwrap();
            let b = full.final_state.operator(label).unwrap();
            let d = (&a - &b).max_abs();
            worst = worst.max(d);
        }
        println!("closure vs full-16 at T=12: worst elementwise {:.3e}", worst);
        println!(
            "flux agreement: {:.3e}",
            (0..3)
                .map(|i| (canonical.integrated[i] - full.integrated[i]).abs())
                .fold(0.0, f64::max)
        );
    }
}
