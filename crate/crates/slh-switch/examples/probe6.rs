//! Full staged-protocol run at the default grids.

use std::time::Instant;

use slh_switch::model::RateConvention;
use slh_switch::reference;
use slh_switch::sweep::{staged_protocol, ProtocolGrids, SweepBudget};

fn main() {
    let t0 = Instant::now();
    let base = reference::staged_initial(RateConvention::AsGiven);
    let grids = ProtocolGrids {
        gamma: reference::gamma_grid(),
        bandwidth: reference::bandwidth_grid(),
        tau: reference::tau_grid(),
    };
    let result = staged_protocol(&base, &grids, SweepBudget::unlimited()).unwrap();
    for stage in &result.stages {
        let best = stage.result.argmax().unwrap();
        println!(
            "{}: argmax {:?} -> {:.4}",
            stage.name, best.params, best.value
        );
    }
    println!(
        "final params (g1, g3, bw_s, bw_c, tau): {:?}",
        result.final_params
    );
    println!(
        "fixed point: {}, final maxP2 = {:.4} [{:?}]",
        result.fixed_point,
        result.final_max_p2,
        t0.elapsed()
    );
}
