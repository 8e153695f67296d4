//! Prints the calibration quantities for a parameter set.
//!
//! ```bash
//! cargo run --release --example calibrate -- <k_edge> <k_ground> <k_f>
//! ```

use boltseq::assembly::{simultaneous_oracle, Action};
use boltseq::heuristics::{run_heuristic, Policy, REFERENCE_HOLES};
use boltseq::model::ModelParams;
use boltseq::{Model, Scenario, State};

fn main() -> boltseq::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("numeric argument"))
        .collect();
    let mut params = ModelParams::default();
    if let [k_edge, k_ground, k_f] = args[..] {
        params.k_edge = k_edge;
        params.k_ground = k_ground;
        params.k_f = k_f;
    }
    let model = Model::build(&params)?;
    let open = State::new(&model);
    let one = open.apply_action(Action::install(10))?;
    let two = one.apply_action(Action::install(11))?;
    println!("params: {params:?}");
    println!("single install closure at 10: {:.4} mm", 6.0 - one.gaps()[10]);
    println!("force at 10 after installing 11: {:.2} N", two.current_forces()[10]);
    let ref20 = simultaneous_oracle(&model, &REFERENCE_HOLES)?;
    let all40 = simultaneous_oracle(&model, &(0..40).collect::<Vec<_>>())?;
    println!("oracle 20: mean {:.5} std {:.5}", ref20.gap_mean, ref20.gap_std);
    println!("oracle 40: mean {:.5} std {:.5}", all40.gap_mean, all40.gap_std);
    for policy in Policy::ALL {
        let r = run_heuristic(&model, &Scenario::reference(), policy)?;
        let st = r.final_stats();
        println!(
            "{:<13} actions {:>3} converged {:<5} stop {:?} gap_mean {:.4} gap_std {:.4} loss {:.4}",
            policy.name(),
            r.actions_used,
            r.converged,
            r.stop,
            st.gap_mean,
            st.gap_std,
            r.final_loss
        );
    }
    Ok(())
}
