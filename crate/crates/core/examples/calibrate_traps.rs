//! Derives the default trap constants and checks them against the
//! sensitization targets: more than a tenfold rise by about 100 s at the
//! calibration intensity, then saturation.
//!
//! Run with `cargo run -p biphoton --example calibrate_traps`.

use biphoton::kinetics::{
    simulate_sensitization, IntensitySchedule, Trap, TrapModel, CALIBRATION_INTENSITY,
};

/// Fill fraction each trap settles at under calibration intensity.
const FILL_FRACTION: [f64; 2] = [0.8, 0.5];
/// Lifetimes from the dark relaxation, seconds.
const LIFETIME: [f64; 2] = [100.0, 5.0];
/// Saturated sensitivity in units of s0.
const SATURATED_GAIN: f64 = 16.0;
/// Share of the saturated gain carried by the fast trap.
const FAST_GAIN_SHARE: f64 = 3.0;

fn main() -> biphoton::Result<()> {
    let i = CALIBRATION_INTENSITY;
    // N_eq = cIτ/(1 + cIτ) = f  ⇒  c = f/((1 − f)·τ·I)
    let fill = |j: usize| FILL_FRACTION[j] / ((1.0 - FILL_FRACTION[j]) * LIFETIME[j] * i);
    let gain_fast = FAST_GAIN_SHARE / FILL_FRACTION[1];
    let gain_slow = (SATURATED_GAIN - 1.0 - FAST_GAIN_SHARE) / FILL_FRACTION[0];

    let model = TrapModel::new(
        Trap {
            capacity: 1.0,
            fill_coefficient: fill(0),
            lifetime: LIFETIME[0],
            gain: gain_slow,
        },
        Trap {
            capacity: 1.0,
            fill_coefficient: fill(1),
            lifetime: LIFETIME[1],
            gain: gain_fast,
        },
        1.0,
    )?;

    let horizon = 200.0;
    let step = 0.1;
    let sched = IntensitySchedule::constant(i, horizon)?;
    let sim = simulate_sensitization(&model, &sched, [0.0, 0.0], horizon, step)?;
    let at = |t: f64| sim.trace.values[(t / step).round() as usize];
    let slope_100 = (at(100.1) - at(99.9)) / 0.2 / at(100.0);

    println!("calibration intensity = {i} W/m^2");
    println!("s(100 s)/s0 = {:.3}", at(100.0));
    println!("s(200 s)/s0 = {:.3}", at(200.0));
    println!("relative slope at 100 s = {:.3e} /s", slope_100);
    println!();
    println!("[traps]");
    println!("base_sensitivity = 1.0");
    for (j, t) in model.traps.iter().enumerate() {
        println!("capacity_{} = {:?}", j + 1, t.capacity);
        println!("fill_{}_m2_per_w_s = {:?}", j + 1, t.fill_coefficient);
        println!("lifetime_{}_s = {:?}", j + 1, t.lifetime);
        println!("gain_{} = {:?}", j + 1, t.gain);
    }
    assert_eq!(model, TrapModel::calibrated(), "frozen defaults are stale");
    Ok(())
}
