//! Derives the exploration disk from the drone's standoff distance and
//! camera tilt, then prints per-orbit radii and flight times.
//!
//!     cargo run --example orbit_geometry -- [d] [theta_deg] [delta_alpha_deg] [n_orbits]

use curiosity::env::{elapsed_time, Action, TimeParams};
use curiosity::orbit::{derive_geometry, GridPosition, Move, OrbitSpaceConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let d = OrbitSpaceConfig::default();
    let config = OrbitSpaceConfig {
        d: args.first().copied().unwrap_or(d.d),
        theta: args.get(1).copied().unwrap_or(d.theta),
        delta_alpha: args.get(2).copied().unwrap_or(d.delta_alpha),
        n_orbits: args.get(3).map(|&n| n as usize).unwrap_or(d.n_orbits),
    };
    let g = derive_geometry(config)?;
    println!("r_max {:.4} m  delta_r {:.4} m  height {:.4} m  {} angles  {} positions", g.r_max, g.delta_r, g.height, g.n_angles, g.n_positions());

    let a = TimeParams::AGENT_A;
    println!("\norbit  radius    arc      chord    left (A, s)  forward (A, s)");
    for k in 1..=g.n_orbits() {
        let p = GridPosition::new(k, 0);
        println!(
            "{k:5}  {:7.3}  {:7.3}  {:7.3}  {:11.4}  {:14.4}",
            g.radius(k),
            g.arc_length(k),
            g.chord_length(k),
            elapsed_time(Action::MoveLeft, p, false, &a, &g),
            elapsed_time(Action::MoveForward, p, false, &a, &g),
        );
    }

    let start = g.start_position();
    let walk = [Move::Left, Move::Left, Move::Forward, Move::Right, Move::Backward, Move::Backward];
    let mut p = start;
    print!("\nwalk from k={} j={}:", p.orbit, p.angle);
    for mv in walk {
        p = g.apply_move(p, mv);
        print!(" {mv:?}->({},{})", p.orbit, p.angle);
    }
    println!();
    Ok(())
}
