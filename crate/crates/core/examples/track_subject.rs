//! Starts the template tracker on the subject's ground-truth box and follows
//! it as the drone flies around the outer orbit, reporting overlap with the
//! true box until the tracker gives up.
//!
//!     cargo run --release --example track_subject -- [seed]

use curiosity::orbit::{derive_geometry, GridPosition, Move, OrbitSpaceConfig};
use curiosity::scene::{generate_scene, render_frame, SceneConfig};
use curiosity::trainee::{iou, DetectorConfig, TraineeState, TrackerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let geom = derive_geometry(OrbitSpaceConfig::default())?;
    let config = SceneConfig { orbit_radius: geom.r_max, flight_height: geom.height, ..SceneConfig::default() };
    let scene = generate_scene(&config, seed)?;
    let mut state = TraineeState::new(DetectorConfig::default(), TrackerConfig::default())?;

    let mut pos = GridPosition::new(geom.n_orbits(), 0);
    let render = |p: GridPosition| render_frame(&scene, &geom.camera_pose(p, scene.aim_point()), &config);
    let (img, gt) = render(pos);
    let Some(gt_box) = gt.bbox else {
        println!("subject not visible from the start position of scene {seed}; try another seed");
        return Ok(());
    };
    state.start_tracking(&img, &gt_box)?;
    println!("tracking from j=0, box {gt_box:?}");

    for step in 1..=geom.n_angles {
        pos = geom.apply_move(pos, Move::Left);
        let (img, gt) = render(pos);
        match state.update_tracker(&img) {
            Some(b) => {
                let overlap = gt.bbox.map_or(0.0, |g| iou(&b, &g));
                println!("step {step:2} j={:2}  tracked, IoU with truth {overlap:.2}", pos.angle);
            }
            None => {
                println!("step {step:2} j={:2}  tracker lost the subject", pos.angle);
                break;
            }
        }
    }
    Ok(())
}
