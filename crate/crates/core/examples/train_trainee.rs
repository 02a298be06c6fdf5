//! Trains a fresh detector on ground truth from a handful of poses and prints
//! the full-space AP as it improves.
//!
//!     cargo run --release --example train_trainee -- [scene_seed] [rounds] [config]
//!
//! `config` is a config file or preset name (default: the full-scale setup).

use curiosity::harness::{resolve, ExperimentConfig};
use curiosity::orbit::derive_geometry;
use curiosity::scene::{generate_scene, render_frame, SceneConfig};
use curiosity::trainee::{evaluate_ap_features, BBox, DetectorModel, ViewFeatures};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let rounds: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let cfg = match args.next() {
        Some(spec) => resolve(&spec)?,
        None => ExperimentConfig::default(),
    };

    let geom = derive_geometry(cfg.orbit)?;
    let scene_config = SceneConfig { orbit_radius: geom.r_max, flight_height: geom.height, ..cfg.scene.clone() };
    let scene = generate_scene(&scene_config, seed)?;
    let det_config = cfg.detector.clone();

    let views: Vec<(ViewFeatures, Option<BBox>)> = geom
        .positions()
        .map(|p| {
            let (img, gt) = render_frame(&scene, &geom.camera_pose(p, scene.aim_point()), &scene_config);
            (ViewFeatures::new(&img, det_config.grid_size), gt.bbox)
        })
        .collect();
    let all: Vec<(&ViewFeatures, Option<BBox>)> = views.iter().map(|(f, b)| (f, *b)).collect();
    let visible: Vec<usize> = (0..views.len()).filter(|&i| views[i].1.is_some()).collect();
    if visible.is_empty() {
        println!("scene {seed}: the subject is hidden from every view");
        return Ok(());
    }
    let n_poses = visible.len().min(20);
    let poses: Vec<usize> = (0..n_poses).map(|k| visible[k * visible.len() / n_poses]).collect();

    let mut model = DetectorModel::new(det_config)?;
    let base = evaluate_ap_features(&model, &all)?;
    println!("scene {seed}: {} of {} views show the subject", visible.len(), views.len());
    println!("round    0  AP {base:.3}");
    for r in 0..rounds {
        let i = poses[r % poses.len()];
        model = model.training_round_features(&views[i].0, views[i].1.as_ref())?;
        if (r + 1) % 25 == 0 {
            println!("round {:4}  AP {:.3}", r + 1, evaluate_ap_features(&model, &all)?);
        }
    }
    Ok(())
}
