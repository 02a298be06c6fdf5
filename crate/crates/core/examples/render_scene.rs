//! Generates a procedural scene and writes a ring of views around it as PPM
//! images, with the subject's ground-truth box.
//!
//!     cargo run --release --example render_scene -- [seed] [out_dir]

use curiosity::orbit::{derive_geometry, GridPosition, OrbitSpaceConfig};
use curiosity::scene::{generate_scene, render_frame, write_ppm, SceneConfig};
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "scene_views".into()));
    std::fs::create_dir_all(&out)?;

    let geom = derive_geometry(OrbitSpaceConfig::default())?;
    let config = SceneConfig { orbit_radius: geom.r_max, flight_height: geom.height, ..SceneConfig::default() };
    let scene = generate_scene(&config, seed)?;
    println!(
        "scene {seed}: subject {:?} at ({:.1}, {:.1}), {} confusors, {} obstructions",
        scene.subject.kind,
        scene.subject.position.0,
        scene.subject.position.1,
        scene.confusors.len(),
        scene.obstructions.len()
    );

    let outer = geom.n_orbits();
    for j in (0..geom.n_angles).step_by(5) {
        let p = GridPosition::new(outer, j);
        let (img, gt) = render_frame(&scene, &geom.camera_pose(p, scene.aim_point()), &config);
        let path = out.join(format!("view_k{outer}_j{j:02}.ppm"));
        write_ppm(BufWriter::new(File::create(&path)?), &img)?;
        match gt.bbox {
            Some(b) => println!("{}  subject box x {:.1} y {:.1} w {:.1} h {:.1}", path.display(), b.x, b.y, b.w, b.h),
            None => println!("{}  subject hidden", path.display()),
        }
    }
    Ok(())
}
