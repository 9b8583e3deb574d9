//! Renders the traversability image seen from a pose in front of a tree and
//! an icy patch, writes it as a PGM and checks a few ground lookups.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fs::File;
use std::io::BufWriter;
use travnav::camera::{render_oracle_image, Camera, RenderSettings};
use travnav::kinodynamics::State2D;
use travnav::world::{Patch, TractionField};

fn main() -> std::io::Result<()> {
    let field = TractionField::uniform(0.9, 0.9)
        .with_patch(Patch::new((3.0, 0.8), 0.5, 0.0, 1.0))
        .with_patch(Patch::new((3.5, -1.0), 0.8, 0.1, 0.0));
    let camera = Camera::default();
    let lut = camera.ground_lut();
    let pose = State2D::new(0.0, 0.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let img = render_oracle_image(&pose, &field, &lut, &RenderSettings::default(), &mut rng);

    let path = std::env::args().nth(1).unwrap_or_else(|| "traversability.pgm".into());
    img.write_pgm(BufWriter::new(File::create(&path)?))?;
    println!("wrote {}x{} image to {path}", img.width(), img.height());

    for pt in [(2.0, 0.0), (3.5, -1.0), (3.0, 0.8), (5.0, 1.0), (-1.0, 0.0)] {
        match camera.project_ground_point(pt, &pose) {
            Some((u, v)) => println!("{pt:?} -> pixel ({u:6.1}, {v:6.1}), value {:.2}", img.lookup(pt)),
            None => println!("{pt:?} is not in view, value {:.2}", img.lookup(pt)),
        }
    }
    Ok(())
}
