//! Field layouts: hand-written patches plus the generated forest and snow analogs.

use super::config::{WorldConfig, WorldKind};
use crate::world::{Patch, TractionField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LAYOUT_STREAM: u64 = 0x6c61796f7574;
/// Free space kept around the start and the goal.
const KEEP_CLEAR: f64 = 2.5;
/// Minimum free gap between two generated trees.
const TREE_GAP: f64 = 1.2;
const MAX_ATTEMPTS: usize = 20_000;

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn fits(c: (f64, f64), r: f64, placed: &[Patch], start: (f64, f64), goal: (f64, f64)) -> bool {
    dist(c, start) > r + KEEP_CLEAR
        && dist(c, goal) > r + KEEP_CLEAR
        && placed.iter().all(|p| dist(c, p.center) > r + p.radius + TREE_GAP)
}

fn tree(cfg: &WorldConfig, center: (f64, f64), radius: f64) -> Patch {
    Patch::new(center, radius, 0.0, cfg.tree_height)
}

fn route_trees(cfg: &WorldConfig, rng: &mut ChaCha8Rng, start: (f64, f64), goal: (f64, f64), placed: &mut Vec<Patch>) {
    let n = cfg.trees_on_route.min(cfg.trees);
    let (dx, dy) = (goal.0 - start.0, goal.1 - start.1);
    let len = dx.hypot(dy).max(1e-9);
    let (nx, ny) = (-dy / len, dx / len);
    for i in 0..n {
        let frac = 0.2 + 0.65 * (i as f64 + 0.5) / n as f64;
        for _ in 0..MAX_ATTEMPTS {
            let t = frac + rng.random_range(-0.03..=0.03);
            let lateral = cfg.route_offset * (1.0 - t) + rng.random_range(-0.3..=0.3);
            let r = rng.random_range(cfg.tree_radius[0]..=cfg.tree_radius[1]);
            let c = (start.0 + t * dx + lateral * nx, start.1 + t * dy + lateral * ny);
            if fits(c, r, placed, start, goal) {
                placed.push(tree(cfg, c, r));
                break;
            }
        }
    }
}

fn scattered_trees<F>(cfg: &WorldConfig, count: usize, rng: &mut ChaCha8Rng, start: (f64, f64), goal: (f64, f64), allowed: F, placed: &mut Vec<Patch>)
where
    F: Fn((f64, f64), f64) -> bool,
{
    let [x0, x1, y0, y1] = cfg.bounds;
    let mut added = 0;
    for _ in 0..MAX_ATTEMPTS {
        if added == count {
            break;
        }
        let r = rng.random_range(cfg.tree_radius[0]..=cfg.tree_radius[1]);
        let c = (rng.random_range(x0 + r..=x1 - r), rng.random_range(y0 + r..=y1 - r));
        if allowed(c, r) && fits(c, r, placed, start, goal) {
            placed.push(tree(cfg, c, r));
            added += 1;
        }
    }
}

/// A flat band along y at `band_x`, built from overlapping disks, covering
/// `y` from `band_start_y` up to `band_end_y`.
fn band(cfg: &WorldConfig) -> Vec<Patch> {
    let r = cfg.band_width / 2.0;
    let step = r / 3.0;
    let mut y = cfg.band_start_y + r;
    let top = cfg.band_end_y - r;
    let mut out = Vec::new();
    while y < top {
        out.push(Patch::new((cfg.band_x, y), r, cfg.band_mu, 0.0));
        y += step;
    }
    out.push(Patch::new((cfg.band_x, top), r, cfg.band_mu, 0.0));
    out
}

/// Builds the traction field for one episode. Generated layouts depend only
/// on `layout_seed` (or `episode_seed` when unset).
pub fn build_field(cfg: &WorldConfig, start: (f64, f64), goal: (f64, f64), episode_seed: u64) -> TractionField {
    let mut field = TractionField::uniform(cfg.base_mu, cfg.base_nu);
    field.patches = cfg.patches.clone();
    if cfg.kind == WorldKind::Custom {
        return field;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.layout_seed.unwrap_or(episode_seed));
    rng.set_stream(LAYOUT_STREAM);
    let mut trees = Vec::new();
    match cfg.kind {
        WorldKind::Forest => {
            route_trees(cfg, &mut rng, start, goal, &mut trees);
            let rest = cfg.trees.saturating_sub(trees.len());
            scattered_trees(cfg, rest, &mut rng, start, goal, |_, _| true, &mut trees);
        }
        WorldKind::Snow => {
            // trees stay off the band and the detour around its end
            let margin = cfg.band_width / 2.0 + 2.0;
            let keep_out = |c: (f64, f64), r: f64| (c.0 - cfg.band_x).abs() > margin + r;
            scattered_trees(cfg, cfg.trees, &mut rng, start, goal, keep_out, &mut trees);
            field.patches.extend(band(cfg));
        }
        WorldKind::Custom => unreachable!(),
    }
    field.patches.extend(trees);
    field
}

/// How far `(x, y)` lies inside the union of patches with `mu < threshold`,
/// approximated by the deepest single disk; 0 outside.
pub fn low_mu_depth(field: &TractionField, x: f64, y: f64, threshold: f64) -> f64 {
    field
        .patches
        .iter()
        .filter(|p| p.mu < threshold)
        .map(|p| p.radius - dist((x, y), p.center))
        .fold(0.0, f64::max)
}
