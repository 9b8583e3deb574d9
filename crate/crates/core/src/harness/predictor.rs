//! Traversability predictors feeding the controller: the full-field oracle and
//! the two baselines.

use super::config::{ControllerKind, PredictorSection};
use crate::camera::{render_oracle_image, GroundLut, RenderSettings, TraversabilityImage};
use crate::kinodynamics::State2D;
use crate::world::{Patch, TractionField};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub enum Predictor {
    /// Renders the true traction field with occlusion.
    Oracle { field: TractionField, render: RenderSettings },
    /// Every ground pixel reads full traction.
    Blind,
    /// Obstacles taller than a threshold read 0, everything else 1.
    Geometric { field: TractionField, render: RenderSettings },
}

/// Predictor used by a controller kind over a given true field.
pub fn predictor_for(kind: ControllerKind, field: &TractionField, section: &PredictorSection) -> Predictor {
    match kind {
        ControllerKind::Wayfast => Predictor::Oracle {
            field: field.clone(),
            render: section.render,
        },
        ControllerKind::Blind => Predictor::Blind,
        ControllerKind::Geometric => {
            let patches: Vec<Patch> = field
                .patches
                .iter()
                .filter(|p| p.height > section.geometric_height)
                .map(|p| Patch { mu: 0.0, ..*p })
                .collect();
            Predictor::Geometric {
                field: TractionField {
                    base_mu: 1.0,
                    base_nu: field.base_nu,
                    patches,
                },
                render: section.render,
            }
        }
    }
}

impl Predictor {
    /// Image seen by a camera at `pose`.
    pub fn render<R: Rng + ?Sized>(&self, pose: &State2D, lut: &GroundLut, rng: &mut R) -> TraversabilityImage {
        match self {
            Predictor::Oracle { field, render } | Predictor::Geometric { field, render } => {
                render_oracle_image(pose, field, lut, render, rng)
            }
            Predictor::Blind => TraversabilityImage::filled(*lut.camera(), *pose, 1.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Camera;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(field: &TractionField, kind: ControllerKind) -> TraversabilityImage {
        let lut = Camera::default().ground_lut();
        let p = predictor_for(kind, field, &PredictorSection::default());
        p.render(&State2D::default(), &lut, &mut ChaCha8Rng::seed_from_u64(0))
    }

    #[test]
    fn blind_reads_full_traction_everywhere() {
        let field = TractionField::uniform(0.5, 1.0).with_patch(Patch::new((2.5, 0.0), 0.5, 0.0, 1.0));
        let img = setup(&field, ControllerKind::Blind);
        assert!(img.values().iter().all(|&v| v == 1.0));
        assert_eq!(img.lookup((2.5, 0.0)), 1.0);
    }

    #[test]
    fn geometric_ignores_flat_low_traction() {
        let field = TractionField::uniform(0.9, 1.0).with_patch(Patch::new((2.5, 0.0), 0.6, 0.05, 0.0));
        let img = setup(&field, ControllerKind::Geometric);
        assert_eq!(img.lookup((2.5, 0.0)), 1.0);
        assert_eq!(img.lookup((2.5, 0.3)), 1.0);
    }

    #[test]
    fn geometric_blocks_tall_obstacles() {
        let field = TractionField::uniform(0.9, 1.0).with_patch(Patch::new((2.5, 0.0), 0.6, 0.3, 1.0));
        let img = setup(&field, ControllerKind::Geometric);
        assert_eq!(img.lookup((2.5, 0.0)), 0.0);
        assert_eq!(img.lookup((2.5, 1.2)), 1.0);
    }

    #[test]
    fn oracle_sees_flat_low_traction() {
        let field = TractionField::uniform(0.9, 1.0).with_patch(Patch::new((2.5, 0.0), 0.6, 0.05, 0.0));
        let img = setup(&field, ControllerKind::Wayfast);
        assert!((img.lookup((2.5, 0.0)) - 0.05).abs() < 1e-6);
        assert!((img.lookup((2.5, 1.5)) - 0.9).abs() < 1e-6);
    }
}
