//! Fixture ids.
//!
//! `hyperbolic-sphere`, `euclidean-sphere`, `sphere-cap` select the exact
//! shrinking spheres. `geodesic-sphere-<A><d>`, `round-sphere-<A><d>`,
//! `perturbed-sphere-<A><d>` and `spheroid-<A><d>` name the ambient
//! `A ∈ {R, S, H}` of dimension `d = n + 1`, e.g. `perturbed-sphere-S3`.

use ancientflow::flow::Fixture;
use ancientflow::SpaceForm;

use crate::config::FlowSection;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resolved {
    pub space: SpaceForm,
    pub n: usize,
    pub fixture: Fixture<f64>,
}

fn ambient(tag: &str) -> Option<(SpaceForm, usize)> {
    let mut chars = tag.chars();
    let space = match chars.next()? {
        'R' => SpaceForm::Euclidean,
        'S' => SpaceForm::Sphere,
        'H' => SpaceForm::Hyperbolic,
        _ => return None,
    };
    let d: usize = chars.as_str().parse().ok()?;
    (d >= 3).then_some((space, d - 1))
}

fn pick_n(implied: Option<usize>, requested: Option<usize>, id: &str) -> Result<usize, CliError> {
    match (implied, requested) {
        (Some(a), Some(b)) if a != b => {
            Err(CliError::Config(format!("fixture {id} implies n = {a}, but n = {b} was requested")))
        }
        (Some(a), _) | (None, Some(a)) => Ok(a),
        (None, None) => Ok(2),
    }
}

pub fn resolve(section: &FlowSection, n_override: Option<usize>) -> Result<Resolved, CliError> {
    let id = section.fixture.as_str();
    let requested = n_override.or(section.n);
    let exact = |space: SpaceForm, cap: Option<f64>| -> Result<Resolved, CliError> {
        Ok(Resolved { space, n: pick_n(None, requested, id)?, fixture: Fixture::Exact { cap_constant: cap } })
    };
    match id {
        "hyperbolic-sphere" => return exact(SpaceForm::Hyperbolic, None),
        "euclidean-sphere" => return exact(SpaceForm::Euclidean, None),
        "sphere-cap" => {
            if !(section.cap_constant > 0.0 && section.cap_constant < 1.0) {
                return Err(CliError::Config(format!("cap_constant must lie in (0, 1), got {}", section.cap_constant)));
            }
            return exact(SpaceForm::Sphere, Some(section.cap_constant));
        }
        _ => {}
    }
    let (kind, tag) = id.rsplit_once('-').ok_or_else(|| unknown(id))?;
    let (space, implied) = ambient(tag).ok_or_else(|| unknown(id))?;
    let n = pick_n(Some(implied), requested, id)?;
    let default_radius = if space == SpaceForm::Sphere { 1.2 } else { 1.0 };
    let radius = section.radius.unwrap_or(default_radius);
    let fixture = match kind {
        "geodesic-sphere" => Fixture::Umbilical { radius },
        "round-sphere" => Fixture::Round { radius },
        "perturbed-sphere" => Fixture::Perturbed { radius, amplitude: section.amplitude, mode: section.mode },
        "spheroid" => Fixture::Spheroid { equatorial: section.equatorial, polar: section.polar },
        _ => return Err(unknown(id)),
    };
    Ok(Resolved { space, n, fixture })
}

fn unknown(id: &str) -> CliError {
    CliError::Config(format!(
        "unknown fixture id {id:?}; expected hyperbolic-sphere, euclidean-sphere, sphere-cap, \
         or geodesic-sphere|round-sphere|perturbed-sphere|spheroid followed by -R<d>, -S<d> or -H<d>"
    ))
}
