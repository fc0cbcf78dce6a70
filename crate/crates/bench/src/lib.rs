//! Fixtures shared by the criterion benches.

use cahnwell_core::geodesics::Polyline;
use cahnwell_core::phasefield::{Field, SpaceGrid};
use cahnwell_core::{potential_from_toml, Potential};

pub fn planar_quartic() -> Potential {
    potential_from_toml(
        "family = { name = \"quartic\" }\ndomain = { lower = [0.0], upper = [1.0] }\n\
         wells = [{ kind = \"constant\", value = [1.0, 0.0] }]\n",
    )
    .expect("planar quartic")
}

pub fn moving_quartic() -> Potential {
    potential_from_toml(
        "family = { name = \"quartic\" }\ndomain = { lower = [0.0], upper = [1.0] }\n\
         wells = [{ kind = \"quadratic\", offset = [1.0], center = [0.5], coeff = [0.5] }]\n",
    )
    .expect("moving quartic")
}

/// `tanh((x - 1/2)/ε)` on `n` nodes of `[0, 1]`.
pub fn tanh_field(n: usize, eps: f64) -> Field {
    let grid = SpaceGrid::line(0.0, 1.0, n).expect("grid");
    Field::from_fn(grid, 1, |x| vec![((x[0] - 0.5) / eps).tanh()]).expect("field")
}

/// Upper half circle from `-e₁` to `e₁`.
pub fn arc(vertices: usize) -> Polyline {
    let pts: Vec<f64> = (0..vertices)
        .flat_map(|k| {
            let th = std::f64::consts::PI * (1.0 - k as f64 / (vertices - 1) as f64);
            [th.cos(), 0.3 * th.sin()]
        })
        .collect();
    Polyline::new(2, pts).expect("arc")
}
