use crate::error::{Error, Result};
use crate::vecmath::norm;

/// Linear change of phase variable `T_a(w) = (a, a^⊥) · w = |a| R_a w`.
///
/// Sends `±e₁` to the wells `±a`. In one phase dimension this is multiplication
/// by `a`; in two, `a^⊥` is the counterclockwise rotation of `a`; in three the
/// frame is completed by Gram–Schmidt against the canonical axes, lowest index first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adjustment {
    m: usize,
    scale: f64,
    /// Orthonormal frame, column-major: `frame[j]` is the j-th column of `R_a`.
    frame: [[f64; 3]; 3],
}

impl Adjustment {
    pub fn new(a: &[f64]) -> Result<Self> {
        let m = a.len();
        if m == 0 || m > 3 {
            return Err(Error::Parameter(format!("adjustment needs phase dimension 1..=3, got {m}")));
        }
        let scale = norm(a);
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Degenerate("adjustment of a vanishing well".into()));
        }
        let mut frame = [[0.0; 3]; 3];
        for k in 0..m {
            frame[0][k] = a[k] / scale;
        }
        match m {
            1 => {}
            2 => {
                frame[1][0] = -frame[0][1];
                frame[1][1] = frame[0][0];
            }
            _ => {
                let mut filled = 1;
                for axis in 0..3 {
                    if filled == 3 {
                        break;
                    }
                    let mut v = [0.0; 3];
                    v[axis] = 1.0;
                    for col in frame.iter().take(filled) {
                        let p: f64 = (0..3).map(|k| v[k] * col[k]).sum();
                        for k in 0..3 {
                            v[k] -= p * col[k];
                        }
                    }
                    let n = norm(&v);
                    if n > 1e-6 {
                        for k in 0..3 {
                            frame[filled][k] = v[k] / n;
                        }
                        filled += 1;
                    }
                }
            }
        }
        Ok(Self { m, scale, frame })
    }

    pub fn phase_dim(&self) -> usize {
        self.m
    }

    /// `|a|`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn apply_into(&self, w: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate().take(self.m) {
            *o = self.scale * (0..self.m).map(|j| self.frame[j][k] * w[j]).sum::<f64>();
        }
    }

    pub fn inverse_into(&self, u: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate().take(self.m) {
            *o = (0..self.m).map(|k| self.frame[j][k] * u[k]).sum::<f64>() / self.scale;
        }
    }

    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.apply_into(w, &mut out);
        out
    }

    pub fn inverse(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.inverse_into(u, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e1(m: usize) -> Vec<f64> {
        let mut v = vec![0.0; m];
        v[0] = 1.0;
        v
    }

    #[test]
    fn sends_e1_to_wells() {
        for a in [vec![1.5], vec![0.3, -2.0], vec![0.0, 0.0, 1.0], vec![1.0, 2.0, -0.5]] {
            let t = Adjustment::new(&a).unwrap();
            let m = a.len();
            let ta = t.apply(&e1(m));
            let tb = t.apply(&e1(m).iter().map(|v| -v).collect::<Vec<_>>());
            for k in 0..m {
                assert!((ta[k] - a[k]).abs() < 1e-14);
                assert!((tb[k] + a[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rotation_is_counterclockwise() {
        let t = Adjustment::new(&[2.0, 0.0]).unwrap();
        let v = t.apply(&[0.0, 1.0]);
        assert!((v[0]).abs() < 1e-15 && (v[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_well_is_rejected() {
        assert!(Adjustment::new(&[0.0, 0.0]).is_err());
    }

    fn well_and_w() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..=3).prop_flat_map(|m| {
            (
                prop::collection::vec(-3.0..3.0f64, m)
                    .prop_filter("non-degenerate well", |a| norm(a) > 0.1),
                prop::collection::vec(-5.0..5.0f64, m),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn scaled_isometry((a, w) in well_and_w()) {
            let t = Adjustment::new(&a).unwrap();
            let tw = t.apply(&w);
            prop_assert!((norm(&tw) - norm(&a) * norm(&w)).abs() <= 1e-12 * (1.0 + norm(&tw)));
        }

        #[test]
        fn inverse_round_trip((a, w) in well_and_w()) {
            let t = Adjustment::new(&a).unwrap();
            let back = t.inverse(&t.apply(&w));
            for (x, y) in back.iter().zip(&w) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
            }
        }
    }
}
