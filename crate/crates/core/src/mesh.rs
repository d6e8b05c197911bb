//! Regular-grid meshes of a patch, chart projections to R³, and OBJ/PLY export.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ambient::AmbientVector;
use crate::error::SurfaceError;
use crate::surface::ParametricSurface;

/// Samples closer than this to a stereographic pole are rejected.
pub const POLE_CLEARANCE: f64 = 1e-6;

/// Chart used to bring 4-dimensional samples into R³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Projection {
    Identity,
    /// Stereographic projection of S³ from the pole `sign · e_{axis+1}`.
    Stereographic {
        axis: usize,
        sign: f64,
    },
    /// Poincaré ball `(x₁, x₂, x₃)/(1 + x₄)` of H³.
    PoincareBall,
}

impl Projection {
    /// Default chart for a space-form curvature.
    pub fn default_for(c: i32) -> Projection {
        match c {
            0 => Projection::Identity,
            1 => Projection::Stereographic {
                axis: 3,
                sign: -1.0,
            },
            _ => Projection::PoincareBall,
        }
    }

    fn applies_to(&self, c: i32) -> bool {
        matches!(
            (self, c),
            (Projection::Identity, 0)
                | (Projection::Stereographic { .. }, 1)
                | (Projection::PoincareBall, -1)
        )
    }

    fn pole(&self) -> Option<[f64; 4]> {
        match *self {
            Projection::Stereographic { axis, sign } => {
                let mut p = [0.0; 4];
                p[axis] = sign;
                Some(p)
            }
            _ => None,
        }
    }

    /// Image of an ambient point.
    pub fn apply(&self, x: &AmbientVector) -> [f64; 3] {
        let c = x.to_array();
        match *self {
            Projection::Identity => [c[0], c[1], c[2]],
            Projection::PoincareBall => {
                let d = 1.0 + c[3];
                [c[0] / d, c[1] / d, c[2] / d]
            }
            Projection::Stereographic { axis, sign } => {
                let d = 1.0 - sign * c[axis];
                let mut out = [0.0; 3];
                for (slot, i) in out.iter_mut().zip((0..4).filter(|&i| i != axis)) {
                    *slot = c[i] / d;
                }
                out
            }
        }
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Projection::Identity => write!(f, "identity"),
            Projection::PoincareBall => write!(f, "poincare"),
            Projection::Stereographic { axis, sign } => {
                write!(
                    f,
                    "stereographic:{}e{}",
                    if *sign < 0.0 { '-' } else { '+' },
                    axis + 1
                )
            }
        }
    }
}

impl FromStr for Projection {
    type Err = String;

    /// Accepts `identity`, `poincare`, `stereographic` (pole `-e4`) and
    /// `stereographic:±eN`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" | "none" => return Ok(Projection::Identity),
            "poincare" => return Ok(Projection::PoincareBall),
            "stereographic" => {
                return Ok(Projection::Stereographic {
                    axis: 3,
                    sign: -1.0,
                })
            }
            _ => {}
        }
        let pole = s
            .strip_prefix("stereographic:")
            .ok_or_else(|| format!("unknown projection '{s}'"))?;
        let (sign, rest) = match pole.as_bytes().first() {
            Some(b'+') => (1.0, &pole[1..]),
            Some(b'-') => (-1.0, &pole[1..]),
            _ => (1.0, pole),
        };
        let axis: usize = rest
            .strip_prefix('e')
            .and_then(|n| n.parse().ok())
            .filter(|n| (1..=4).contains(n))
            .ok_or_else(|| format!("invalid pole '{pole}', expected ±e1..±e4"))?;
        Ok(Projection::Stereographic {
            axis: axis - 1,
            sign,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    /// Parameter value of each vertex.
    pub params: Vec<(f64, f64)>,
    /// Quads, counter-clockwise in the `(u, v)` plane.
    pub faces: Vec<[usize; 4]>,
    pub channels: BTreeMap<String, Vec<f64>>,
    pub projection: Projection,
}

/// Sample `patch` on an `nu × nv` grid and project to R³.
pub fn sample_mesh<S: ParametricSurface + ?Sized>(
    patch: &S,
    nu: usize,
    nv: usize,
    projection: Projection,
) -> Result<Mesh, SurfaceError> {
    if nu < 2 || nv < 2 {
        return Err(SurfaceError::GridTooSmall(nu, nv));
    }
    let model = patch.model();
    if !projection.applies_to(model.curvature()) {
        return Err(SurfaceError::ProjectionModel(
            projection.to_string(),
            model.name(),
        ));
    }
    let params = patch.rect().grid(nu, nv);
    let rect = patch.domain();
    let points: Vec<AmbientVector> = params
        .iter()
        .map(|&(u, v)| {
            patch
                .jet(u, v)
                .map(|j| j.x)
                .ok_or(SurfaceError::OutsideDomain(u, u, rect.u0, rect.u1))
        })
        .collect::<Result<_, _>>()?;

    if let Some(pole) = projection.pole() {
        let clearance = |p: [f64; 4]| {
            points
                .iter()
                .map(|x| 1.0 - x.to_array().iter().zip(&p).map(|(a, b)| a * b).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        };
        if clearance(pole) < POLE_CLEARANCE {
            let mut best = (f64::NEG_INFINITY, String::new());
            // ties go to the default pole -e4
            for axis in [3, 0, 1, 2] {
                for sign in [-1.0, 1.0] {
                    let candidate = Projection::Stereographic { axis, sign };
                    let c = clearance(candidate.pole().expect("stereographic has a pole"));
                    if c > best.0 {
                        best = (c, candidate.to_string());
                    }
                }
            }
            return Err(SurfaceError::PoleOnSurface {
                pole: projection.to_string(),
                suggestion: best.1,
            });
        }
    }

    let vertices = points.iter().map(|x| projection.apply(x)).collect();
    let mut faces = Vec::with_capacity((nu - 1) * (nv - 1));
    for i in 0..nu - 1 {
        for j in 0..nv - 1 {
            let a = i * nv + j;
            faces.push([a, a + nv, a + nv + 1, a + 1]);
        }
    }
    Ok(Mesh {
        vertices,
        params,
        faces,
        channels: BTreeMap::new(),
        projection,
    })
}

impl Mesh {
    /// Each quad split along its `(0, 2)` diagonal.
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        self.faces
            .iter()
            .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
            .collect()
    }

    /// Attach a per-vertex scalar channel; the length must match the vertex count.
    pub fn set_channel(&mut self, name: &str, values: Vec<f64>) {
        assert_eq!(
            values.len(),
            self.vertices.len(),
            "channel '{name}' has the wrong length"
        );
        self.channels.insert(name.to_string(), values);
    }

    pub fn write_obj<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "# projection: {}", self.projection)?;
        for v in &self.vertices {
            writeln!(w, "v {:.16e} {:.16e} {:.16e}", v[0], v[1], v[2])?;
        }
        for f in &self.faces {
            writeln!(w, "f {} {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1, f[3] + 1)?;
        }
        Ok(())
    }

    /// Per-vertex `u, v` and channels, the OBJ sidecar.
    pub fn write_channels_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["vertex".to_string(), "u".to_string(), "v".to_string()];
        header.extend(self.channels.keys().cloned());
        wr.write_record(&header)?;
        for (i, (u, v)) in self.params.iter().enumerate() {
            let mut row = vec![i.to_string(), format!("{u:.16e}"), format!("{v:.16e}")];
            row.extend(self.channels.values().map(|c| format!("{:.16e}", c[i])));
            wr.write_record(&row)?;
        }
        wr.flush()
    }

    /// ASCII PLY with one float property per channel.
    pub fn write_ply<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "ply")?;
        writeln!(w, "format ascii 1.0")?;
        writeln!(w, "comment projection {}", self.projection)?;
        writeln!(w, "element vertex {}", self.vertices.len())?;
        for axis in ["x", "y", "z"] {
            writeln!(w, "property double {axis}")?;
        }
        for name in self.channels.keys() {
            writeln!(w, "property double {name}")?;
        }
        writeln!(w, "element face {}", self.faces.len())?;
        writeln!(w, "property list uchar int vertex_indices")?;
        writeln!(w, "end_header")?;
        for (i, v) in self.vertices.iter().enumerate() {
            write!(w, "{:.16e} {:.16e} {:.16e}", v[0], v[1], v[2])?;
            for c in self.channels.values() {
                write!(w, " {:.16e}", c[i])?;
            }
            writeln!(w)?;
        }
        for f in &self.faces {
            writeln!(w, "4 {} {} {} {}", f[0], f[1], f[2], f[3])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::Signature;
    use crate::surface::fixtures;

    #[test]
    fn two_by_two_grid() {
        let m = sample_mesh(&fixtures::plane(), 2, 2, Projection::Identity).unwrap();
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.faces.len(), 1);
        assert_eq!(m.triangles().len(), 2);
        assert!(sample_mesh(&fixtures::plane(), 1, 2, Projection::Identity).is_err());
    }

    #[test]
    fn identity_keeps_r3_samples() {
        let s = fixtures::sphere();
        let m = sample_mesh(&s, 3, 4, Projection::Identity).unwrap();
        for (v, &(a, b)) in m.vertices.iter().zip(&m.params) {
            let x = s.jet(a, b).unwrap().x.to_array();
            assert_eq!(*v, [x[0], x[1], x[2]]);
        }
    }

    #[test]
    fn stereographic_antipode_maps_to_origin() {
        let p = Projection::Stereographic {
            axis: 3,
            sign: -1.0,
        };
        let antipode = Signature::EUCLIDEAN_4.from_array([0.0, 0.0, 0.0, 1.0]);
        assert_eq!(p.apply(&antipode), [0.0, 0.0, 0.0]);
        let q = Projection::Stereographic { axis: 0, sign: 1.0 };
        let x = Signature::EUCLIDEAN_4.from_array([-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(q.apply(&x), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn pole_on_surface_suggests_alternative() {
        // the great sphere x₄ = 0 passes through e₁
        let s = fixtures::great_sphere();
        let err =
            sample_mesh(&s, 5, 5, Projection::Stereographic { axis: 0, sign: 1.0 }).unwrap_err();
        match err {
            SurfaceError::PoleOnSurface { suggestion, .. } => {
                assert!(suggestion.ends_with("e4"), "{suggestion}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn projection_model_mismatch() {
        assert!(sample_mesh(&fixtures::great_sphere(), 3, 3, Projection::PoincareBall).is_err());
        assert!(sample_mesh(&fixtures::plane(), 3, 3, Projection::default_for(1)).is_err());
    }

    #[test]
    fn parse_projection() {
        assert_eq!(
            "stereographic".parse::<Projection>().unwrap(),
            Projection::Stereographic {
                axis: 3,
                sign: -1.0
            }
        );
        assert_eq!(
            "stereographic:+e2".parse::<Projection>().unwrap(),
            Projection::Stereographic { axis: 1, sign: 1.0 }
        );
        assert_eq!(
            "poincare".parse::<Projection>().unwrap(),
            Projection::PoincareBall
        );
        assert!("stereographic:e9".parse::<Projection>().is_err());
        for p in [
            Projection::Identity,
            Projection::PoincareBall,
            Projection::Stereographic { axis: 2, sign: 1.0 },
        ] {
            assert_eq!(p.to_string().parse::<Projection>().unwrap(), p);
        }
    }

    #[test]
    fn obj_and_ply_layout() {
        let mut m = sample_mesh(&fixtures::plane(), 2, 3, Projection::Identity).unwrap();
        m.set_channel("f", vec![0.0; 6]);
        let mut obj = Vec::new();
        m.write_obj(&mut obj).unwrap();
        let obj = String::from_utf8(obj).unwrap();
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 6);
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 2);
        let mut ply = Vec::new();
        m.write_ply(&mut ply).unwrap();
        let ply = String::from_utf8(ply).unwrap();
        assert!(ply.contains("element vertex 6") && ply.contains("property double f"));
        let mut csv = Vec::new();
        m.write_channels_csv(&mut csv).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap().lines().next().unwrap(),
            "vertex,u,v,f"
        );
    }
}
