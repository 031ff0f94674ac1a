//! Triangulated flat surfaces with edge gluings, and the doubling of a polygon.
//!
//! Each triangle lives in its own chart. Edge `k` of a triangle runs from
//! corner `k` to corner `k + 1` (counterclockwise). Every edge is paired with
//! an edge of a partner triangle, traversed in the opposite direction, and
//! carries the orientation-preserving isometry from this triangle's chart to
//! the partner's chart that identifies the two edges.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geom::{ccw_angle, orient, Isometry, Vec2};
use crate::polygon::{validate_polygon, Polygon, VertexRef};
use crate::scalar::{small_fraction, Exact, Scalar, TAU_LEN};
use crate::triangulate::triangulate;

#[derive(Clone, Debug, PartialEq)]
pub struct Gluing<S> {
    pub tri: usize,
    pub edge: usize,
    /// Chart of the owning triangle to chart of `tri`.
    pub map: Isometry<S>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexClass {
    /// Corners `(triangle, corner)` in counterclockwise order around the vertex.
    pub corners: Vec<(usize, usize)>,
    pub angle: f64,
    /// Index into `cone_points` when the angle differs from 2π.
    pub cone: Option<usize>,
    /// Polygon vertex this class comes from, for doubled polygons.
    pub source: Option<VertexRef>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConePoint {
    pub class: usize,
    pub angle: f64,
    /// Cone angle as `p/q · π` when it is a small rational multiple of π.
    pub angle_over_pi: Option<(i64, i64)>,
    /// Angle `2π/n` for some `n ≥ 2`: the double of a polygon vertex of angle `π/n`.
    pub pi_over_n: bool,
    pub source: Option<VertexRef>,
}

#[derive(Clone, Debug)]
pub struct FlatSurface<S> {
    pub triangles: Vec<[Vec2<S>; 3]>,
    pub gluings: Vec<[Gluing<S>; 3]>,
    pub corner_class: Vec<[usize; 3]>,
    pub classes: Vec<VertexClass>,
    pub cone_points: Vec<ConePoint>,
    pub area: S,
    /// For doubled polygons: whether the triangle is on the mirrored sheet,
    /// whose chart is the polygon reflected in the x-axis.
    pub mirrored: Vec<bool>,
    pub polygon: Option<Polygon>,
}

fn corner_angle<S: Scalar>(tri: &[Vec2<S>; 3], k: usize) -> f64 {
    let v = tri[k].to_f64();
    let a = tri[(k + 1) % 3].to_f64();
    let b = tri[(k + 2) % 3].to_f64();
    ccw_angle([a[0] - v[0], a[1] - v[1]], [b[0] - v[0], b[1] - v[1]])
}

impl<S: Scalar> FlatSurface<S> {
    /// Assemble a surface from counterclockwise triangles and an edge pairing
    /// `pairing[t][k] = (t', k')`. Gluing maps are derived from the coordinates.
    pub fn from_parts(
        triangles: Vec<[Vec2<S>; 3]>,
        pairing: &[[(usize, usize); 3]],
        mirrored: Vec<bool>,
        polygon: Option<Polygon>,
        sources: &[[Option<VertexRef>; 3]],
    ) -> Result<Self> {
        let nt = triangles.len();
        if pairing.len() != nt {
            return Err(Error::InvalidPolygon("pairing size mismatch".into()));
        }
        let mut area = S::zero();
        for (t, tri) in triangles.iter().enumerate() {
            let a2 = (tri[1].clone() - tri[0].clone()).cross(&(tri[2].clone() - tri[0].clone()));
            if a2.sign_tol(TAU_LEN * TAU_LEN) != std::cmp::Ordering::Greater {
                return Err(Error::BadOrientation(format!("triangle {t} is not counterclockwise")));
            }
            area = area + a2.half();
        }
        let mut gluings = Vec::with_capacity(nt);
        for (t, tri) in triangles.iter().enumerate() {
            let mut row = Vec::with_capacity(3);
            for k in 0..3 {
                let (u, j) = pairing[t][k];
                if u >= nt || j >= 3 || pairing[u][j] != (t, k) || (u, j) == (t, k) {
                    return Err(Error::InvalidPolygon(format!("edge ({t},{k}) is not paired symmetrically")));
                }
                let a = &tri[k];
                let b = &tri[(k + 1) % 3];
                let other = &triangles[u];
                let a2 = &other[(j + 1) % 3];
                let b2 = &other[j];
                let la = (b.clone() - a.clone()).norm2();
                let lb = (b2.clone() - a2.clone()).norm2();
                if !(la.clone() - lb).is_zero_tol(TAU_LEN) {
                    return Err(Error::DegenerateEdge(format!(
                        "edge ({t},{k}) and ({u},{j}) differ in length"
                    )));
                }
                if la.sign_tol(TAU_LEN * TAU_LEN) != std::cmp::Ordering::Greater {
                    return Err(Error::DegenerateEdge(format!("edge ({t},{k}) has zero length")));
                }
                row.push(Gluing {
                    tri: u,
                    edge: j,
                    map: Isometry::from_segment_pair(a, b, a2, b2),
                });
            }
            let row: [Gluing<S>; 3] = row.try_into().expect("three edges");
            gluings.push(row);
        }

        // Vertex classes: walk counterclockwise around each vertex. Across edge
        // k+2 of t (ending at corner k) the same vertex is corner j of the partner.
        let mut corner_class = vec![[usize::MAX; 3]; nt];
        let mut classes: Vec<VertexClass> = Vec::new();
        let mut cone_points = Vec::new();
        for c in 0..3 * nt {
            let (t0, k0) = (c / 3, c % 3);
            if corner_class[t0][k0] != usize::MAX {
                continue;
            }
            let id = classes.len();
            let mut corners = Vec::new();
            let mut angle = 0.0;
            let mut holonomy = Isometry::<S>::identity();
            let (mut t, mut k) = (t0, k0);
            loop {
                if corner_class[t][k] != usize::MAX {
                    return Err(Error::InvalidPolygon(format!("vertex link at corner ({t0},{k0}) is not a cycle")));
                }
                corner_class[t][k] = id;
                corners.push((t, k));
                angle += corner_angle(&triangles[t], k);
                let g = &gluings[t][(k + 2) % 3];
                holonomy = g.map.compose(&holonomy);
                (t, k) = (g.tri, g.edge);
                if (t, k) == (t0, k0) {
                    break;
                }
            }
            let smooth = holonomy.has_identity_rotation(1e-9) && (angle - TAU).abs() < 1e-9;
            let source = corners.iter().find_map(|&(t, k)| sources.get(t).and_then(|s| s[k]));
            let cone = if smooth {
                None
            } else {
                let ratio = angle / TAU;
                let n = (1.0 / ratio).round();
                cone_points.push(ConePoint {
                    class: id,
                    angle,
                    angle_over_pi: small_fraction(angle / PI, 64, 1e-9),
                    pi_over_n: n >= 2.0 && (ratio * n - 1.0).abs() < 1e-9,
                    source,
                });
                Some(cone_points.len() - 1)
            };
            classes.push(VertexClass {
                corners,
                angle,
                cone,
                source,
            });
        }
        if corner_class.iter().flatten().any(|&c| c == usize::MAX) {
            return Err(Error::InvalidPolygon("unclassified corner".into()));
        }
        Ok(FlatSurface {
            triangles,
            gluings,
            corner_class,
            classes,
            cone_points,
            area,
            mirrored: if mirrored.len() == nt { mirrored } else { vec![false; nt] },
            polygon,
        })
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex(&self, t: usize, k: usize) -> &Vec2<S> {
        &self.triangles[t][k % 3]
    }

    /// Cone point index of corner `k` of triangle `t`, if that vertex is singular.
    pub fn cone_at(&self, t: usize, k: usize) -> Option<usize> {
        self.classes[self.corner_class[t][k]].cone
    }

    pub fn euler_characteristic(&self) -> i64 {
        let v = self.classes.len() as i64;
        let f = self.triangles.len() as i64;
        let e = 3 * f / 2;
        v - e + f
    }

    /// `Σ (2π − θ_i)` over cone points.
    pub fn curvature_sum(&self) -> f64 {
        self.cone_points.iter().map(|c| TAU - c.angle).sum()
    }

    /// `Σ (2π − θ_i) − 2π χ`; zero up to rounding on a valid surface.
    pub fn gauss_bonnet_defect(&self) -> f64 {
        self.curvature_sum() - TAU * self.euler_characteristic() as f64
    }

    pub fn area_f64(&self) -> f64 {
        self.area.to_f64()
    }

    /// Signed values `cross(e_i, p - v_i)` for the three edges; all nonnegative inside.
    pub fn edge_functions(&self, t: usize, p: &Vec2<S>) -> [S; 3] {
        let tri = &self.triangles[t];
        std::array::from_fn(|i| {
            let e = tri[(i + 1) % 3].clone() - tri[i].clone();
            e.cross(&(p.clone() - tri[i].clone()))
        })
    }

    pub fn contains_point(&self, t: usize, p: &Vec2<S>, tol: f64) -> bool {
        let tri = &self.triangles[t];
        (0..3).all(|i| orient(&tri[i], &tri[(i + 1) % 3], p, tol) != std::cmp::Ordering::Less)
    }

    /// Triangle on the given sheet of a doubled polygon containing the polygon point `p`.
    pub fn locate(&self, p: &Vec2<S>, mirrored: bool) -> Option<(usize, Vec2<S>)> {
        let q = if mirrored { Vec2::new(p.x.clone(), -p.y.clone()) } else { p.clone() };
        (0..self.triangles.len())
            .filter(|&t| self.mirrored[t] == mirrored)
            .find(|&t| self.contains_point(t, &q, 1e-12))
            .map(|t| (t, q.clone()))
    }

    /// Map a point of triangle `t`'s chart to polygon coordinates (doubled polygons).
    pub fn to_polygon_coords(&self, t: usize, p: [f64; 2]) -> [f64; 2] {
        if self.mirrored[t] {
            [p[0], -p[1]]
        } else {
            p
        }
    }

    /// Diameter bound: the sum of triangle diameters bounds every geodesic distance.
    pub fn diameter_bound(&self) -> f64 {
        self.triangles
            .iter()
            .map(|tri| {
                (0..3)
                    .map(|i| (tri[(i + 1) % 3].clone() - tri[i].clone()).norm())
                    .fold(0.0, f64::max)
            })
            .sum()
    }

    /// Convert the scalar type of all chart data.
    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> FlatSurface<T> {
        let v = |p: &Vec2<S>| Vec2::new(f(&p.x), f(&p.y));
        FlatSurface {
            triangles: self.triangles.iter().map(|t| [v(&t[0]), v(&t[1]), v(&t[2])]).collect(),
            gluings: self
                .gluings
                .iter()
                .map(|row| {
                    std::array::from_fn(|k| Gluing {
                        tri: row[k].tri,
                        edge: row[k].edge,
                        map: Isometry {
                            c: f(&row[k].map.c),
                            s: f(&row[k].map.s),
                            tx: f(&row[k].map.tx),
                            ty: f(&row[k].map.ty),
                        },
                    })
                })
                .collect(),
            corner_class: self.corner_class.clone(),
            classes: self.classes.clone(),
            cone_points: self.cone_points.clone(),
            area: f(&self.area),
            mirrored: self.mirrored.clone(),
            polygon: self.polygon.clone(),
        }
    }

    pub fn to_f64_surface(&self) -> FlatSurface<f64> {
        self.map_scalar(|x| x.to_f64())
    }
}

/// Double a polygon: glue it to its mirror image along every boundary edge.
/// Slit edges are two-sided; each side is glued to its own mirror copy.
pub fn double(p: &Polygon) -> Result<FlatSurface<Exact>> {
    validate_polygon(p).map_err(|e| Error::InvalidPolygon(e.to_string()))?;
    let tri = triangulate(p)?;
    let n = tri.triangles.len();
    let verts = p.vertices();
    let source_of = |i: usize| verts.iter().find(|(_, q)| *q == tri.points[i]).map(|(r, _)| *r);

    // Copy A: triangle 2m in polygon coordinates. Copy B: triangle 2m+1,
    // reflected in the x-axis with reversed corner order (a, c, b).
    let reflect = |q: &Vec2<Exact>| Vec2::new(q.x.clone(), -q.y.clone());
    let mut triangles = Vec::with_capacity(2 * n);
    let mut mirrored = Vec::with_capacity(2 * n);
    let mut sources = Vec::with_capacity(2 * n);
    for t in &tri.triangles {
        let [a, b, c] = t.map(|i| tri.points[i].clone());
        triangles.push([a.clone(), b.clone(), c.clone()]);
        triangles.push([reflect(&a), reflect(&c), reflect(&b)]);
        mirrored.extend([false, true]);
        let [sa, sb, sc] = t.map(source_of);
        sources.push([sa, sb, sc]);
        sources.push([sa, sc, sb]);
    }

    // Interior edges pair within a sheet; constraint edges pair with the mirror.
    let mut pairing = vec![[(usize::MAX, usize::MAX); 3]; 2 * n];
    for (m, t) in tri.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if tri.is_constraint(a, b) {
                pairing[2 * m][k] = (2 * m + 1, 2 - k);
                pairing[2 * m + 1][2 - k] = (2 * m, k);
                continue;
            }
            let (m2, j) = tri
                .triangles
                .iter()
                .enumerate()
                .find_map(|(m2, u)| {
                    (0..3).find(|&j| u[j] == b && u[(j + 1) % 3] == a).map(|j| (m2, j))
                })
                .ok_or_else(|| Error::InvalidPolygon(format!("interior edge {a}-{b} has one side")))?;
            pairing[2 * m][k] = (2 * m2, j);
            pairing[2 * m + 1][2 - k] = (2 * m2 + 1, 2 - j);
        }
    }
    FlatSurface::from_parts(triangles, &pairing, mirrored, Some(p.clone()), &sources)
}

/// Double a polygon and convert to float charts.
pub fn double_f64(p: &Polygon) -> Result<FlatSurface<f64>> {
    Ok(double(p)?.to_f64_surface())
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Serialize, Deserialize)]
struct GluingJson {
    tri: usize,
    edge: usize,
    to_tri: usize,
    to_edge: usize,
}

impl<S: Scalar> FlatSurface<S> {
    pub fn to_json_value(&self) -> Value {
        let pt = |p: &Vec2<S>| json!([p.x.to_json(), p.y.to_json()]);
        let triangles: Vec<Value> = self
            .triangles
            .iter()
            .map(|t| json!([pt(&t[0]), pt(&t[1]), pt(&t[2])]))
            .collect();
        let mut gluings = Vec::new();
        for (t, row) in self.gluings.iter().enumerate() {
            for (k, g) in row.iter().enumerate() {
                if (t, k) < (g.tri, g.edge) {
                    gluings.push(json!({
                        "tri": t, "edge": k, "to_tri": g.tri, "to_edge": g.edge,
                        "rotation": g.map.rotation_angle(),
                        "map": {"c": g.map.c.to_json(), "s": g.map.s.to_json(),
                                "tx": g.map.tx.to_json(), "ty": g.map.ty.to_json()},
                    }));
                }
            }
        }
        let cones: Vec<Value> = self
            .cone_points
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let (t, k) = self.classes[c.class].corners[0];
                json!({
                    "id": i,
                    "class": c.class,
                    "angle": c.angle,
                    "angle_over_pi": c.angle_over_pi.map(|(p, q)| if q == 1 { format!("{p}") } else { format!("{p}/{q}") }),
                    "pi_over_n": c.pi_over_n,
                    "source": c.source,
                    "corner": [t, k],
                    "position": pt(&self.triangles[t][k]),
                })
            })
            .collect();
        let mut out = json!({
            "exact": S::EXACT,
            "area": self.area.to_json(),
            "euler_characteristic": self.euler_characteristic(),
            "triangles": triangles,
            "gluings": gluings,
            "cone_points": cones,
            "mirrored": self.mirrored,
        });
        if let Some(p) = &self.polygon {
            out["polygon"] = p.to_json_value();
        }
        out
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::Parse(m.to_string());
        let tris = v
            .get("triangles")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing \"triangles\""))?;
        let mut triangles = Vec::with_capacity(tris.len());
        for t in tris {
            let pts = t.as_array().filter(|a| a.len() == 3).ok_or_else(|| bad("triangle needs 3 points"))?;
            let mut out = Vec::with_capacity(3);
            for p in pts {
                let xy = p.as_array().filter(|a| a.len() == 2).ok_or_else(|| bad("point must be [x, y]"))?;
                let x = S::from_json(&xy[0]).ok_or_else(|| bad("bad coordinate"))?;
                let y = S::from_json(&xy[1]).ok_or_else(|| bad("bad coordinate"))?;
                out.push(Vec2::new(x, y));
            }
            triangles.push(<[Vec2<S>; 3]>::try_from(out).expect("three points"));
        }
        let glue: Vec<GluingJson> = serde_json::from_value(v.get("gluings").cloned().unwrap_or(Value::Null))
            .map_err(|e| Error::Parse(format!("gluings: {e}")))?;
        let nt = triangles.len();
        let mut pairing = vec![[(usize::MAX, usize::MAX); 3]; nt];
        for g in glue {
            if g.tri >= nt || g.to_tri >= nt || g.edge > 2 || g.to_edge > 2 {
                return Err(bad("gluing index out of range"));
            }
            pairing[g.tri][g.edge] = (g.to_tri, g.to_edge);
            pairing[g.to_tri][g.to_edge] = (g.tri, g.edge);
        }
        let mirrored: Vec<bool> = v
            .get("mirrored")
            .and_then(|m| serde_json::from_value(m.clone()).ok())
            .unwrap_or_default();
        let polygon = match v.get("polygon") {
            Some(p) if !p.is_null() => Some(Polygon::from_json_value(p)?),
            _ => None,
        };
        // Recover vertex provenance from the polygon when both sheets are present.
        let sources: Vec<[Option<VertexRef>; 3]> = match &polygon {
            Some(poly) if mirrored.len() == nt => {
                let verts = poly.vertices();
                triangles
                    .iter()
                    .zip(&mirrored)
                    .map(|(t, &m)| {
                        std::array::from_fn(|k| {
                            let q = t[k].to_f64();
                            let q = if m { [q[0], -q[1]] } else { q };
                            verts.iter().find(|(_, p)| {
                                let p = p.to_f64();
                                (p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12
                            }).map(|(r, _)| *r)
                        })
                    })
                    .collect()
            }
            _ => Vec::new(),
        };
        FlatSurface::from_parts(triangles, &pairing, mirrored, polygon, &sources)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polygon::corpus;

    fn angles_over_pi(s: &FlatSurface<Exact>) -> Vec<(i64, i64)> {
        let mut v: Vec<_> = s.cone_points.iter().map(|c| c.angle_over_pi.unwrap()).collect();
        v.sort();
        v
    }

    #[test]
    fn doubled_square_is_a_pillowcase() {
        let s = double(&corpus::unit_square()).unwrap();
        assert_eq!(angles_over_pi(&s), vec![(1, 1); 4]);
        assert_eq!(s.area, Exact::from_i64(2));
        assert_eq!(s.euler_characteristic(), 2);
        assert!((s.curvature_sum() - 4.0 * PI).abs() < 1e-12);
        assert!(s.cone_points.iter().all(|c| c.pi_over_n));
    }

    #[test]
    fn doubled_l_shape_has_one_three_pi_cone() {
        let s = double(&corpus::l_shape()).unwrap();
        assert_eq!(angles_over_pi(&s), vec![(1, 1), (1, 1), (1, 1), (1, 1), (1, 1), (3, 1)]);
        assert_eq!(s.euler_characteristic(), 2);
        assert!(s.gauss_bonnet_defect().abs() < 1e-9);
    }

    #[test]
    fn slit_square_doubles_to_a_torus() {
        let s = double(&corpus::square_with_slit()).unwrap();
        assert_eq!(angles_over_pi(&s), vec![(1, 1), (1, 1), (1, 1), (1, 1), (4, 1), (4, 1)]);
        assert_eq!(s.euler_characteristic(), 0);
        assert!(s.gauss_bonnet_defect().abs() < 1e-9);
    }

    #[test]
    fn square_with_hole_doubles_to_a_torus() {
        let s = double(&corpus::square_with_hole()).unwrap();
        assert_eq!(s.euler_characteristic(), 0);
        assert_eq!(s.cone_points.len(), 8);
        assert!(s.gauss_bonnet_defect().abs() < 1e-9);
    }

    #[test]
    fn straight_vertices_are_smoothed_out() {
        let p = Polygon::from_text(&[["0", "0"], ["1", "0"], ["2", "0"], ["2", "1"], ["0", "1"]]).unwrap();
        let s = double(&p).unwrap();
        assert_eq!(s.cone_points.len(), 4);
        assert_eq!(s.classes.len(), 5);
    }

    #[test]
    fn gluings_are_involutive() {
        let s = double(&corpus::pentagon()).unwrap();
        for (t, row) in s.gluings.iter().enumerate() {
            for (k, g) in row.iter().enumerate() {
                let back = &s.gluings[g.tri][g.edge];
                assert_eq!((back.tri, back.edge), (t, k));
                assert_eq!(back.map.compose(&g.map), Isometry::identity());
                // endpoints go to endpoints
                assert_eq!(g.map.apply(&s.triangles[t][k]), s.triangles[g.tri][(g.edge + 1) % 3]);
            }
        }
    }

    #[test]
    fn json_round_trip_exact_and_float() {
        let s = double(&corpus::square_with_slit()).unwrap();
        let v = s.to_json_value();
        let back = FlatSurface::<Exact>::from_json_value(&v).unwrap();
        assert_eq!(back.triangles, s.triangles);
        assert_eq!(back.cone_points, s.cone_points);
        let f = FlatSurface::<f64>::from_json_value(&v).unwrap();
        assert_eq!(f.cone_points.len(), 6);
        let fours = v["cone_points"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|c| c["angle_over_pi"] == json!("4"))
            .count();
        assert_eq!(fours, 2);
    }

    #[test]
    fn invalid_polygon_is_rejected() {
        assert!(matches!(double(&corpus::bowtie()), Err(Error::InvalidPolygon(_))));
    }
}
