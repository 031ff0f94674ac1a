//! Planar vectors, orientation predicates and orientation-preserving isometries.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec2<S> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Vec2<S> {
    pub fn new(x: S, y: S) -> Self {
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2::new(S::zero(), S::zero())
    }

    pub fn from_f64(x: f64, y: f64) -> Self {
        Vec2::new(S::from_f64(x), S::from_f64(y))
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [self.x.to_f64(), self.y.to_f64()]
    }

    pub fn dot(&self, o: &Self) -> S {
        self.x.clone() * o.x.clone() + self.y.clone() * o.y.clone()
    }

    /// z-component of the 3D cross product.
    pub fn cross(&self, o: &Self) -> S {
        self.x.clone() * o.y.clone() - self.y.clone() * o.x.clone()
    }

    pub fn norm2(&self) -> S {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm2().to_f64().sqrt()
    }

    pub fn scale(&self, k: &S) -> Self {
        Vec2::new(self.x.clone() * k.clone(), self.y.clone() * k.clone())
    }

    /// Counterclockwise quarter turn.
    pub fn perp(&self) -> Self {
        Vec2::new(-self.y.clone(), self.x.clone())
    }

    pub fn is_zero_tol(&self, tol: f64) -> bool {
        self.x.is_zero_tol(tol) && self.y.is_zero_tol(tol)
    }

    pub fn approx_eq(&self, o: &Self, tol: f64) -> bool {
        (self.clone() - o.clone()).is_zero_tol(tol)
    }

    pub fn lerp(&self, o: &Self, t: &S) -> Self {
        self.clone() + (o.clone() - self.clone()).scale(t)
    }
}

impl Vec2<crate::scalar::Exact> {
    pub fn to_scalar<T: Scalar>(&self) -> Vec2<T> {
        Vec2::new(T::from_exact(&self.x), T::from_exact(&self.y))
    }
}

impl<S: Scalar> Add for Vec2<S> {
    type Output = Vec2<S>;
    fn add(self, o: Self) -> Self {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl<S: Scalar> Sub for Vec2<S> {
    type Output = Vec2<S>;
    fn sub(self, o: Self) -> Self {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl<S: Scalar> Neg for Vec2<S> {
    type Output = Vec2<S>;
    fn neg(self) -> Self {
        Vec2::new(-self.x, -self.y)
    }
}

impl<S: Scalar> Mul<S> for Vec2<S> {
    type Output = Vec2<S>;
    fn mul(self, k: S) -> Self {
        Vec2::new(self.x * k.clone(), self.y * k)
    }
}

/// Orientation of `c` relative to the directed line `a -> b`.
pub fn orient<S: Scalar>(a: &Vec2<S>, b: &Vec2<S>, c: &Vec2<S>, tol: f64) -> Ordering {
    (b.clone() - a.clone()).cross(&(c.clone() - a.clone())).sign_tol(tol)
}

/// Signed area (shoelace) of a closed polyline.
pub fn signed_area<S: Scalar>(pts: &[Vec2<S>]) -> S {
    let n = pts.len();
    let mut acc = S::zero();
    for i in 0..n {
        acc = acc + pts[i].cross(&pts[(i + 1) % n]);
    }
    acc.half()
}

/// Do the closed segments `[a,b]` and `[c,d]` properly cross (interiors meet in one point)?
pub fn segments_cross_properly<S: Scalar>(
    a: &Vec2<S>,
    b: &Vec2<S>,
    c: &Vec2<S>,
    d: &Vec2<S>,
    tol: f64,
) -> bool {
    let o1 = orient(a, b, c, tol);
    let o2 = orient(a, b, d, tol);
    let o3 = orient(c, d, a, tol);
    let o4 = orient(c, d, b, tol);
    o1 != Ordering::Equal
        && o2 != Ordering::Equal
        && o3 != Ordering::Equal
        && o4 != Ordering::Equal
        && o1 != o2
        && o3 != o4
}

/// Is `p` on the closed segment `[a,b]`?
pub fn on_segment<S: Scalar>(p: &Vec2<S>, a: &Vec2<S>, b: &Vec2<S>, tol: f64) -> bool {
    if orient(a, b, p, tol) != Ordering::Equal {
        return false;
    }
    let ab = b.clone() - a.clone();
    let t = (p.clone() - a.clone()).dot(&ab);
    t.sign_tol(tol) != Ordering::Less && (ab.norm2() - t).sign_tol(tol) != Ordering::Less
}

/// Do closed segments `[a,b]` and `[c,d]` share any point?
pub fn segments_intersect<S: Scalar>(
    a: &Vec2<S>,
    b: &Vec2<S>,
    c: &Vec2<S>,
    d: &Vec2<S>,
    tol: f64,
) -> bool {
    segments_cross_properly(a, b, c, d, tol)
        || on_segment(c, a, b, tol)
        || on_segment(d, a, b, tol)
        || on_segment(a, c, d, tol)
        || on_segment(b, c, d, tol)
}

/// Squared distance from `p` to the closed segment `[a,b]`, with the closest parameter.
pub fn point_segment_dist2<S: Scalar>(p: &Vec2<S>, a: &Vec2<S>, b: &Vec2<S>) -> (S, S) {
    let ab = b.clone() - a.clone();
    let l2 = ab.norm2();
    if l2.sign_tol(0.0) == Ordering::Equal {
        return ((p.clone() - a.clone()).norm2(), S::zero());
    }
    let mut t = (p.clone() - a.clone()).dot(&ab) / l2;
    if t < S::zero() {
        t = S::zero();
    } else if t > S::one() {
        t = S::one();
    }
    let q = a.lerp(b, &t);
    ((p.clone() - q).norm2(), t)
}

/// Orientation-preserving isometry `p -> R p + t`, `R = [[c, -s], [s, c]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometry<S> {
    pub c: S,
    pub s: S,
    pub tx: S,
    pub ty: S,
}

impl<S: Scalar> Isometry<S> {
    pub fn identity() -> Self {
        Isometry {
            c: S::one(),
            s: S::zero(),
            tx: S::zero(),
            ty: S::zero(),
        }
    }

    pub fn translation(t: Vec2<S>) -> Self {
        Isometry {
            c: S::one(),
            s: S::zero(),
            tx: t.x,
            ty: t.y,
        }
    }

    pub fn apply(&self, p: &Vec2<S>) -> Vec2<S> {
        let r = self.apply_vec(p);
        Vec2::new(r.x + self.tx.clone(), r.y + self.ty.clone())
    }

    pub fn apply_vec(&self, v: &Vec2<S>) -> Vec2<S> {
        Vec2::new(
            self.c.clone() * v.x.clone() - self.s.clone() * v.y.clone(),
            self.s.clone() * v.x.clone() + self.c.clone() * v.y.clone(),
        )
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry<S>) -> Isometry<S> {
        let c = self.c.clone() * other.c.clone() - self.s.clone() * other.s.clone();
        let s = self.s.clone() * other.c.clone() + self.c.clone() * other.s.clone();
        let t = self.apply(&Vec2::new(other.tx.clone(), other.ty.clone()));
        Isometry {
            c,
            s,
            tx: t.x,
            ty: t.y,
        }
    }

    pub fn inverse(&self) -> Isometry<S> {
        let rt = Isometry {
            c: self.c.clone(),
            s: -self.s.clone(),
            tx: S::zero(),
            ty: S::zero(),
        };
        let t = rt.apply_vec(&Vec2::new(self.tx.clone(), self.ty.clone()));
        Isometry {
            c: rt.c,
            s: rt.s,
            tx: -t.x,
            ty: -t.y,
        }
    }

    pub fn rotation_angle(&self) -> f64 {
        self.s.to_f64().atan2(self.c.to_f64())
    }

    pub fn has_identity_rotation(&self, tol: f64) -> bool {
        (self.c.clone() - S::one()).is_zero_tol(tol) && self.s.is_zero_tol(tol)
    }

    pub fn approx_eq(&self, o: &Self, tol: f64) -> bool {
        (self.c.clone() - o.c.clone()).is_zero_tol(tol)
            && (self.s.clone() - o.s.clone()).is_zero_tol(tol)
            && (self.tx.clone() - o.tx.clone()).is_zero_tol(tol)
            && (self.ty.clone() - o.ty.clone()).is_zero_tol(tol)
    }

    /// The unique orientation-preserving isometry sending `a -> a2` and `b -> b2`
    /// (the segments must have equal length).
    pub fn from_segment_pair(a: &Vec2<S>, b: &Vec2<S>, a2: &Vec2<S>, b2: &Vec2<S>) -> Self {
        let u = b.clone() - a.clone();
        let v = b2.clone() - a2.clone();
        let n = u.norm2();
        let c = u.dot(&v) / n.clone();
        let s = u.cross(&v) / n;
        let rot = Isometry {
            c,
            s,
            tx: S::zero(),
            ty: S::zero(),
        };
        let t = a2.clone() - rot.apply_vec(a);
        Isometry { tx: t.x, ty: t.y, ..rot }
    }
}

impl Isometry<crate::scalar::Exact> {
    pub fn to_scalar<T: Scalar>(&self) -> Isometry<T> {
        Isometry {
            c: T::from_exact(&self.c),
            s: T::from_exact(&self.s),
            tx: T::from_exact(&self.tx),
            ty: T::from_exact(&self.ty),
        }
    }
}

/// Angle of the ccw rotation taking direction `u` to direction `v`, in `[0, 2π)`.
pub fn ccw_angle(u: [f64; 2], v: [f64; 2]) -> f64 {
    let cr = u[0] * v[1] - u[1] * v[0];
    let dt = u[0] * v[0] + u[1] * v[1];
    let a = cr.atan2(dt);
    if a < 0.0 {
        a + std::f64::consts::TAU
    } else {
        a
    }
}

/// Exact comparison of the polar angles of two nonzero vectors in `[0, 2π)`.
pub fn cmp_polar<S: Scalar>(u: &Vec2<S>, v: &Vec2<S>, tol: f64) -> Ordering {
    fn half<S: Scalar>(w: &Vec2<S>, tol: f64) -> u8 {
        let ys = w.y.sign_tol(tol);
        if ys == Ordering::Greater || (ys == Ordering::Equal && w.x.sign_tol(tol) == Ordering::Greater) {
            0
        } else {
            1
        }
    }
    let (hu, hv) = (half(u, tol), half(v, tol));
    if hu != hv {
        return hu.cmp(&hv);
    }
    match u.cross(v).sign_tol(tol) {
        Ordering::Greater => Ordering::Less,
        Ordering::Less => Ordering::Greater,
        Ordering::Equal => Ordering::Equal,
    }
}
