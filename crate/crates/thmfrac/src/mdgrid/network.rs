//! Fracture network description: straight segments inside an axis-aligned
//! domain box.

use nalgebra::Vector2;

use super::GridError;
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy)]
pub struct DomainBox<F> {
    pub min: Vector2<F>,
    pub max: Vector2<F>,
}

impl<F: Scalar> DomainBox<F> {
    pub fn new(min: Vector2<F>, max: Vector2<F>) -> Self {
        Self { min, max }
    }

    pub fn unit() -> Self {
        Self {
            min: Vector2::zeros(),
            max: Vector2::new(F::one(), F::one()),
        }
    }

    pub fn extent(&self) -> Vector2<F> {
        self.max - self.min
    }

    pub fn diagonal(&self) -> F {
        self.extent().norm()
    }

    pub fn contains(&self, p: &Vector2<F>, tol: F) -> bool {
        p.x >= self.min.x - tol
            && p.x <= self.max.x + tol
            && p.y >= self.min.y - tol
            && p.y <= self.max.y + tol
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Segment<F> {
    pub start: Vector2<F>,
    pub end: Vector2<F>,
}

impl<F: Scalar> Segment<F> {
    pub fn new(start: Vector2<F>, end: Vector2<F>) -> Self {
        Self { start, end }
    }

    pub fn length(&self) -> F {
        (self.end - self.start).norm()
    }
}

#[derive(Debug, Clone)]
pub struct FractureNetwork<F> {
    pub segments: Vec<Segment<F>>,
    pub domain: DomainBox<F>,
}

impl<F: Scalar> FractureNetwork<F> {
    pub fn new(domain: DomainBox<F>, segments: Vec<Segment<F>>) -> Self {
        Self { segments, domain }
    }

    pub fn empty(domain: DomainBox<F>) -> Self {
        Self {
            segments: Vec::new(),
            domain,
        }
    }

    /// Checks the network invariants: positive segment lengths, segments
    /// inside the closed domain box, and no collinear overlapping pairs.
    pub fn validate(&self) -> Result<(), GridError> {
        let tol = self.domain.diagonal() * lit::<F>(1e-12);
        for (i, s) in self.segments.iter().enumerate() {
            if s.length() <= tol {
                return Err(GridError::DegenerateGeometry(format!(
                    "segment {i} has zero length"
                )));
            }
            if !self.domain.contains(&s.start, tol) || !self.domain.contains(&s.end, tol) {
                return Err(GridError::DegenerateGeometry(format!(
                    "segment {i} leaves the domain box"
                )));
            }
        }
        for i in 0..self.segments.len() {
            for j in (i + 1)..self.segments.len() {
                if segments_overlap(&self.segments[i], &self.segments[j], tol) {
                    return Err(GridError::DegenerateGeometry(format!(
                        "segments {i} and {j} overlap along a sub-segment"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// True when two collinear segments share more than a single point.
fn segments_overlap<F: Scalar>(a: &Segment<F>, b: &Segment<F>, tol: F) -> bool {
    let da = a.end - a.start;
    let db = b.end - b.start;
    let cross = da.x * db.y - da.y * db.x;
    if cross.abs() > tol * da.norm().max(db.norm()) {
        return false; // not parallel
    }
    // parallel: check collinearity
    let dab = b.start - a.start;
    let cross2 = da.x * dab.y - da.y * dab.x;
    if cross2.abs() > tol * da.norm().max(dab.norm() + tol) {
        return false; // parallel but offset
    }
    // collinear: measure parameter overlap along a
    let len2 = da.norm_squared();
    let t0 = da.dot(&(b.start - a.start)) / len2;
    let t1 = da.dot(&(b.end - a.start)) / len2;
    let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
    let eps = tol / da.norm();
    hi > eps && lo < F::one() - eps && (hi.min(F::one()) - lo.max(F::zero())) > eps
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(a: (f64, f64), b: (f64, f64)) -> Segment<f64> {
        Segment::new(Vector2::new(a.0, a.1), Vector2::new(b.0, b.1))
    }

    #[test]
    fn crossing_segments_are_fine() {
        let net = FractureNetwork::new(
            DomainBox::unit(),
            vec![seg((0.25, 0.5), (0.75, 0.5)), seg((0.5, 0.25), (0.5, 0.75))],
        );
        net.validate().unwrap();
    }

    #[test]
    fn overlapping_collinear_segments_rejected() {
        let net = FractureNetwork::new(
            DomainBox::unit(),
            vec![seg((0.25, 0.5), (0.75, 0.5)), seg((0.5, 0.5), (0.9, 0.5))],
        );
        assert!(net.validate().is_err());
    }

    #[test]
    fn zero_length_segment_rejected() {
        let net = FractureNetwork::new(DomainBox::unit(), vec![seg((0.5, 0.5), (0.5, 0.5))]);
        assert!(net.validate().is_err());
    }

    #[test]
    fn touching_segments_allowed() {
        // sharing one endpoint is an isolated intersection point
        let net = FractureNetwork::new(
            DomainBox::unit(),
            vec![seg((0.25, 0.25), (0.5, 0.5)), seg((0.5, 0.5), (0.75, 0.25))],
        );
        net.validate().unwrap();
    }
}
