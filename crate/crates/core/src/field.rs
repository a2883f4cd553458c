//! Common interface of every harmonic field the toolkit produces.

use crate::geometry::{Mat2, Point, Vec2};

pub trait HarmonicField {
    fn value(&self, x: &Point) -> f64;
    fn gradient(&self, x: &Point) -> Vec2;
    fn hessian(&self, x: &Point) -> Mat2;
}

impl<F: HarmonicField + ?Sized> HarmonicField for &F {
    fn value(&self, x: &Point) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &Point) -> Vec2 {
        (**self).gradient(x)
    }
    fn hessian(&self, x: &Point) -> Mat2 {
        (**self).hessian(x)
    }
}
