//! Customer location density on the unit circle.
//!
//! Positions live in [0, 1) with the depot at 0 and movement clockwise
//! toward 1. Densities are piecewise polynomials of degree at most three,
//! which keeps every integral the analysis needs in closed form: the CDF,
//! circular (wrap-around) integrals, extrema, and inverse-CDF sampling all
//! reduce to exact segment arithmetic.

use crate::error::{Error, Result};
use crate::model::poly::Poly;

/// Clockwise distance from `a` to `b` on the circle; zero when `a == b`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    if a <= b {
        b - a
    } else {
        1.0 - a + b
    }
}

/// Maps a position reported as 1.0 back to the depot at 0.0.
pub fn fold_position(x: f64) -> f64 {
    if x >= 1.0 {
        x - 1.0
    } else {
        x
    }
}

#[derive(Debug, Clone)]
struct Segment {
    start: f64,
    end: f64,
    poly: Poly,
    cdf_at_start: f64,
}

/// Piecewise-polynomial probability density π on [0, 1).
#[derive(Debug, Clone)]
pub struct LocationDensity {
    segments: Vec<Segment>,
}

impl LocationDensity {
    /// The uniform density, π ≡ 1.
    pub fn uniform() -> Self {
        LocationDensity {
            segments: vec![Segment {
                start: 0.0,
                end: 1.0,
                poly: Poly::constant(1.0),
                cdf_at_start: 0.0,
            }],
        }
    }

    /// Builds a density from `(start, coefficients)` pairs. Coefficients are
    /// in the global coordinate (`π(x) = c0 + c1·x + c2·x² + c3·x³` on the
    /// segment), starts must begin at 0 and increase strictly, the density
    /// must be nonnegative, and it must integrate to one over the circle.
    pub fn piecewise(pieces: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidConfig("density needs at least one segment".into()));
        }
        if pieces[0].0 != 0.0 {
            return Err(Error::InvalidConfig("first density segment must start at 0".into()));
        }
        let mut segments = Vec::with_capacity(pieces.len());
        for (idx, (start, coeffs)) in pieces.iter().enumerate() {
            if !start.is_finite() || *start < 0.0 || *start >= 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "segment start {start} outside [0,1)"
                )));
            }
            if coeffs.is_empty() || coeffs.len() > 4 {
                return Err(Error::InvalidConfig(
                    "segment polynomials must have 1 to 4 coefficients (degree ≤ 3)".into(),
                ));
            }
            if coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidConfig("non-finite density coefficient".into()));
            }
            let end = pieces.get(idx + 1).map_or(1.0, |p| p.0);
            if end <= *start {
                return Err(Error::InvalidConfig(
                    "segment starts must be strictly increasing".into(),
                ));
            }
            segments.push(Segment {
                start: *start,
                end,
                poly: Poly(coeffs.clone()),
                cdf_at_start: 0.0,
            });
        }
        let mut acc = 0.0;
        for seg in &mut segments {
            let (lo, _) = seg.poly.extrema(seg.start, seg.end);
            if lo < -1e-12 {
                return Err(Error::InvalidConfig(format!(
                    "density is negative (min {lo:.3e}) on segment starting at {}",
                    seg.start
                )));
            }
            seg.cdf_at_start = acc;
            acc += seg.poly.integral(seg.start, seg.end);
        }
        if (acc - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "density integrates to {acc}, expected 1 (tolerance 1e-12)"
            )));
        }
        Ok(LocationDensity { segments })
    }

    /// π(x) for x in [0, 1); an input of exactly 1 is folded to 0.
    pub fn density(&self, x: f64) -> f64 {
        let x = fold_position(x);
        let seg = self.segment_at(x);
        seg.poly.eval(x)
    }

    /// Left limit of π at the depot, i.e. the final segment's value at 1.
    /// Differs from `density(0.0)` when the density jumps across the seam.
    pub(crate) fn density_left_limit_at_one(&self) -> f64 {
        self.segments.last().expect("nonempty").poly.eval(1.0)
    }

    /// Cumulative distribution Π(x) = ∫₀ˣ π for x in [0, 1].
    pub fn cdf(&self, x: f64) -> f64 {
        if x >= 1.0 {
            return 1.0;
        }
        if x <= 0.0 {
            return 0.0;
        }
        let seg = self.segment_at(x);
        seg.cdf_at_start + seg.poly.integral(seg.start, x)
    }

    /// Circular integral ∫ₐᵇ* π: the ordinary integral when a ≤ b, the
    /// wrap-around integral through the depot when a > b, and 0 when a = b
    /// (zero-arc convention).
    pub fn circular_integral(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (fold_position(a), fold_position(b));
        if a == b {
            0.0
        } else if a < b {
            self.cdf(b) - self.cdf(a)
        } else {
            1.0 - self.cdf(a) + self.cdf(b)
        }
    }

    /// Circular integral of the mix `c1·π(x) + c0`, exact via the CDF.
    pub fn circular_integral_mix(&self, c1: f64, c0: f64, a: f64, b: f64) -> f64 {
        c1 * self.circular_integral(a, b) + c0 * circle_distance(fold_position(a), fold_position(b))
    }

    /// Inverse-CDF sample: the position x with Π(x) = u, for u in [0, 1).
    pub fn sample(&self, u: f64) -> f64 {
        debug_assert!((0.0..1.0).contains(&u));
        let idx = self
            .segments
            .partition_point(|s| s.cdf_at_start <= u)
            .saturating_sub(1);
        let seg = &self.segments[idx];
        // Solve F(x) - F(start) = u - cdf_at_start on [start, end]; the
        // antiderivative is nondecreasing, so one bracketed root exists.
        let target = u - seg.cdf_at_start;
        let anti = seg.poly.antiderivative();
        let shifted = anti.shift(-(anti.eval(seg.start) + target));
        let x = shifted
            .roots_in(seg.start, seg.end)
            .into_iter()
            .next()
            .unwrap_or(seg.end);
        fold_position(x.clamp(seg.start, seg.end))
    }

    /// Supremum of π over the circle.
    pub fn max_density(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.poly.extrema(s.start, s.end).1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Infimum of π over the circle.
    pub fn min_density(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.poly.extrema(s.start, s.end).0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Segment breakpoints (including 0 and 1), for quadrature splitting.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.segments.iter().map(|s| s.start).collect();
        pts.push(1.0);
        pts
    }

    /// Min and max of π over a plain interval [a, b] ⊆ [0, 1].
    pub(crate) fn range_extrema(&self, a: f64, b: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for seg in &self.segments {
            let s = seg.start.max(a);
            let e = seg.end.min(b);
            if e <= s {
                continue;
            }
            let (l, h) = seg.poly.extrema(s, e);
            lo = lo.min(l);
            hi = hi.max(h);
        }
        if lo > hi {
            let v = self.density(a.min(1.0 - 1e-15));
            (v, v)
        } else {
            (lo, hi)
        }
    }

    /// ∫ₐᵇ |π(u) − c| du over a plain interval, exact up to root isolation.
    pub(crate) fn integral_abs_dev(&self, c: f64, a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for seg in &self.segments {
            let s = seg.start.max(a);
            let e = seg.end.min(b);
            if e <= s {
                continue;
            }
            total += seg.poly.shift(-c).integral_abs(s, e);
        }
        total
    }


    /// Defining data for hashing into a parameter fingerprint.
    pub(crate) fn raw_segments(&self) -> Vec<(f64, Vec<f64>)> {
        self.segments
            .iter()
            .map(|s| (s.start, s.poly.0.clone()))
            .collect()
    }

    fn segment_at(&self, x: f64) -> &Segment {
        let idx = self
            .segments
            .partition_point(|s| s.start <= x)
            .saturating_sub(1);
        &self.segments[idx]
    }
}
