//! Dense univariate polynomials over f64, used for exact arithmetic on the
//! piecewise-polynomial location densities: integrals of density segments,
//! products with mixture weights, and root isolation for inverse-CDF
//! sampling all reduce to closed-form operations here.

/// Polynomial `coeffs[0] + coeffs[1]·x + coeffs[2]·x² + …` in the global
/// circle coordinate.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Poly(pub(crate) Vec<f64>);

impl Poly {
    pub(crate) fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Antiderivative with zero constant term.
    pub(crate) fn antiderivative(&self) -> Poly {
        let mut out = Vec::with_capacity(self.0.len() + 1);
        out.push(0.0);
        for (i, &c) in self.0.iter().enumerate() {
            out.push(c / (i as f64 + 1.0));
        }
        Poly(out)
    }

    pub(crate) fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly::constant(0.0);
        }
        Poly(
            self.0[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| c * (i as f64 + 1.0))
                .collect(),
        )
    }

    /// Definite integral over [a, b].
    pub(crate) fn integral(&self, a: f64, b: f64) -> f64 {
        let anti = self.antiderivative();
        anti.eval(b) - anti.eval(a)
    }



    pub(crate) fn shift(&self, c: f64) -> Poly {
        let mut out = self.clone();
        if out.0.is_empty() {
            out.0.push(c);
        } else {
            out.0[0] += c;
        }
        out
    }


    /// Minimum and maximum over [a, b], found from endpoint and stationary
    /// point values (exact for the cubic segments used by densities).
    pub(crate) fn extrema(&self, a: f64, b: f64) -> (f64, f64) {
        let mut lo = self.eval(a).min(self.eval(b));
        let mut hi = self.eval(a).max(self.eval(b));
        for r in self.derivative().roots_in(a, b) {
            let v = self.eval(r);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Real roots inside [a, b], by monotone bracketing between stationary
    /// points and bisection-safeguarded Newton. Good to ~1e-14; degree is
    /// small (≤ 4) everywhere the crate calls this.
    pub(crate) fn roots_in(&self, a: f64, b: f64) -> Vec<f64> {
        let deg = self.0.iter().rposition(|&c| c != 0.0).unwrap_or(0);
        if deg == 0 {
            return Vec::new();
        }
        if deg == 1 {
            let r = -self.0[0] / self.0[1];
            return if r >= a && r <= b { vec![r] } else { Vec::new() };
        }
        // Partition [a, b] at the derivative's roots; each piece is monotone.
        let mut cuts = vec![a];
        cuts.extend(self.derivative().roots_in(a, b));
        cuts.push(b);
        cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let mut roots = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo {
                continue;
            }
            if let Some(r) = self.bracketed_root(lo, hi) {
                if roots.last().is_none_or(|&p| (r - p).abs() > 1e-13) {
                    roots.push(r);
                }
            }
        }
        roots
    }

    /// Root of a monotone stretch [lo, hi], or None if no sign change.
    fn bracketed_root(&self, mut lo: f64, mut hi: f64) -> Option<f64> {
        let (flo, fhi) = (self.eval(lo), self.eval(hi));
        if flo == 0.0 {
            return Some(lo);
        }
        if fhi == 0.0 {
            return Some(hi);
        }
        if flo.signum() == fhi.signum() {
            return None;
        }
        let mut neg_at_lo = flo < 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = self.eval(mid);
            if fm == 0.0 || hi - lo < 1e-15 {
                return Some(mid);
            }
            if (fm < 0.0) == neg_at_lo {
                lo = mid;
            } else {
                hi = mid;
            }
            neg_at_lo = self.eval(lo) < 0.0;
        }
        Some(0.5 * (lo + hi))
    }

    /// ∫ₐᵇ |p(x)| dx, exact up to root-finding accuracy: the interval is
    /// split at sign changes and each piece integrated with its sign.
    pub(crate) fn integral_abs(&self, a: f64, b: f64) -> f64 {
        let mut cuts = vec![a];
        cuts.extend(self.roots_in(a, b));
        cuts.push(b);
        cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let mut total = 0.0;
        for w in cuts.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            total += self.integral(w[0], w[1]).abs();
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eval_and_integral() {
        // p(x) = 1 + 2x + 3x²
        let p = Poly(vec![1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(p.eval(2.0), 17.0);
        assert_abs_diff_eq!(p.integral(0.0, 1.0), 1.0 + 1.0 + 1.0);
    }

    #[test]
    fn cubic_roots() {
        // (x - 0.2)(x - 0.5)(x - 0.8) on [0, 1]
        let p = Poly(vec![-0.08, 0.66, -1.5, 1.0]);
        let roots = p.roots_in(0.0, 1.0);
        assert_eq!(roots.len(), 3);
        assert_abs_diff_eq!(roots[0], 0.2, epsilon = 1e-10);
        assert_abs_diff_eq!(roots[1], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(roots[2], 0.8, epsilon = 1e-10);
    }

    #[test]
    fn absolute_integral_splits_at_sign_changes() {
        // x - 0.5 on [0, 1]: ∫|x−0.5| = 0.25
        let p = Poly(vec![-0.5, 1.0]);
        assert_abs_diff_eq!(p.integral_abs(0.0, 1.0), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn extrema_of_quadratic() {
        // 1 - (x-0.5)² on [0,1]: max 1 at 0.5, min 0.75 at ends
        let p = Poly(vec![0.75, 1.0, -1.0]);
        let (lo, hi) = p.extrema(0.0, 1.0);
        assert_abs_diff_eq!(lo, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-12);
    }
}
