//! Small numeric routines: compensated summation and adaptive quadrature.

/// Neumaier-compensated sum of a slice, in slice order.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean of a slice computed so that the result does not depend on the order
/// of the inputs: the addends are sorted into a canonical order before a
/// compensated sum. Used where the contract promises bit-identical output
/// under permutation of ensemble members.
pub fn order_insensitive_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    compensated_sum(&sorted) / values.len() as f64
}

fn simpson(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (f(a) + 4.0 * fm + f(b)), fm)
}

fn adaptive_step(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, fm) = simpson(&mut f, a, b);
    adaptive_step(&mut f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Cumulative integral table of `f` over `[lo, hi]` on a uniform grid.
///
/// `values[k]` holds the integral from `lo` to `lo + k*step`, each cell
/// integrated adaptively; between grid points the remainder is integrated on
/// demand, so lookups stay accurate to roughly the cell tolerance.
#[derive(Debug, Clone)]
pub struct CumulativeIntegral {
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

impl CumulativeIntegral {
    pub fn build(f: &(impl Fn(f64) -> f64 + ?Sized), lo: f64, hi: f64, cells: usize, cell_tol: f64) -> Self {
        assert!(hi > lo && cells > 0);
        let step = (hi - lo) / cells as f64;
        let mut values = Vec::with_capacity(cells + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for k in 0..cells {
            let a = lo + k as f64 * step;
            acc += adaptive_simpson(|x| f(x), a, a + step, cell_tol);
            values.push(acc);
        }
        CumulativeIntegral { lo, step, values }
    }

    /// Integral of `f` from the table origin to `x` (clamped to the table range).
    pub fn eval(&self, f: &(impl Fn(f64) -> f64 + ?Sized), x: f64) -> f64 {
        let hi = self.lo + self.step * (self.values.len() - 1) as f64;
        let x = x.clamp(self.lo, hi);
        let k = (((x - self.lo) / self.step) as usize).min(self.values.len() - 2);
        let a = self.lo + k as f64 * self.step;
        self.values[k] + adaptive_simpson(|t| f(t), a, x, 1e-13)
    }

    /// Total integral over the table range.
    pub fn total(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_matches_closed_forms() {
        let v = adaptive_simpson(|x| x * x, 0.0, 3.0, 1e-12);
        assert!((v - 9.0).abs() < 1e-10);
        let v = adaptive_simpson(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-10);
        // Standard normal mass on [-8, 8] is 1 to well below the tolerance.
        let inv = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let v = adaptive_simpson(|x| inv * (-0.5 * x * x).exp(), -8.0, 8.0, 1e-12);
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cumulative_table_tracks_direct_quadrature() {
        let f = |x: f64| (-0.5 * x * x).exp() * x.cos();
        let table = CumulativeIntegral::build(&f, -8.0, 8.0, 1024, 1e-13);
        for &x in &[-7.3, -1.0, 0.0, 0.123456, 2.5, 7.99] {
            let direct = adaptive_simpson(f, -8.0, x, 1e-13);
            assert!((table.eval(&f, x) - direct).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn order_insensitive_mean_ignores_permutation() {
        let xs = vec![1.0e16, 1.0, -1.0e16, 3.5, 0.25, -7.75, 1e-3];
        let mut ys = xs.clone();
        ys.reverse();
        ys.swap(1, 3);
        assert_eq!(order_insensitive_mean(&xs).to_bits(), order_insensitive_mean(&ys).to_bits());
    }
}
