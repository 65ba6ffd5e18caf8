//! Exact kernel sums `Φ(x) = Σ_j q_j J(d(x, φ_j))` and `Φ'(x)` in
//! `O((N + M) log N)`.
//!
//! With `Δ = x − φ̃` for the copy `φ̃ ∈ {φ − 2π, φ, φ + 2π}` lying in
//! `[x − π, x + π)`, the kernel is `c(sin Δ + (π − Δ) cos Δ)` for `Δ ≥ 0` and
//! `c(−sin Δ + (π + Δ) cos Δ)` for `Δ < 0`. Expanding `sin(x − φ̃)`,
//! `cos(x − φ̃)` turns each half-window sum into four prefix sums over the
//! sorted extended charge list: `Σq cos φ̃`, `Σq sin φ̃`, `Σq φ̃ cos φ̃`,
//! `Σq φ̃ sin φ̃`.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Moments {
    fn sub(self, o: Moments) -> Moments {
        Moments { a: self.a - o.a, b: self.b - o.b, c: self.c - o.c, d: self.d - o.d }
    }
}

/// Sorted, periodically extended charges with prefix moments.
pub(crate) struct KernelSum {
    c: f64,
    ext: Vec<f64>,
    prefix: Vec<Moments>,
}

impl KernelSum {
    pub(crate) fn new(c: f64, angles: &[f64], charges: &[f64]) -> Self {
        let mut base: Vec<(f64, f64)> =
            angles.iter().zip(charges).map(|(&p, &q)| (p.rem_euclid(2.0 * PI), q)).collect();
        base.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut ext = Vec::with_capacity(3 * base.len());
        let mut prefix = Vec::with_capacity(3 * base.len() + 1);
        let mut acc = Moments::default();
        prefix.push(acc);
        for shift in [-2.0 * PI, 0.0, 2.0 * PI] {
            for &(p, q) in &base {
                let phi = p + shift;
                let (s, co) = phi.sin_cos();
                acc.a += q * co;
                acc.b += q * s;
                acc.c += q * phi * co;
                acc.d += q * phi * s;
                ext.push(phi);
                prefix.push(acc);
            }
        }
        Self { c, ext, prefix }
    }

    fn range(&self, lo: usize, hi: usize) -> Moments {
        self.prefix[hi].sub(self.prefix[lo])
    }

    /// `(Φ(x), Φ'(x))` for `x ∈ [0, 2π)`.
    pub(crate) fn eval(&self, x: f64) -> (f64, f64) {
        let x = x.rem_euclid(2.0 * PI);
        let i0 = self.ext.partition_point(|&p| p < x - PI);
        let i1 = self.ext.partition_point(|&p| p <= x);
        let i2 = self.ext.partition_point(|&p| p < x + PI);
        let (sx, cx) = x.sin_cos();
        let trig = |m: Moments| {
            let sin_d = sx * m.a - cx * m.b;
            let cos_d = cx * m.a + sx * m.b;
            let dcos = x * cos_d - (cx * m.c + sx * m.d);
            let dsin = x * sin_d - (sx * m.c - cx * m.d);
            (sin_d, cos_d, dcos, dsin)
        };
        let (sp, cp, dcp, dsp) = trig(self.range(i0, i1));
        let (sm, cm, dcm, dsm) = trig(self.range(i1, i2));
        let phi = self.c * ((sp + PI * cp - dcp) + (-sm + PI * cm + dcm));
        let dphi = -self.c * ((PI * sp - dsp) + (PI * sm + dsm));
        (phi, dphi)
    }
}
