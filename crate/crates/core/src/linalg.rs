//! Split-complex vector kernels used by the orthogonal basis builder.
//!
//! Vectors are stored as separate real and imaginary slices so that the
//! inner loops vectorize without fast-math.

use num_complex::Complex64;

const LANES: usize = 8;

/// Sum of `conj(a_i) * b_i`.
pub fn cdot(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64]) -> Complex64 {
    let n = ar.len();
    let mut sr = [0.0f64; LANES];
    let mut si = [0.0f64; LANES];
    let chunks = n / LANES;
    for c in 0..chunks {
        let o = c * LANES;
        let (xr, xi, yr, yi) = (
            &ar[o..o + LANES],
            &ai[o..o + LANES],
            &br[o..o + LANES],
            &bi[o..o + LANES],
        );
        for l in 0..LANES {
            sr[l] += xr[l] * yr[l] + xi[l] * yi[l];
            si[l] += xr[l] * yi[l] - xi[l] * yr[l];
        }
    }
    let mut re: f64 = sr.iter().sum();
    let mut im: f64 = si.iter().sum();
    for k in chunks * LANES..n {
        re += ar[k] * br[k] + ai[k] * bi[k];
        im += ar[k] * bi[k] - ai[k] * br[k];
    }
    Complex64::new(re, im)
}

/// Weighted inner product: sum of `w_i * conj(a_i) * b_i`.
pub fn cdot_weighted(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64], w: &[f64]) -> Complex64 {
    let n = ar.len();
    let mut sr = [0.0f64; LANES];
    let mut si = [0.0f64; LANES];
    let chunks = n / LANES;
    for c in 0..chunks {
        let o = c * LANES;
        let (xr, xi, yr, yi, ww) = (
            &ar[o..o + LANES],
            &ai[o..o + LANES],
            &br[o..o + LANES],
            &bi[o..o + LANES],
            &w[o..o + LANES],
        );
        for l in 0..LANES {
            let (pr, pi) = (ww[l] * yr[l], ww[l] * yi[l]);
            sr[l] += xr[l] * pr + xi[l] * pi;
            si[l] += xr[l] * pi - xi[l] * pr;
        }
    }
    let mut re: f64 = sr.iter().sum();
    let mut im: f64 = si.iter().sum();
    for k in chunks * LANES..n {
        let (pr, pi) = (w[k] * br[k], w[k] * bi[k]);
        re += ar[k] * pr + ai[k] * pi;
        im += ar[k] * pi - ai[k] * pr;
    }
    Complex64::new(re, im)
}

/// `y -= a * x`.
pub fn caxpy_neg(a: Complex64, xr: &[f64], xi: &[f64], yr: &mut [f64], yi: &mut [f64]) {
    for k in 0..xr.len() {
        let (r, i) = (xr[k], xi[k]);
        yr[k] -= a.re * r - a.im * i;
        yi[k] -= a.re * i + a.im * r;
    }
}

pub fn weighted_norm(vr: &[f64], vi: &[f64], w: &[f64]) -> f64 {
    let mut s = [0.0f64; LANES];
    let n = vr.len();
    let chunks = n / LANES;
    for c in 0..chunks {
        let o = c * LANES;
        for l in 0..LANES {
            let k = o + l;
            s[l] += w[k] * (vr[k] * vr[k] + vi[k] * vi[k]);
        }
    }
    let mut t: f64 = s.iter().sum();
    for k in chunks * LANES..n {
        t += w[k] * (vr[k] * vr[k] + vi[k] * vi[k]);
    }
    t.sqrt()
}

/// Neumaier-compensated complex sum.
#[derive(Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: Complex64) {
        self.sum.re = two_sum(self.sum.re, x.re, &mut self.comp.re);
        self.sum.im = two_sum(self.sum.im, x.im, &mut self.comp.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

fn two_sum(s: f64, x: f64, c: &mut f64) -> f64 {
    let t = s + x;
    if s.abs() >= x.abs() {
        *c += (s - t) + x;
    } else {
        *c += (x - t) + s;
    }
    t
}
