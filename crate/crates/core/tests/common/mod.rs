//! Oracles shared by the integration tests. Nothing here calls into the
//! library's numerical kernels.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;

/// Double-double number `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from(q2)));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::from(q3))
    }
}

fn dd_factorial(n: usize) -> Dd {
    (1..=n).fold(Dd::ONE, |acc, i| acc.mul(Dd::from(i as f64)))
}

/// `e^z` in double-double: Taylor at `z / 2^m`, then `m` squarings.
pub fn dd_exp(z: f64) -> Dd {
    if z < -708.0 {
        return Dd::ZERO;
    }
    let m = (z.abs().log2().ceil().max(0.0) as i32) + 4;
    let r = Dd::from(z / 2f64.powi(m));
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    for n in 1..40 {
        term = term.mul(r).div(Dd::from(n as f64));
        sum = sum.add(term);
    }
    for _ in 0..m {
        sum = sum.mul(sum);
    }
    sum
}

/// `φ_k(z)` in double-double: 60-term Taylor for `|z| <= 1`, otherwise the
/// recurrence from `e^z`.
pub fn phi_oracle(k: usize, z: f64) -> f64 {
    if z.abs() <= 1.0 {
        let zd = Dd::from(z);
        let mut pow = Dd::ONE;
        let mut sum = Dd::ZERO;
        for n in 0..60 {
            sum = sum.add(pow.div(dd_factorial(n + k)));
            pow = pow.mul(zd);
        }
        return sum.to_f64();
    }
    let zd = Dd::from(z);
    let mut p = dd_exp(z);
    for j in 0..k {
        p = p.sub(Dd::ONE.div(dd_factorial(j))).div(zd);
    }
    p.to_f64()
}

/// Direct `O(N²)` DFT with the `1/N` normalization, x fastest.
pub fn naive_dft(values: &[f64], dims: &[usize]) -> Vec<Complex64> {
    let n: usize = dims.iter().product();
    let idx = |mut flat: usize| {
        let mut out = [0usize; 3];
        for (a, &m) in dims.iter().enumerate() {
            out[a] = flat % m;
            flat /= m;
        }
        out
    };
    (0..n)
        .map(|l| {
            let li = idx(l);
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &v) in values.iter().enumerate() {
                let ji = idx(j);
                let phase: f64 = dims
                    .iter()
                    .enumerate()
                    .map(|(a, &m)| ((li[a] * ji[a]) % m) as f64 / m as f64)
                    .sum();
                acc += v * Complex64::from_polar(1.0, -2.0 * PI * phase);
            }
            acc / n as f64
        })
        .collect()
}

/// Signed wavenumber of index `i` on an axis of `m` points.
pub fn signed(i: usize, m: usize) -> i64 {
    if i < m / 2 {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

/// Bisection-only root of a scalar function that changes sign on `[lo, hi]`,
/// run until the bracket stops shrinking.
pub fn bisect_root<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "no sign change on [{lo}, {hi}]");
    let up = flo > 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return 0.5 * (lo + hi);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == up {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Splitmix64, used to seed test data without touching the library's RNG.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }
}

/// Log-spaced negative samples `-10^e`, `e` uniform in `[log10 lo, log10 hi]`.
pub fn neg_log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| -(10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)))
        .collect()
}
