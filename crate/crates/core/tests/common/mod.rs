//! Independent re-implementations used as oracles by the integration tests.
//! Nothing here calls into the library's statistics code.

#![allow(dead_code)]

use pairperm::PartiallyPairedSample;
use std::f64::consts::PI;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Textbook one-pass-free sample variance with divisor n - 1.
pub fn var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let mut ss = 0.0;
    for x in xs {
        ss += (x - m).powi(2);
    }
    ss / (xs.len() as f64 - 1.0)
}

pub struct Parts {
    pub x1c: Vec<f64>,
    pub x2c: Vec<f64>,
    pub x1i: Vec<f64>,
    pub x2i: Vec<f64>,
}

pub fn parts(s: &PartiallyPairedSample) -> Parts {
    Parts {
        x1c: s.complete().iter().map(|p| p.0).collect(),
        x2c: s.complete().iter().map(|p| p.1).collect(),
        x1i: s.first_only().to_vec(),
        x2i: s.second_only().to_vec(),
    }
}

pub fn t1(p: &Parts) -> f64 {
    let d: Vec<f64> = p.x1c.iter().zip(&p.x2c).map(|(a, b)| a - b).collect();
    mean(&d) / (var(&d) / d.len() as f64).sqrt()
}

pub fn t2(p: &Parts) -> f64 {
    (mean(&p.x1i) - mean(&p.x2i)) / (var(&p.x1i) / p.x1i.len() as f64 + var(&p.x2i) / p.x2i.len() as f64).sqrt()
}

pub fn weighted(p: &Parts, a: f64) -> f64 {
    a.sqrt() * t1(p) + (1.0 - a).sqrt() * t2(p)
}

pub fn default_weight(p: &Parts) -> f64 {
    let n1 = p.x1c.len() as f64;
    let n = n1 + p.x1i.len() as f64 + p.x2i.len() as f64;
    2.0 * n1 / (n + n1)
}

/// Lin–Stivers as displayed: S2² over the second-only arm only.
pub fn lin_stivers(p: &Parts) -> f64 {
    let n1 = p.x1c.len() as f64;
    let n2 = p.x1i.len() as f64;
    let n3 = p.x2i.len() as f64;
    let n = n1 + n2 + n3;
    let all1: Vec<f64> = p.x1c.iter().chain(&p.x1i).copied().collect();
    let all2: Vec<f64> = p.x2c.iter().chain(&p.x2i).copied().collect();
    let m1 = mean(&all1);
    let m2 = mean(&all2);
    let (mc1, mc2) = (mean(&p.x1c), mean(&p.x2c));
    let cov: f64 = p.x1c.iter().zip(&p.x2c).map(|(a, b)| (a - mc1) * (b - mc2)).sum();
    let v1: f64 = p.x1c.iter().map(|a| (a - mc1).powi(2)).sum();
    let v2: f64 = p.x2c.iter().map(|b| (b - mc2).powi(2)).sum();
    let r = cov / (v1 * v2).sqrt();
    let s1: f64 = all1.iter().map(|x| (x - m1).powi(2)).sum();
    let m2i = mean(&p.x2i);
    let s2: f64 = p.x2i.iter().map(|x| (x - m2i).powi(2)).sum();
    let left = (1.0 / (n2 + n1) + 1.0 / (n3 + n1) - 2.0 * n1 * r / ((n2 + n1) * (n3 + n1))).sqrt();
    let right = ((s1 + s2) / (n - 2.0)).sqrt();
    (m1 - m2) / (left * right)
}

pub fn kim_t3(p: &Parts) -> f64 {
    let n1 = p.x1c.len() as f64;
    let n2 = p.x1i.len() as f64;
    let n3 = p.x2i.len() as f64;
    let nh = 2.0 / (1.0 / n2 + 1.0 / n3);
    let d: Vec<f64> = p.x1c.iter().zip(&p.x2c).map(|(a, b)| a - b).collect();
    let num = n1 * (mean(&p.x1c) - mean(&p.x2c)) + nh * (mean(&p.x1i) - mean(&p.x2i));
    let den = (n1 * var(&d) + nh * nh * (var(&p.x1i) / n2 + var(&p.x2i) / n3)).sqrt();
    num / den
}

/// erfc by Taylor series of erf for |x| < 1.5 and a Lentz continued fraction beyond.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 1.5 {
        // erf(x) = 2/sqrt(pi) * sum (-1)^n x^(2n+1) / (n! (2n+1)), summed with compensation
        let mut term = x;
        let mut sum = x;
        let mut comp = 0.0;
        let x2 = x * x;
        for n in 1..200 {
            term *= -x2 / n as f64;
            let add = term / (2 * n + 1) as f64;
            let y = add - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        1.0 - 2.0 / PI.sqrt() * sum
    } else {
        // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...))))
        let tiny = 1e-300;
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for k in 1..20000 {
            let a = k as f64 / 2.0;
            d = x + a * d;
            if d.abs() < tiny {
                d = tiny;
            }
            c = x + a / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (-x * x).exp() / PI.sqrt() / f
    }
}

pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

pub fn normal_cdf(z: f64) -> f64 {
    normal_sf(-z)
}

/// P(|T| <= t) for integer df by the finite trigonometric series.
pub fn t_central(t: f64, df: u32) -> f64 {
    let theta = (t / (df as f64).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    if df % 2 == 1 {
        if df == 1 {
            return 2.0 * theta / PI;
        }
        let mut term = c;
        let mut sum = c;
        let mut k = 1;
        while 2 * k + 1 < df {
            term *= c * c * (2 * k) as f64 / (2 * k + 1) as f64;
            sum += term;
            k += 1;
        }
        2.0 / PI * (theta + s * sum)
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1;
        while 2 * k < df {
            term *= c * c * (2 * k - 1) as f64 / (2 * k) as f64;
            sum += term;
            k += 1;
        }
        s * sum
    }
}

/// Gamma at a positive integer or half-integer by the product recursion.
fn gamma_half_integer(x: f64) -> f64 {
    let (mut g, mut k) = if x.fract() == 0.0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while k < x {
        g *= k;
        k += 1.0;
    }
    g
}

/// P(|T| > t) = I_x(df/2, 1/2), x = df/(df + t^2), by the positive-term
/// series x^a (1-x)^b / (a B(a,b)) * sum (a+b)_n / (a+1)_n x^n.
fn t_two_tail_series(t: f64, df: u32) -> f64 {
    let (a, b) = (df as f64 / 2.0, 0.5);
    let x = df as f64 / (df as f64 + t * t);
    let beta = gamma_half_integer(a) * PI.sqrt() / gamma_half_integer(a + b);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 0.0;
    while term > 1e-18 * sum {
        term *= (a + b + n) / (a + 1.0 + n) * x;
        sum += term;
        n += 1.0;
    }
    x.powf(a) * (1.0 - x).powf(b) / (a * beta) * sum
}

/// Upper tail P(T > t) for integer df.
pub fn t_sf(t: f64, df: u32) -> f64 {
    let two_tail = if t.abs() >= 1.0 {
        t_two_tail_series(t.abs(), df)
    } else {
        1.0 - t_central(t.abs(), df)
    };
    if t >= 0.0 {
        two_tail / 2.0
    } else {
        1.0 - two_tail / 2.0
    }
}

/// Kolmogorov distance between an empirical sample and N(0, 1).
pub fn ks_to_normal(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = normal_cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Symmetric eigen-decomposition root of a 2x2 SPD matrix.
pub fn eigen_sqrt(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
    let half_tr = (a + c) / 2.0;
    let disc = (((a - c) / 2.0).powi(2) + b * b).sqrt();
    let (l1, l2) = (half_tr + disc, half_tr - disc);
    // eigenvector for l1
    let (vx, vy) = if b.abs() > 0.0 {
        (b, l1 - a)
    } else if a >= c {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let norm = (vx * vx + vy * vy).sqrt();
    let (ux, uy) = (vx / norm, vy / norm);
    // second eigenvector orthogonal
    let (wx, wy) = (-uy, ux);
    let (r1, r2) = (l1.sqrt(), l2.sqrt());
    [
        [r1 * ux * ux + r2 * wx * wx, r1 * ux * uy + r2 * wx * wy],
        [r1 * uy * ux + r2 * wy * wx, r1 * uy * uy + r2 * wy * wy],
    ]
}

/// Deterministic small fixture generator (xorshift) independent of the library RNG.
pub struct XorShift(pub u64);

impl XorShift {
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Box–Muller normal.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform().max(1e-300);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    pub fn sample(&mut self, n1: usize, n2: usize, n3: usize, shift: f64) -> PartiallyPairedSample {
        let complete = (0..n1)
            .map(|_| {
                let z = self.normal();
                (z + self.normal() * 0.7 + shift, z * 0.8 + self.normal() * 0.9)
            })
            .collect();
        let x1 = (0..n2).map(|_| self.normal() + shift).collect();
        let x2 = (0..n3).map(|_| 1.4 * self.normal()).collect();
        PartiallyPairedSample::new(complete, x1, x2).unwrap()
    }
}
