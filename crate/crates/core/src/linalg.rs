//! 2×2 complex matrices and 2-component kets.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

/// Column vector in `C²`.
pub type Ket = [C64; 2];

pub(crate) fn inner(bra: &Ket, ket: &Ket) -> C64 {
    bra[0].conj() * ket[0] + bra[1].conj() * ket[1]
}

pub(crate) fn norm_sqr(ket: &Ket) -> f64 {
    ket[0].norm_sqr() + ket[1].norm_sqr()
}

pub(crate) fn scale(ket: &Ket, factor: C64) -> Ket {
    [ket[0] * factor, ket[1] * factor]
}

/// `max_i |a_i - e^{iγ} b_i|` for the phase `γ` that best aligns `b` with `a`.
pub(crate) fn phase_aligned_distance(a: &Ket, b: &Ket) -> f64 {
    let overlap = inner(b, a);
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let b = scale(b, phase);
    (a[0] - b[0]).norm().max((a[1] - b[1]).norm())
}

/// Row-major 2×2 complex matrix. Serializes as four `[re, im]` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[C64; 4]", into = "[C64; 4]")]
pub struct Mat2(pub [[C64; 2]; 2]);

impl From<[C64; 4]> for Mat2 {
    fn from(e: [C64; 4]) -> Self {
        Mat2([[e[0], e[1]], [e[2], e[3]]])
    }
}

impl From<Mat2> for [C64; 4] {
    fn from(m: Mat2) -> Self {
        [m.0[0][0], m.0[0][1], m.0[1][0], m.0[1][1]]
    }
}

impl Mat2 {
    pub fn zero() -> Self {
        Mat2([[ZERO; 2]; 2])
    }

    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        Mat2([[one, ZERO], [ZERO, one]])
    }

    /// `|ket⟩⟨bra|`
    pub fn outer(ket: &Ket, bra: &Ket) -> Self {
        Mat2(ket.map(|k| bra.map(|b| k * b.conj())))
    }

    pub fn adjoint(&self) -> Self {
        let a = &self.0;
        Mat2([
            [a[0][0].conj(), a[1][0].conj()],
            [a[0][1].conj(), a[1][1].conj()],
        ])
    }

    pub fn apply(&self, ket: &Ket) -> Ket {
        let a = &self.0;
        [
            a[0][0] * ket[0] + a[0][1] * ket[1],
            a[1][0] * ket[0] + a[1][1] * ket[1],
        ]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for x in row.iter_mut() {
                *x *= factor;
            }
        }
        m
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending. Exact for Hermitian input.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let a = self.0[0][0].re;
        let d = self.0[1][1].re;
        let b = 0.5 * (self.0[0][1] + self.0[1][0].conj());
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean - radius, mean + radius]
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let mut m = Mat2::zero();
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] = self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j];
            }
        }
        m
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, rhs: Mat2) -> Mat2 {
        let mut m = self;
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] += rhs.0[i][j];
            }
        }
        m
    }
}

impl Sub for Mat2 {
    type Output = Mat2;

    fn sub(self, rhs: Mat2) -> Mat2 {
        self + rhs.scaled(-1.0)
    }
}
