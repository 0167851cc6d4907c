//! Dense complex 2x2 and 4x4 matrices with the small set of operations the
//! simulator needs: Pauli operators and their two-qubit embeddings, Kronecker
//! products, a cyclic-Jacobi Hermitian eigensolver, and the positive
//! semidefinite matrix square root used by the Wootters concurrence.
//!
//! Single-qubit basis order is excited-first: index 0 is |1>, index 1 is |0>.
//! Two-qubit basis order is |11>, |10>, |01>, |00> with qubit 1 as the left
//! (slow) Kronecker factor. All values are plain `Copy` data and all
//! operations are pure functions.

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Max permitted |M - M^dagger| entry before Hermitian-only operations refuse
/// their input.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Eigenvalues in [-PSD_CLAMP_TOL, 0) are clamped to zero by [`psd_sqrt`];
/// anything more negative is an error.
pub const PSD_CLAMP_TOL: f64 = 1e-9;

/// Off-diagonal Frobenius norm at which Jacobi sweeps stop.
const JACOBI_OFF_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix is not Hermitian (max |M - M^dag| entry = {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue = {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },
}

macro_rules! define_cmat {
    ($name:ident, $n:expr) => {
        #[derive(Debug, Clone, Copy, PartialEq)]
        pub struct $name(pub [[C64; $n]; $n]);

        impl $name {
            pub const DIM: usize = $n;

            pub fn zero() -> Self {
                $name([[C64::new(0.0, 0.0); $n]; $n])
            }

            pub fn identity() -> Self {
                let mut m = Self::zero();
                for i in 0..$n {
                    m.0[i][i] = C64::new(1.0, 0.0);
                }
                m
            }

            pub fn diag(entries: [f64; $n]) -> Self {
                let mut m = Self::zero();
                for i in 0..$n {
                    m.0[i][i] = C64::new(entries[i], 0.0);
                }
                m
            }

            /// Conjugate transpose.
            pub fn dagger(&self) -> Self {
                let mut m = Self::zero();
                for i in 0..$n {
                    for j in 0..$n {
                        m.0[i][j] = self.0[j][i].conj();
                    }
                }
                m
            }

            /// Entrywise complex conjugate (no transpose).
            pub fn conj(&self) -> Self {
                let mut m = *self;
                for row in m.0.iter_mut() {
                    for e in row.iter_mut() {
                        *e = e.conj();
                    }
                }
                m
            }

            pub fn trace(&self) -> C64 {
                let mut t = C64::new(0.0, 0.0);
                for i in 0..$n {
                    t += self.0[i][i];
                }
                t
            }

            pub fn scale(&self, s: C64) -> Self {
                let mut m = *self;
                for row in m.0.iter_mut() {
                    for e in row.iter_mut() {
                        *e *= s;
                    }
                }
                m
            }

            /// Largest entry modulus.
            pub fn max_abs(&self) -> f64 {
                let mut best = 0.0f64;
                for row in self.0.iter() {
                    for e in row.iter() {
                        best = best.max(e.norm());
                    }
                }
                best
            }

            /// Largest entry of |M - M^dagger|.
            pub fn herm_deviation(&self) -> f64 {
                let mut best = 0.0f64;
                for i in 0..$n {
                    for j in 0..$n {
                        best = best.max((self.0[i][j] - self.0[j][i].conj()).norm());
                    }
                }
                best
            }

            /// (M + M^dagger) / 2.
            pub fn hermitized(&self) -> Self {
                let mut m = Self::zero();
                for i in 0..$n {
                    for j in 0..$n {
                        m.0[i][j] = (self.0[i][j] + self.0[j][i].conj()) * 0.5;
                    }
                }
                m
            }

            pub fn is_finite(&self) -> bool {
                self.0
                    .iter()
                    .flatten()
                    .all(|e| e.re.is_finite() && e.im.is_finite())
            }
        }

        impl std::ops::Add for $name {
            type Output = Self;
            fn add(self, rhs: Self) -> Self {
                let mut m = self;
                for i in 0..$n {
                    for j in 0..$n {
                        m.0[i][j] += rhs.0[i][j];
                    }
                }
                m
            }
        }

        impl std::ops::Sub for $name {
            type Output = Self;
            fn sub(self, rhs: Self) -> Self {
                let mut m = self;
                for i in 0..$n {
                    for j in 0..$n {
                        m.0[i][j] -= rhs.0[i][j];
                    }
                }
                m
            }
        }

        impl std::ops::Neg for $name {
            type Output = Self;
            fn neg(self) -> Self {
                self.scale(C64::new(-1.0, 0.0))
            }
        }

        impl std::ops::Mul for $name {
            type Output = Self;
            fn mul(self, rhs: Self) -> Self {
                let mut m = Self::zero();
                for i in 0..$n {
                    for k in 0..$n {
                        let aik = self.0[i][k];
                        if aik == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for j in 0..$n {
                            m.0[i][j] += aik * rhs.0[k][j];
                        }
                    }
                }
                m
            }
        }

        impl std::ops::Mul<C64> for $name {
            type Output = Self;
            fn mul(self, s: C64) -> Self {
                self.scale(s)
            }
        }

        impl std::ops::Mul<f64> for $name {
            type Output = Self;
            fn mul(self, s: f64) -> Self {
                self.scale(C64::new(s, 0.0))
            }
        }
    };
}

define_cmat!(CMat2, 2);
define_cmat!(CMat4, 4);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli_x() -> CMat2 {
    CMat2([[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]])
}

pub fn pauli_y() -> CMat2 {
    CMat2([[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]])
}

pub fn pauli_z() -> CMat2 {
    CMat2([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]])
}

/// sigma^+ = (sigma^x + i sigma^y)/2; raises |0> to |1>.
pub fn sigma_plus() -> CMat2 {
    CMat2([[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]])
}

/// sigma^- = (sigma^x - i sigma^y)/2; lowers |1> to |0>.
pub fn sigma_minus() -> CMat2 {
    CMat2([[c(0.0, 0.0), c(0.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Qubit {
    One,
    Two,
}

/// Kronecker product with `a` acting on qubit 1 (the left, slow factor).
pub fn tensor(a: &CMat2, b: &CMat2) -> CMat4 {
    let mut m = CMat4::zero();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m.0[2 * i + k][2 * j + l] = a.0[i][j] * b.0[k][l];
                }
            }
        }
    }
    m
}

/// The named single-qubit operator tensored with identity on the other qubit.
pub fn embed_pauli(axis: PauliAxis, qubit: Qubit) -> CMat4 {
    let op = match axis {
        PauliAxis::X => pauli_x(),
        PauliAxis::Y => pauli_y(),
        PauliAxis::Z => pauli_z(),
        PauliAxis::Plus => sigma_plus(),
        PauliAxis::Minus => sigma_minus(),
    };
    match qubit {
        Qubit::One => tensor(&op, &CMat2::identity()),
        Qubit::Two => tensor(&CMat2::identity(), &op),
    }
}

pub fn commutator(a: &CMat4, b: &CMat4) -> CMat4 {
    *a * *b - *b * *a
}

fn off_diag_frobenius(m: &CMat4) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                s += m.0[i][j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition of a (hermitized) 4x4 matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order and the matching unitary whose
/// columns are the eigenvectors. The input is assumed Hermitian; callers are
/// responsible for tolerance checks.
pub(crate) fn jacobi_eigen(m: &CMat4) -> ([f64; 4], CMat4) {
    let mut a = m.hermitized();
    let mut v = CMat4::identity();

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diag_frobenius(&a) < JACOBI_OFF_TOL {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                let apq = a.0[p][q];
                let mag = apq.norm();
                if mag < 1e-300 {
                    continue;
                }
                let app = a.0[p][p].re;
                let aqq = a.0[q][q].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cth = 1.0 / (1.0 + t * t).sqrt();
                let sth = t * cth;
                let u = apq / mag; // unit phase of the pivot entry

                // Apply G on the right (columns) and G^dagger on the left
                // (rows), where the (p,q) block of G is [[c, s*u], [-s*u~, c]].
                for i in 0..4 {
                    let aip = a.0[i][p];
                    let aiq = a.0[i][q];
                    a.0[i][p] = aip * cth - aiq * sth * u.conj();
                    a.0[i][q] = aip * sth * u + aiq * cth;
                }
                for j in 0..4 {
                    let apj = a.0[p][j];
                    let aqj = a.0[q][j];
                    a.0[p][j] = apj * cth - aqj * sth * u;
                    a.0[q][j] = apj * sth * u.conj() + aqj * cth;
                }
                for i in 0..4 {
                    let vip = v.0[i][p];
                    let viq = v.0[i][q];
                    v.0[i][p] = vip * cth - viq * sth * u.conj();
                    v.0[i][q] = vip * sth * u + viq * cth;
                }
            }
        }
    }

    let mut vals = [0.0f64; 4];
    for (i, v) in vals.iter_mut().enumerate() {
        *v = a.0[i][i].re;
    }
    // Sort descending, permuting eigenvector columns alongside.
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap());
    let mut sorted = [0.0f64; 4];
    let mut vv = CMat4::zero();
    for (col, &idx) in order.iter().enumerate() {
        sorted[col] = vals[idx];
        for row in 0..4 {
            vv.0[row][col] = v.0[row][idx];
        }
    }
    (sorted, vv)
}

fn require_hermitian(m: &CMat4) -> Result<(), MatrixError> {
    let dev = m.herm_deviation();
    if dev > HERMITICITY_TOL {
        return Err(MatrixError::NotHermitian { deviation: dev });
    }
    Ok(())
}

/// Eigenvalues of a Hermitian 4x4 matrix, descending.
pub fn herm_eigvals(m: &CMat4) -> Result<[f64; 4], MatrixError> {
    require_hermitian(m)?;
    Ok(jacobi_eigen(m).0)
}

/// Eigenvalues without the Hermiticity gate, for internal positivity checks
/// on states whose Hermiticity drift is tracked separately.
pub(crate) fn eigvals_hermitized(m: &CMat4) -> [f64; 4] {
    jacobi_eigen(m).0
}

/// Hermitian PSD square root: S with S*S = M. Eigenvalues in
/// [-PSD_CLAMP_TOL, 0) are treated as integrator round-off and clamped to 0.
pub fn psd_sqrt(m: &CMat4) -> Result<CMat4, MatrixError> {
    require_hermitian(m)?;
    let (vals, v) = jacobi_eigen(m);
    let min = vals[3];
    if min < -PSD_CLAMP_TOL {
        return Err(MatrixError::NotPositive {
            min_eigenvalue: min,
        });
    }
    let mut d = CMat4::zero();
    for (i, v) in vals.iter().enumerate() {
        d.0[i][i] = C64::new(v.max(0.0).sqrt(), 0.0);
    }
    Ok((v * d * v.dagger()).hermitized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rc(rng: &mut ChaCha8Rng) -> C64 {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    fn random_mat4(rng: &mut ChaCha8Rng) -> CMat4 {
        let mut m = CMat4::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = rc(rng);
            }
        }
        m
    }

    #[test]
    fn tensor_identity() {
        let i2 = CMat2::identity();
        assert_eq!(tensor(&i2, &i2), CMat4::identity());
    }

    #[test]
    fn tensor_sigma_z_left_is_basis_order() {
        // |1> excited first: sigma_z x I = diag(1, 1, -1, -1)
        let m = tensor(&pauli_z(), &CMat2::identity());
        assert_eq!(m, CMat4::diag([1.0, 1.0, -1.0, -1.0]));
    }

    #[test]
    fn tensor_sigma_x_both_is_antidiagonal() {
        let m = tensor(&pauli_x(), &pauli_x());
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i + j == 3 { 1.0 } else { 0.0 };
                assert_eq!(m.0[i][j], C64::new(expect, 0.0));
            }
        }
    }

    #[test]
    fn tensor_is_bilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let alpha = rc(&mut rng);
            let mut a = CMat2::zero();
            let mut b = CMat2::zero();
            for i in 0..2 {
                for j in 0..2 {
                    a.0[i][j] = rc(&mut rng);
                    b.0[i][j] = rc(&mut rng);
                }
            }
            let lhs = tensor(&a.scale(alpha), &b);
            let rhs = tensor(&a, &b).scale(alpha);
            assert!((lhs - rhs).max_abs() < 1e-14);
        }
    }

    #[test]
    fn embed_pauli_z_qubit_one() {
        assert_eq!(
            embed_pauli(PauliAxis::Z, Qubit::One),
            CMat4::diag([1.0, 1.0, -1.0, -1.0])
        );
    }

    #[test]
    fn embed_plus_raises_qubit_one() {
        // sigma_1^+ |01> = |11>; basis index of |01> is 2, of |11> is 0.
        let op = embed_pauli(PauliAxis::Plus, Qubit::One);
        assert_eq!(op.0[0][2], C64::new(1.0, 0.0));
        for i in 0..4 {
            for j in 0..4 {
                if (i, j) != (0, 2) && (i, j) != (1, 3) {
                    assert_eq!(op.0[i][j], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn minus_plus_is_ground_projector() {
        // sigma_2^- sigma_2^+ projects onto qubit-2 ground: diag(0,1,0,1)
        let m = embed_pauli(PauliAxis::Minus, Qubit::Two) * embed_pauli(PauliAxis::Plus, Qubit::Two);
        assert_eq!(m, CMat4::diag([0.0, 1.0, 0.0, 1.0]));
    }

    #[test]
    fn eigvals_diagonal() {
        let m = CMat4::diag([4.0, 3.0, 2.0, 1.0]);
        assert_eq!(herm_eigvals(&m).unwrap(), [4.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn eigvals_identity() {
        assert_eq!(herm_eigvals(&CMat4::identity()).unwrap(), [1.0; 4]);
    }

    #[test]
    fn eigvals_xx() {
        let vals = herm_eigvals(&tensor(&pauli_x(), &pauli_x())).unwrap();
        for (v, e) in vals.iter().zip([1.0, 1.0, -1.0, -1.0]) {
            assert!((v - e).abs() < 1e-13, "{v} vs {e}");
        }
    }

    #[test]
    fn eigvals_reject_non_hermitian() {
        let mut m = CMat4::identity();
        m.0[0][1] = C64::new(0.5, 0.0);
        assert!(matches!(
            herm_eigvals(&m),
            Err(MatrixError::NotHermitian { .. })
        ));
    }

    #[test]
    fn eigvals_sum_matches_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let m = random_mat4(&mut rng).hermitized();
            let vals = herm_eigvals(&m).unwrap();
            let sum: f64 = vals.iter().sum();
            assert!((sum - m.trace().re).abs() < 1e-12);
        }
    }

    #[test]
    fn psd_sqrt_identity() {
        let s = psd_sqrt(&CMat4::identity()).unwrap();
        assert!((s - CMat4::identity()).max_abs() < 1e-13);
    }

    #[test]
    fn psd_sqrt_diagonal() {
        let s = psd_sqrt(&CMat4::diag([4.0, 1.0, 0.0, 0.0])).unwrap();
        assert!((s - CMat4::diag([2.0, 1.0, 0.0, 0.0])).max_abs() < 1e-13);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..25 {
            let a = random_mat4(&mut rng);
            let m = a.dagger() * a; // PSD by construction
            let s = psd_sqrt(&m).unwrap();
            assert!((s * s - m).max_abs() < 1e-10);
            assert!(s.herm_deviation() < 1e-12);
        }
    }

    #[test]
    fn psd_sqrt_idempotent_on_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..10 {
            // Distinct eigenvalues: diagonal plus a small random Hermitian part.
            let mut m = CMat4::diag([5.0, 3.0, 2.0, 1.0]);
            let p = random_mat4(&mut rng).hermitized();
            m = m + p.scale(C64::new(0.05, 0.0));
            let s = psd_sqrt(&m).unwrap();
            let again = psd_sqrt(&(s * s)).unwrap();
            assert!((again - s).max_abs() < 1e-9);
        }
    }

    #[test]
    fn psd_sqrt_rejects_negative() {
        let m = CMat4::diag([1.0, 1.0, 1.0, -1e-3]);
        assert!(matches!(
            psd_sqrt(&m),
            Err(MatrixError::NotPositive { .. })
        ));
    }

    #[test]
    fn psd_sqrt_clamps_tiny_negative() {
        let m = CMat4::diag([1.0, 1.0, 1.0, -1e-10]);
        let s = psd_sqrt(&m).unwrap();
        assert!(s.0[3][3].re.abs() < 1e-5);
        assert!(s.is_finite());
    }
}
