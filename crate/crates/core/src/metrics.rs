//! State-comparison metrics.
//!
//! Fidelity is the squared-trace form F(r1, r2) = (Tr sqrt(sqrt(r1) r2
//! sqrt(r1)))^2, so two identical states score 1 and orthogonal states score
//! 0. For pure inputs it reduces to |<psi|phi>|^2.

use crate::error::Result;
use crate::linalg;
use crate::state::DensityMatrix;

/// Fidelity value plus whether either input needed its spectrum clipped to
/// evaluate the matrix square roots.
#[derive(Clone, Copy, Debug)]
pub struct FidelityReport {
    pub value: f64,
    pub inputs_projected: bool,
}

/// Eigenvalues below this are treated as exact zeros when summing square
/// roots. The eigensolver guarantees eigenvalues only to about
/// [`linalg::JACOBI_TOL`] times the matrix scale, and sqrt amplifies that
/// noise (sqrt(1e-16) = 1e-8 per spurious mode), so a floor one order above
/// the guarantee keeps rank-deficient fidelities exact.
const SPECTRUM_FLOOR: f64 = 1e-11;

pub fn fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<FidelityReport> {
    let (sqrt1, clipped1) = linalg::psd_sqrt(rho1.matrix())?;
    let inner = sqrt1.mul(rho2.matrix())?.mul(&sqrt1)?.hermitize();
    // inner = sqrt(r1) r2 sqrt(r1) is PSD up to roundoff; sum the square
    // roots of its spectrum.
    let eig = linalg::hermitian_eig(&inner)?;
    let floor = SPECTRUM_FLOOR * inner.frobenius_norm().max(1.0);
    let mut total = 0.0;
    for &lambda in &eig.eigenvalues {
        if lambda > floor {
            total += lambda.sqrt();
        }
    }
    // The second input participates only through products, so probe its
    // spectrum directly for the projection flag.
    let (_, clipped2) = linalg::psd_sqrt(rho2.matrix())?;
    Ok(FidelityReport {
        value: total * total,
        inputs_projected: clipped1 || clipped2,
    })
}

/// (1/2) * sum |eigenvalues(r1 - r2)|.
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    let diff = rho1.matrix().sub(rho2.matrix())?;
    let eig = linalg::hermitian_eig(&diff)?;
    Ok(0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}

/// Tr(rho^2); 1 for pure states, 1/dim for the maximally mixed state.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix()
        .mul(rho.matrix())
        .expect("square matrix")
        .trace()
        .re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::StateVector;
    use num_complex::Complex64;

    fn plus_state() -> StateVector {
        let a = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
        StateVector::new(1, vec![a, a]).unwrap()
    }

    #[test]
    fn fidelity_of_identical_states_is_one() {
        let rho = StateVector::wwbar().density();
        let f = fidelity(&rho, &rho).unwrap();
        assert!((f.value - 1.0).abs() < 1e-9);
        assert!(!f.inputs_projected);
    }

    #[test]
    fn fidelity_of_orthogonal_pure_states_is_zero() {
        let a = StateVector::basis(3, 0).unwrap().density();
        let b = StateVector::basis(3, 7).unwrap().density();
        assert!(fidelity(&a, &b).unwrap().value.abs() < 1e-9);
    }

    #[test]
    fn fidelity_zero_against_plus_is_half() {
        let zero = StateVector::basis(1, 0).unwrap().density();
        let plus = plus_state().density();
        assert!((fidelity(&zero, &plus).unwrap().value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn fidelity_matches_pure_overlap() {
        let a = StateVector::wwbar();
        let b = StateVector::ghz();
        let via_density = fidelity(&a.density(), &b.density()).unwrap().value;
        let via_overlap = a.overlap_squared(&b).unwrap();
        assert!((via_density - via_overlap).abs() < 1e-10);
    }

    #[test]
    fn trace_distance_known_values() {
        let a = StateVector::basis(1, 0).unwrap().density();
        let b = StateVector::basis(1, 1).unwrap().density();
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        assert!(trace_distance(&a, &a).unwrap() < 1e-12);
    }

    #[test]
    fn purity_extremes() {
        let pure = StateVector::ghz().density();
        assert!((purity(&pure) - 1.0).abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(3).unwrap();
        assert!((purity(&mixed) - 0.125).abs() < 1e-12);
    }

    #[test]
    fn fuchs_van_de_graaf_bounds_hold() {
        // 1 - sqrt(F) <= T <= sqrt(1 - F) for every pair of states; a
        // violation beyond roundoff means one metric is miscomputed.
        let mut rng = crate::rng::stream(21, "metrics-bounds", 0);
        for i in 0..100 {
            let (a, b) = if i % 2 == 0 {
                (
                    crate::state::random_density(2, &mut rng).unwrap(),
                    crate::state::random_density(2, &mut rng).unwrap(),
                )
            } else {
                (
                    crate::state::random_pure(2, &mut rng).unwrap().density(),
                    crate::state::random_density(2, &mut rng).unwrap(),
                )
            };
            let f = fidelity(&a, &b).unwrap().value;
            let t = trace_distance(&a, &b).unwrap();
            assert!(1.0 - f.sqrt() <= t + 1e-8, "lower bound: F {f} T {t}");
            assert!(t <= (1.0 - f).sqrt() + 1e-8, "upper bound: F {f} T {t}");
        }
    }
}
