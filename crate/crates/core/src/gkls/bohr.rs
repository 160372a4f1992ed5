use crate::linalg::{spectral_norm, CMatrix};

/// Split `op` into Bohr eigenoperators of `hamiltonian`.
///
/// Returns `(omega, A(omega))` pairs with `[H, A(omega)] = omega A(omega)`
/// and `sum A(omega) = op`. Frequencies closer than `1e-9 ||H||` share a bin.
/// Lowering operators therefore carry negative frequencies.
pub fn bohr_components(hamiltonian: &CMatrix, op: &CMatrix) -> Vec<(f64, CMatrix)> {
    let d = hamiltonian.nrows();
    let eig = crate::linalg::hermitian_part(hamiltonian).symmetric_eigen();
    let vecs = &eig.eigenvectors;
    let energies = &eig.eigenvalues;
    let tol = 1e-9 * spectral_norm(hamiltonian).max(f64::MIN_POSITIVE);
    let in_eigenbasis = vecs.adjoint() * op * vecs;
    let mut bins: Vec<(f64, CMatrix)> = Vec::new();
    for k in 0..d {
        for l in 0..d {
            let entry = in_eigenbasis[(k, l)];
            if entry.norm() == 0.0 {
                continue;
            }
            let omega = energies[k] - energies[l];
            let slot = match bins.iter().position(|(w, _)| (w - omega).abs() <= tol) {
                Some(i) => i,
                None => {
                    bins.push((omega, CMatrix::zeros(d, d)));
                    bins.len() - 1
                }
            };
            bins[slot].1[(k, l)] += entry;
        }
    }
    bins.sort_by(|a, b| a.0.total_cmp(&b.0));
    bins.into_iter().map(|(w, m)| (w, vecs * m * vecs.adjoint())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn components_sum_back_and_are_eigenoperators() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in 2..=4 {
            let raw = CMatrix::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let h = (&raw + raw.adjoint()) * c(0.5, 0.0);
            let op = CMatrix::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let parts = bohr_components(&h, &op);
            let total = parts.iter().fold(CMatrix::zeros(d, d), |acc, (_, a)| acc + a);
            assert!((total - &op).norm() < 1e-12);
            for (w, a) in &parts {
                let comm = &h * a - a * &h;
                assert!((comm - a * c(*w, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn qubit_lowering_has_negative_frequency() {
        let h = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(-1.0, 0.0), c(1.0, 0.0)]));
        let sx = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let parts = bohr_components(&h, &sx);
        assert_eq!(parts.len(), 2);
        assert!((parts[0].0 + 2.0).abs() < 1e-14);
        assert!((parts[0].1[(0, 1)].re - 1.0).abs() < 1e-14);
    }
}
