use hinbal_core::influence::{bidirectional_normalized, minority_influence, ppr, ppr_apply, PprConfig};
use hinbal_core::rng;
use hinbal_core::sparse::CsrMatrix;
use hinbal_core::SparseAdj;
use nalgebra::DMatrix;
use rand::Rng as _;

fn dense_ppr(op: &CsrMatrix, alpha: f64) -> DMatrix<f64> {
    let n = op.rows();
    let a = DMatrix::from_fn(n, n, |i, j| op.get(i, j));
    let m = DMatrix::identity(n, n) - a * (1.0 - alpha);
    m.try_inverse().expect("I - (1-α)Ã is invertible for α > 0") * alpha
}

fn random_bipartite(seed: u64) -> SparseAdj {
    let mut r = rng::stream(seed, 1);
    let nk = r.random_range(1..=25);
    let nt = r.random_range(1..=50 - nk);
    let p: f64 = r.random_range(0.02..0.4);
    let mut edges = Vec::new();
    for i in 0..nk {
        for j in 0..nt {
            if r.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    SparseAdj::from_edges(nk, nt, &edges).unwrap()
}

fn tight(alpha: f64) -> PprConfig {
    PprConfig { alpha, max_iters: 2000, tol: 1e-12 }
}

#[test]
fn series_matches_dense_inverse_on_random_graphs() {
    let alphas = [0.05, 0.15, 0.5, 0.85];
    for seed in 0..50u64 {
        let adj = random_bipartite(seed);
        let alpha = alphas[seed as usize % 4];
        let op = bidirectional_normalized(&adj);
        let got = ppr(&op, &tight(alpha)).unwrap();
        assert!(got.converged);
        let want = dense_ppr(&op, alpha);
        let n = op.rows();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                err = err.max((got.pi.get(i, j) - want[(i, j)]).abs());
            }
        }
        assert!(err <= 1e-6, "seed {seed}, alpha {alpha}: L∞ error {err:e}");
    }
}

#[test]
fn vector_route_matches_matrix_route() {
    for seed in 0..20u64 {
        let adj = random_bipartite(100 + seed);
        let op = bidirectional_normalized(&adj);
        let cfg = tight(0.15);
        let pi = ppr(&op, &cfg).unwrap().pi;
        let nk = adj.rows();
        let members: Vec<usize> = (0..adj.cols()).step_by(3).collect();
        let block = hinbal_core::Matrix::from_fn(nk, adj.cols(), |i, j| pi.get(i, nk + j));
        let by_matrix = minority_influence(&block, &members).unwrap();
        let mut x = vec![0.0; op.rows()];
        for &m in &members {
            x[nk + m] = 1.0;
        }
        let (by_vector, converged) = ppr_apply(&op, &x, &cfg).unwrap();
        assert!(converged);
        for (a, b) in by_matrix.iter().zip(&by_vector[..nk]) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn operator_is_symmetric_with_spectral_radius_at_most_one() {
    for seed in 0..10u64 {
        let op = bidirectional_normalized(&random_bipartite(200 + seed));
        let n = op.rows();
        let a = DMatrix::from_fn(n, n, |i, j| op.get(i, j));
        assert!((a.clone() - a.transpose()).amax() < 1e-15);
        let eig = a.symmetric_eigen();
        assert!(eig.eigenvalues.amax() <= 1.0 + 1e-12);
    }
}

#[test]
fn closed_forms() {
    let adj = random_bipartite(7);
    let op = bidirectional_normalized(&adj);
    let id = ppr(&op, &PprConfig { alpha: 1.0, ..Default::default() }).unwrap();
    let n = op.rows();
    for i in 0..n {
        for j in 0..n {
            assert_eq!(id.pi.get(i, j), if i == j { 1.0 } else { 0.0 });
        }
    }
    let empty = bidirectional_normalized(&SparseAdj::empty(4, 5));
    let p = ppr(&empty, &PprConfig { alpha: 0.3, ..Default::default() }).unwrap();
    for i in 0..9 {
        for j in 0..9 {
            let want = if i == j { 0.3 } else { 0.0 };
            assert!((p.pi.get(i, j) - want).abs() <= 1e-12);
        }
    }
}
