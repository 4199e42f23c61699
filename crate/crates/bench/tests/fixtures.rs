use thorpe_lab::first_bianchi_residual;
use thorpe_lab_bench::{curvature, curvature_power};

#[test]
fn fixtures_are_curvature_tensors_of_the_right_degree() {
    let r = curvature(6, 1).unwrap();
    assert!(first_bianchi_residual(&r).unwrap() < 1e-12);
    let r2 = curvature_power(8, 2, 3).unwrap();
    assert_eq!((r2.n(), r2.degree()), (8, (4, 4)));
    assert!(r2.is_symmetric(1e-12) && r2.norm() > 0.0);
}

#[test]
fn fixtures_are_reproducible() {
    assert_eq!(curvature(5, 9).unwrap(), curvature(5, 9).unwrap());
    assert_ne!(curvature(5, 9).unwrap(), curvature(5, 10).unwrap());
}
