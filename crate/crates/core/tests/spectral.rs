use std::f64::consts::PI;

use modwave_core::chain::{ChainSpec, FullChain};
use modwave_core::integrators::{identity_state, symplectic_euler_integrate, StepConfig};
use modwave_core::mathieu::{mathieu_monodromy, MathieuParams};
use modwave_core::spectral::{
    det, det_real, eig, eig_real, eigenvalues, mat_pow, symplectic_deviation, symplectic_deviation_real,
    to_complex, CMatrix, RMatrix, SymplecticForm,
};
use modwave_core::Complex64;

fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    v
}

#[test]
fn identity_eigenvalues_are_one() {
    let e = eig_real(&RMatrix::identity(4, 4)).unwrap();
    assert_eq!(e.values.len(), 4);
    for v in &e.values {
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }
    assert!(e.max_residual(&CMatrix::identity(4, 4)) < 1e-14);
}

#[test]
fn rotation_generator_has_imaginary_pair() {
    let a = RMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let vals = sorted(eigenvalues(&to_complex(&a)).unwrap());
    assert!((vals[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
    assert!((vals[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    let e = eig(&to_complex(&a)).unwrap();
    assert!(e.max_residual(&to_complex(&a)) < 1e-13);
}

#[test]
fn symplectic_euler_product_has_reciprocal_pairs() {
    let spec = ChainSpec {
        z: 3,
        cells: 1,
        dk: 0.4,
        dm: 0.3,
        nu: 0.7,
        ..ChainSpec::default()
    };
    let chain = FullChain::new(spec).unwrap();
    let x = symplectic_euler_integrate(&chain, &identity_state::<f64>(6), 0.0, 3.7, 37).unwrap();
    let m = RMatrix::from_column_slice(6, 6, &x);
    assert!(symplectic_deviation_real(&m, SymplecticForm::new(3)).unwrap() < 1e-12 * m.norm());
    let vals = eigenvalues(&to_complex(&m)).unwrap();
    for &l in &vals {
        let inv = 1.0 / l;
        let nearest = vals.iter().map(|&o| (o - inv).norm()).fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-8, "1/{l} has no partner, gap {nearest}");
    }
}

#[test]
fn symplectic_deviation_examples() {
    let j = SymplecticForm::new(2);
    assert!(symplectic_deviation_real(&RMatrix::identity(4, 4), j).unwrap() < 1e-15);
    assert!(symplectic_deviation_real(&j.matrix(), j).unwrap() < 1e-15);
    let d = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.5]));
    assert!(symplectic_deviation_real(&d, SymplecticForm::new(1)).unwrap() < 1e-15);
    let bad = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0]));
    assert!(symplectic_deviation(&to_complex(&bad), SymplecticForm::new(1)).unwrap() > 0.5);
}

#[test]
fn determinant_examples() {
    assert!((det_real(&RMatrix::identity(5, 5)).unwrap() - 1.0).abs() < 1e-15);
    let d = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0]));
    assert!((det_real(&d).unwrap() - 6.0).abs() < 1e-14);
    assert!((det(&to_complex(&d)).unwrap() - Complex64::new(6.0, 0.0)).norm() < 1e-14);
    let m = mathieu_monodromy(MathieuParams::new(1.0, 0.5).unwrap(), &StepConfig::default()).unwrap();
    assert!((det_real(&m).unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn non_square_input_is_rejected() {
    assert!(det_real(&RMatrix::zeros(2, 3)).is_err());
    assert!(eig_real(&RMatrix::zeros(3, 2)).is_err());
}

#[test]
fn matrix_powers() {
    let theta = 2.0 * PI / 7.0;
    let r = RMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
    assert!((mat_pow(&r, 7) - RMatrix::identity(2, 2)).norm() < 1e-13);
    assert_eq!(mat_pow(&r, 0), RMatrix::identity(2, 2));
}
