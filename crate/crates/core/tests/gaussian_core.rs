mod support;

use nalgebra::DMatrix;
use pesn::gaussian::{gaussian_product, linear_transform, sample};
use pesn::{DiagonalGaussian, Gaussian1D, RngStream};
use support::{integrate, normal_pdf};

#[test]
fn identity_and_zero_maps() {
    let x = DiagonalGaussian::new(vec![0.3, -1.0], vec![0.5, 2.0]).unwrap();
    let id = linear_transform(&x, &DMatrix::identity(2, 2), &[0.0, 0.0]).unwrap();
    assert_eq!(id, x);
    let z = linear_transform(&x, &DMatrix::zeros(2, 2), &[1.0, 2.0]).unwrap();
    assert_eq!(z.mean(), &[1.0, 2.0]);
    assert_eq!(z.variance(), &[0.0, 0.0]);
}

#[test]
fn scaling_matches_sampling() {
    let x = DiagonalGaussian::new(vec![1.0], vec![1.0]).unwrap();
    let y = linear_transform(&x, &DMatrix::from_element(1, 1, 2.0), &[0.0]).unwrap();
    assert_eq!((y.mean()[0], y.variance()[0]), (2.0, 4.0));
    let n = 1_000_000;
    let s = sample(&x, n, &RngStream::new(21)).unwrap();
    let ys: Vec<f64> = s.column(0).iter().map(|v| 2.0 * v).collect();
    let m = ys.iter().sum::<f64>() / n as f64;
    let v = ys.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se_m = (4.0 / n as f64).sqrt();
    // variance of the sample variance of a normal is 2 s^4 / (n - 1)
    let se_v = (2.0 * 16.0 / (n - 1) as f64).sqrt();
    assert!((m - 2.0).abs() < 3.0 * se_m, "{m}");
    assert!((v - 4.0).abs() < 3.0 * se_v, "{v}");
}

#[test]
fn product_scale_by_quadrature() {
    let a = Gaussian1D::new(0.0, 1.0).unwrap();
    let (scale, c) = gaussian_product(a, a).unwrap();
    assert_eq!(c.mean, 0.0);
    assert!((c.variance - 0.5).abs() < 1e-15);
    let numeric = integrate(|z| normal_pdf(z, 0.0, 1.0).powi(2), -10.0, 10.0, 1e-14);
    assert!((scale - numeric).abs() < 1e-12);
    assert!((scale - 0.282_09).abs() < 1e-5);

    let (s2, c2) = gaussian_product(Gaussian1D::new(0.7, 0.3).unwrap(), Gaussian1D::new(0.7, 2.0).unwrap()).unwrap();
    assert!((c2.mean - 0.7).abs() < 1e-15);
    let numeric = integrate(|z| normal_pdf(z, 0.7, 0.3) * normal_pdf(z, 0.7, 2.0), -15.0, 15.0, 1e-14);
    assert!((s2 - numeric).abs() < 1e-12);
}

#[test]
fn sampling_degenerate_deterministic_and_consistent() {
    let p = DiagonalGaussian::point(vec![1.5, -2.0]);
    let s = sample(&p, 10, &RngStream::new(1)).unwrap();
    assert!(s.row_iter().all(|r| r[0] == 1.5 && r[1] == -2.0));

    let x = DiagonalGaussian::new(vec![0.0], vec![1.0]).unwrap();
    let a = sample(&x, 1000, &RngStream::new(3)).unwrap();
    assert_eq!(a, sample(&x, 1000, &RngStream::new(3)).unwrap());

    let n = 1_000_000;
    let s = sample(&x, n, &RngStream::new(8)).unwrap();
    let m = s.column(0).mean();
    let v = s.column(0).variance();
    assert!(m.abs() < 4.0 / (n as f64).sqrt(), "{m}");
    assert!((v - 1.0).abs() < 0.01, "{v}");
}
