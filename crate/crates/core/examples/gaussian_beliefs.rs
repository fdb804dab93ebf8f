//! Diagonal Gaussian beliefs: linear propagation, products and sampling.

use nalgebra::DMatrix;
use pesn::gaussian::{gaussian_product, linear_transform, sample};
use pesn::{DiagonalGaussian, Gaussian1D, RngStream};

fn main() -> pesn::Result<()> {
    let x = DiagonalGaussian::new(vec![1.0, -0.5], vec![0.2, 0.1])?;
    let w = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, -1.0]);
    let y = linear_transform(&x, &w, &[0.0, 0.3])?;
    println!("W x + b: mean {:?}, var {:?}", y.mean(), y.variance());

    let (scale, prod) = gaussian_product(Gaussian1D::new(0.0, 1.0)?, Gaussian1D::new(1.0, 0.5)?)?;
    println!("product: scale {scale:.5}, mean {:.5}, var {:.5}", prod.mean, prod.variance);

    let s = sample(&y, 100_000, &RngStream::new(7))?;
    let m0 = s.column(0).mean();
    let v0 = s.column(0).variance();
    println!("sampled first component: mean {m0:.4}, var {v0:.4}");
    Ok(())
}
