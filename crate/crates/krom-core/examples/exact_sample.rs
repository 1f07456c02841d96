//! Generate one exact-moment sample and confirm the match (the README
//! walkthrough, runnable).

use krom_core::krom::{krom_simulate, SolveConfig};
use krom_core::moments::{kollo_skewness, sample_mean_cov, TargetMoments};
use krom_core::valuegen::{DistributionFamily, ValueSource};
use nalgebra::{DMatrix, DVector};

fn main() -> Result<(), krom_core::KromError> {
    let target = TargetMoments::new(
        DVector::zeros(3),                       // mean
        DMatrix::identity(3, 3),                 // covariance
        DVector::from_vec(vec![0.8, -0.5, 0.4]), // Kollo skewness
    )?;
    let family = DistributionFamily::Normal { mu: 0.0, sigma: 1.0 };
    let source = ValueSource::parametric(family, 0.7f64.sqrt())?;
    let sample = krom_simulate(&target, &SolveConfig::new(500, source, 42))?;
    assert_eq!(sample.x.rows(), 500);

    let (mean, cov) = sample_mean_cov(&sample.x)?;
    let tau = kollo_skewness(&sample.x)?;
    println!("mean error  {:.3e}", (mean - target.mu()).amax());
    println!("cov error   {:.3e}", (cov - target.v()).amax());
    println!("kollo error {:.3e}", (tau - target.tau()).amax());
    Ok(())
}
