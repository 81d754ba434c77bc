#![allow(dead_code)]

use kernmoment::rng::stream_rng;
use kernmoment::MeasurementMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian_matrix(p: usize, q: usize, seed: u64) -> MeasurementMatrix {
    let mut rng = stream_rng(seed, 0xfeed);
    let data = (0..p * q).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    MeasurementMatrix::new(p, q, data).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
