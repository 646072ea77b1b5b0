#![allow(dead_code)]

use sprayopt::space::Coded;
use sprayopt::Problem;

/// Every point of the 21⁵ grid over the coded box `[-1, 1]⁵`.
pub fn grid_points() -> impl Iterator<Item = Coded> {
    (0..21usize.pow(5)).map(|code| {
        let mut c = code;
        std::array::from_fn(|_| {
            let v = (c % 21) as f64 / 10.0 - 1.0;
            c /= 21;
            v
        })
    })
}

/// Best canonical value of each objective over the grid, with its argmin.
pub fn grid_optima(problem: &Problem) -> Vec<(f64, Coded)> {
    let mut best = vec![(f64::INFINITY, [0.0; 5]); problem.k()];
    for z in grid_points() {
        for (l, v) in problem.canonical_coded(&z).unwrap().into_iter().enumerate() {
            if v < best[l].0 {
                best[l] = (v, z);
            }
        }
    }
    best
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}
