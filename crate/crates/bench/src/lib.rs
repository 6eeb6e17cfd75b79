//! Benchmark inputs shared by the criterion targets.

use jsrlab_core::schema::{example1, example2, System};
use jsrlab_core::{Matrix, MatrixTuple};

pub fn first_example() -> System {
    example1().validate().expect("bundled example is valid")
}

pub fn second_example() -> System {
    example2().validate().expect("bundled example is valid")
}

/// `n` rotations of the plane by angles `1, 2, …` radians.
pub fn rotations(n: usize) -> MatrixTuple {
    let mats = (1..=n)
        .map(|k| {
            let (s, c) = (k as f64).sin_cos();
            Matrix::from_rows(&[vec![c, -s], vec![s, c]]).expect("2x2")
        })
        .collect();
    MatrixTuple::new(mats).expect("nonempty")
}
