use kgedmd as _;
use ndarray::Array2;
use ndarray_linalg::{c64, Eig, Eigh, UPLO};
use std::time::Instant;

fn main() {
    for &n in &[1000usize, 2000] {
        let a = Array2::from_shape_fn((n, n), |(i, j)| ((i * 31 + j * 17) % 101) as f64 / 101.0);
        let t = Instant::now();
        let (_vals, _vecs): (ndarray::Array1<c64>, Array2<c64>) = a.eig().unwrap();
        println!("dgeev n={}: {:.1?}", n, t.elapsed());
        let s = &a + &a.t();
        let t = Instant::now();
        let _ = s.eigh(UPLO::Lower).unwrap();
        println!("dsyev n={}: {:.1?}", n, t.elapsed());
    }
}
