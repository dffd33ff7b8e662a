// Links the system OpenBLAS, which bundles BLAS, CBLAS, and LAPACK.
fn main() {
    println!("cargo:rustc-link-lib=dylib=openblas");
}
