//! Preference and generalised kernels between duels.
//!
//! ```text
//! cargo run --example edge_kernels
//! ```

use gpgp::dataset::ItemTable;
use gpgp::kernels::{edge_gram, generalised_kernel, preference_kernel, EdgeKernel, EdgePair, KernelConfig};
use nalgebra::DMatrix;

fn main() -> gpgp::error::Result<()> {
    let items = ItemTable::from_matrix(DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]))?;
    let rbf = KernelConfig::rbf(1.0)?;

    let ab = EdgePair::new(0, 1);
    let bc = EdgePair::new(1, 2);
    println!("k0(ab, bc)  = {:+.6}", preference_kernel(ab, bc, &items, &rbf)?);
    println!("kE(ab, bc)  = {:+.6}", generalised_kernel(ab, bc, &items, &rbf)?);
    println!("kE(ba, bc)  = {:+.6}  (sign flips with the edge)", generalised_kernel(ab.swapped(), bc, &items, &rbf)?);
    println!("kE(aa, bc)  = {:+.6}", generalised_kernel(EdgePair::new(0, 0), bc, &items, &rbf)?);

    // The 3-cycle a > b > c > a as edges.
    let cycle = [EdgePair::new(0, 1), EdgePair::new(1, 2), EdgePair::new(2, 0)];
    for kind in [EdgeKernel::Preference, EdgeKernel::Generalised] {
        let gram = edge_gram(&cycle, &items, &rbf, kind)?;
        let eig = gram.clone().symmetric_eigen().eigenvalues;
        let rank = eig.iter().filter(|v| v.abs() > 1e-10 * gram.trace()).count();
        println!("{kind:?} Gram on the cycle has rank {rank}:{gram:.4}");
    }
    Ok(())
}
