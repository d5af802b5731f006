//! Rotations, polar form and relation composition on small complex vectors.

use std::f64::consts::PI;

use terp::complex::{distance, from_polar, hadamard, modulus, phase, ComplexVec, Norm};

fn main() -> terp::Result<()> {
    let a = ComplexVec::from_phase(&[0.3, -1.2, 2.5]);
    let b = ComplexVec::from_phase(&[1.0, 0.4, 1.5]);
    let ab = hadamard(&a, &b)?;
    println!("|a∘b|  = {:?}", modulus(&ab));
    // phases add and wrap back into (-π, π]
    println!("arg    = {:?}", phase(&ab));

    let scaled = from_polar(&[2.0, 0.5, 1.0], &[PI / 2.0, 0.0, -PI / 4.0])?;
    println!("scaled = {:?} + i{:?}", scaled.re, scaled.im);

    let h = ComplexVec::new(vec![1.0, 0.0, 0.5], vec![0.0, 1.0, 0.5])?;
    let t = hadamard(&h, &a)?;
    println!("d(h∘a, t)   L1 {:.2e}", distance(&t, &hadamard(&h, &a)?, Norm::L1)?);
    println!("d(h∘a∘ā, h) L2 {:.2e}", distance(&hadamard(&t, &a.conj())?, &h, Norm::L2)?);
    Ok(())
}
