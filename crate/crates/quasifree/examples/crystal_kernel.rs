use quasifree::models::{build_crystal, CrystalCoupling};
use quasifree::{s_kernel, state_eval, Beta, TestVector};

fn main() -> quasifree::Result<()> {
    let ctx = build_crystal(2, 1, CrystalCoupling::Decoupled, Beta::finite(1.0)?)?;
    let site = TestVector::basis(2, 0);
    let w = state_eval(&ctx, &site)?; // exp(-<f, B f>/4)
    let s = s_kernel(&ctx, &site, &site, 0.3)?; // Euclidean two point kernel
    println!("state {w}, kernel {s}");
    Ok(())
}
