//! The closed-form intersection exponents and the multi-packet generalisation.

use bxi::exponents::{u_fn, v_fn, xi_exact, xi_exact_general};

fn main() -> bxi::Result<()> {
    println!("{:>6} {:>10} {:>10}", "λ", "ξ(2,λ)", "2 + λ");
    for l in [0.0, 0.5, 1.0, 2.0, 5.0] {
        println!("{l:>6} {:>10.6} {:>10.6}", xi_exact(l)?, 2.0 + l);
    }
    let via_uv = v_fn(u_fn(2.0)? + u_fn(1.0)?);
    println!("V(U(2) + U(1)) = {via_uv}");
    println!("three single paths, ξ(1,1,1) = {:.6}", xi_exact_general(&[1, 1, 1], &[])?);
    println!("packets (2, 1) with λ = 0.5: {:.6}", xi_exact_general(&[2, 1], &[0.5])?);
    Ok(())
}
