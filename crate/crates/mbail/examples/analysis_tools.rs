//! Divergence helpers and combinatorial complexity measures: Hellinger and
//! Kullback-Leibler values, brute-force eluder dimension, and a toy
//! covering number.

use mbail::analysis::{
    covering_number_toy, eluder_dim_bruteforce, hellinger_sq, kl_discrete, kl_rademacher,
};

fn main() {
    let p = [0.5, 0.5];
    let q = [0.9, 0.1];
    println!("squared Hellinger H2(p, q) = {:.12}", hellinger_sq(&p, &q).unwrap());
    println!("KL(p || q)                 = {:.12}", kl_discrete(&p, &q).unwrap());
    for eps in [0.05, 0.1, 0.2, 0.25] {
        println!(
            "Rademacher KL at eps {eps:.2}: {:.6} (quadratic cap {:.6})",
            kl_rademacher(eps).unwrap(),
            16.0 * eps * eps
        );
    }

    // Function class: threshold indicators on five points. Its eluder
    // dimension at small scale equals the number of points.
    let points = 5;
    let thresholds: Vec<Vec<f64>> = (0..=points)
        .map(|t| (0..points).map(|x| if x >= t { 1.0 } else { 0.0 }).collect())
        .collect();
    let result = eluder_dim_bruteforce(&thresholds, 0.5, 2, false).unwrap();
    println!(
        "eluder dimension of {points}-point thresholds at eps 0.5: {} (exact: {})",
        result.length, result.exact
    );

    let cover = covering_number_toy(&thresholds, 0.5).unwrap();
    println!("covering number of the same class at radius 0.5: {cover}");
}
