//! Near-orthogonal sign-vector packings: exhaustive construction in low
//! dimension and randomized construction at dimension 64.

use mbail::envs::packing::{sign_dot, PackingSet};

fn main() {
    for dim in [4usize, 8, 12] {
        let set = PackingSet::build(dim, 0.5, 0).unwrap();
        println!(
            "dim {dim:2}: {} vectors, pairwise dot <= {}, verified {}",
            set.vectors.len(),
            (dim as f64 * 0.5) as i64,
            set.verify()
        );
    }

    let set = PackingSet::build(64, 0.5, 0).unwrap();
    let target = PackingSet::target_size(64, 0.5);
    let mut worst = i64::MIN;
    for (i, &x) in set.vectors.iter().enumerate() {
        for &y in &set.vectors[i + 1..] {
            worst = worst.max(sign_dot(x, y, 64));
        }
    }
    println!(
        "dim 64: {} vectors (target {target}), worst pairwise dot {worst} (cap 32)",
        set.vectors.len()
    );

    let separated = PackingSet::build_separated(6).unwrap();
    println!(
        "dim 6 separated set: {} vectors, pairwise dot <= 0, verified {}",
        separated.vectors.len(),
        separated.verify()
    );
}
