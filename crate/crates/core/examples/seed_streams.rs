//! Labelled, splittable seed streams: the same path always yields the same draws.

use rand::Rng;

use ldsc_forge::rng::SeedStream;

fn main() {
    let root = SeedStream::new(42);
    let draw = |s: &SeedStream| s.rng().random::<u64>();
    let a = root.replicate(3).child("gwas", 0);
    let b = SeedStream::new(42).replicate(3).child("gwas", 0);
    println!("same path, same draw: {}", draw(&a) == draw(&b));
    println!("sibling streams differ: {}", draw(&a) != draw(&root.replicate(3).child("gwas", 1)));
    println!("replicates differ: {}", draw(&a) != draw(&root.replicate(4).child("gwas", 0)));
}
