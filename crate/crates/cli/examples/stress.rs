use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use singres_core::arith::{rat_int, Rat};
use singres_core::poly::SparsePoly;
use singres_core::resolve::{resolve, ResolveConfig};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut stats = (0usize, 0usize, 0usize, 0usize); // resolved, stopped, err, skipped
    for i in 0..400 {
        let n = if i % 3 == 0 { 3 } else { 2 };
        let mut p = SparsePoly::<Rat>::zero(n);
        for _ in 0..rng.gen_range(2..=4) {
            let e: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=4)).collect();
            p.add_term(e, rat_int(rng.gen_range(-3..=3)));
        }
        if p.is_zero() || p.ord().unwrap() < 2 {
            stats.3 += 1;
            continue;
        }
        // keep degrees desk-scale
        if p.deg().unwrap() > 8 {
            stats.3 += 1;
            continue;
        }
        let cfg = ResolveConfig { max_steps: 6, max_charts: 300, ..Default::default() };
        eprintln!("case {i}: {:?}", p.support());
        match resolve(&p, &cfg) {
            Ok(tree) => {
                if let Err(e) = tree.validate_ledger() {
                    println!("LEDGER #{i}: {e} poly={:?}", p.support());
                }
                if tree.all_resolved() { stats.0 += 1 } else { stats.1 += 1 }
            }
            Err(e) => {
                stats.2 += 1;
                println!("ERR #{i}: {e:?} poly supp={:?}", p.support());
            }
        }
    }
    println!("resolved={} stopped={} errors={} skipped={}", stats.0, stats.1, stats.2, stats.3);
}
