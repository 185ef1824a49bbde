use singres_core::arith::{rat_int, Rat};
use singres_core::poly::SparsePoly;
use singres_core::resolve::{resolve, ResolveConfig};
fn main() {
    let p: SparsePoly<Rat> = SparsePoly::from_terms(3, &[
        (rat_int(1), &[1i64, 2, 1][..]),
        (rat_int(-2), &[1, 3, 0][..]),
        (rat_int(3), &[1, 3, 4][..]),
    ]);
    let cfg = ResolveConfig { max_steps: 12, max_charts: 3000, ..Default::default() };
    match resolve(&p, &cfg) {
        Ok(t) => println!("ok resolved={} nodes={}", t.all_resolved(), t.nodes.len()),
        Err(e) => println!("err {e:?}"),
    }
}
