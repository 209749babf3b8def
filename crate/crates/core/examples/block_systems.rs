//! Tensorized Borell cores and the three-way equivalence for block systems.

use bellman_core::catalog::{BorellB, PowerProduct};
use bellman_core::general_rank::{gpde1_equivalence, random_ridge_families, BlockSystem, GpdeOptions};
use bellman_core::grid::GridSpec;
use bellman_core::verify::tensorization_check;
use bellman_core::SymMatrix;

fn main() -> bellman_core::Result<()> {
    let grid = GridSpec::uniform(2, 0.05, 0.95, 11)?;
    for n in [2, 3] {
        let r = tensorization_check(0.5, n, &grid, 1e-10)?;
        println!("n = {n}: spectrum gap {:.2e}", r.max_residual);
    }
    let bs = BlockSystem::tensorized(0.5, 2)?;
    let c = SymMatrix::identity(bs.k());
    let borell = BorellB::new(0.5)?;
    let tests = random_ridge_families(&borell, &bs, 3, 11)?;
    let r = gpde1_equivalence(&borell, &bs, &c, &tests, &GpdeOptions::new(GridSpec::uniform(2, 0.05, 0.95, 7)?, bs.k()))?;
    println!("borell: {:?} {:?}", r.verdict, (r.extra("i_pass"), r.extra("ii_pass"), r.extra("iii_pass")));
    let power = PowerProduct::new(1.2, 1.2)?;
    let tests = random_ridge_families(&power, &bs, 3, 11)?;
    let r = gpde1_equivalence(&power, &bs, &c, &tests, &GpdeOptions::new(GridSpec::uniform(2, 0.2, 0.9, 5)?, bs.k()))?;
    println!("power 1.2: {:?} {:?}", r.verdict, (r.extra("i_pass"), r.extra("ii_pass"), r.extra("iii_pass")));
    Ok(())
}
