//! Paired convergence comparison: how many iterations each solver needs to
//! bring the objective within 1e-6 of the closed-form optimum.

use gcrf::eval::{compare_solvers, standard_suite, suite_stats};
use gcrf::SolverConfig;

fn main() {
    // tight tolerances so both solvers land on the same parameters
    let config = SolverConfig {
        grad_tol: 1e-7,
        primal_tol: 1e-8,
        dual_tol: 1e-8,
        ..SolverConfig::default()
    };
    println!("seed |  gd iters | admm iters |        f* | agree");
    println!("-----+-----------+------------+-----------+------");
    for cell in standard_suite(5) {
        let stats = suite_stats(&cell).expect("suite stats");
        let cmp = compare_solvers(&stats, &config).expect("comparison");
        let fmt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_else(|| "-".into());
        println!(
            "{:>4} | {:>9} | {:>10} | {:>9.4} | {}",
            cell.seed,
            fmt(cmp.gd_iters),
            fmt(cmp.admm_iters),
            cmp.f_star,
            cmp.agree
        );
    }
}
