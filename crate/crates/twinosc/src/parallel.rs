//! Multi-threaded sweep evaluation.
//!
//! Every cell depends only on the grid and its own indices, so results are
//! identical for any thread count.

use rayon::prelude::*;

use twinosc_core::dynamics::IntegratorConfig;
use twinosc_core::sweep::{cell_index, evaluate_cell, Interferogram, SweepGrid};

use crate::error::CliError;

/// Thread count used when none is requested.
pub fn default_parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Evaluates all cells on `threads` worker threads; output is in row-major order.
pub fn run_sweep(grid: &SweepGrid, cfg: &IntegratorConfig, threads: usize) -> Result<Interferogram, CliError> {
    grid.validate()?;
    cfg.validate()?;
    if threads == 0 {
        return Err(CliError::Config("parallelism must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker threads: {e}")))?;
    let outcomes = pool.install(|| {
        (0..grid.cell_count())
            .into_par_iter()
            .map(|k| {
                let (i, j) = cell_index(grid, k);
                evaluate_cell(grid, i, j, cfg)
            })
            .collect()
    });
    Ok(Interferogram::assemble(grid.clone(), outcomes)?)
}
