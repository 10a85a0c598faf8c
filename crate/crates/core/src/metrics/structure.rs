//! Edit distances of an assignment against two references: the greedy
//! packing (HC, on logical indices) and a staircase diagonal (DD, on the
//! displayed matrix).

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{apply_layout, DisplayedSolution, ProblemInstance, Solution};
use crate::solver::greedy_lbf_lif;

fn check_dims(instance: &ProblemInstance, solution: &Solution) -> Result<()> {
    if solution.num_items() != instance.num_items() || solution.num_bins() != instance.num_bins() {
        return Err(Error::DimensionMismatch(format!(
            "solution is {}x{}, instance is {}x{}",
            solution.num_items(),
            solution.num_bins(),
            instance.num_items(),
            instance.num_bins()
        )));
    }
    Ok(())
}

/// Size of the symmetric difference of two edge sets over fixed node sets,
/// which is the unit-cost edge edit distance.
pub fn edge_edit_distance(a: &Solution, b: &Solution) -> u32 {
    let ea: BTreeSet<_> = a.edges().collect();
    let eb: BTreeSet<_> = b.edges().collect();
    ea.symmetric_difference(&eb).count() as u32
}

/// Heuristic-related complexity: edit distance to the greedy LBF-LIF packing.
pub fn hc(instance: &ProblemInstance, solution: &Solution) -> Result<u32> {
    check_dims(instance, solution)?;
    Ok(edge_edit_distance(solution, &greedy_lbf_lif(instance)))
}

/// Column of the single 1 in each row of the approximated diagonal.
///
/// Row `i` gets column `round(i * (cols - 1) / (rows - 1))` with the
/// quotient formed in floating point and ties rounded to even. A single row
/// gets column 0.
pub fn diagonal_columns(rows: usize, cols: usize) -> Vec<usize> {
    if rows == 1 {
        return vec![0];
    }
    (0..rows)
        .map(|i| {
            let x = (i * (cols - 1)) as f64 / (rows - 1) as f64;
            x.round_ties_even() as usize
        })
        .collect()
}

pub fn diagonal_matrix(rows: usize, cols: usize) -> Solution {
    let mut m = Solution::empty(rows, cols);
    for (row, col) in diagonal_columns(rows, cols).into_iter().enumerate() {
        m.set(row, col, true);
    }
    m
}

/// Diagonal dissimilarity of the matrix as displayed.
pub fn dd(instance: &ProblemInstance, displayed: &DisplayedSolution) -> Result<u32> {
    check_dims(instance, displayed.solution())?;
    let shown = apply_layout(displayed);
    let diag = diagonal_matrix(shown.num_items(), shown.num_bins());
    Ok(edge_edit_distance(&shown, &diag))
}
