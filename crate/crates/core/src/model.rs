//! Problem instances, assignment matrices, display layouts and the
//! constraint checks shared by every other module.
//!
//! An assignment matrix has one row per item and one column per bin. A
//! cell is set when the item is packed into that bin.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One multiple-subset-sum problem: fixed bins, items whose profit equals
/// their size.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProblemInstance {
    id: String,
    bins: Vec<u32>,
    items: Vec<u32>,
}

/// Reasons an instance falls outside the generator's regime.
#[derive(Debug, Clone, PartialEq)]
pub enum RegimeViolation {
    BinCount(usize),
    ItemCount(usize),
    SizeOffGrid { item: usize, size: u32 },
    CapacityOffGrid { bin: usize, capacity: u32 },
    ItemExceedsLargestBin,
    BinBelowSmallestItem,
    RatioOutOfRange(f64),
}

impl ProblemInstance {
    pub fn new(id: impl Into<String>, bins: Vec<u32>, items: Vec<u32>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::InvalidInstance("at least one bin required".into()));
        }
        if items.is_empty() {
            return Err(Error::InvalidInstance("at least one item required".into()));
        }
        if let Some(i) = bins.iter().position(|&w| w == 0) {
            return Err(Error::InvalidInstance(format!("bin {i} has zero capacity")));
        }
        if let Some(j) = items.iter().position(|&z| z == 0) {
            return Err(Error::InvalidInstance(format!("item {j} has zero size")));
        }
        Ok(Self {
            id: id.into(),
            bins,
            items,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn bins(&self) -> &[u32] {
        &self.bins
    }

    pub fn items(&self) -> &[u32] {
        &self.items
    }

    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn total_capacity(&self) -> u64 {
        self.bins.iter().map(|&w| u64::from(w)).sum()
    }

    pub fn total_size(&self) -> u64 {
        self.items.iter().map(|&z| u64::from(z)).sum()
    }

    /// Load-capacity ratio: total item size over total bin capacity.
    pub fn difficulty(&self) -> f64 {
        self.total_size() as f64 / self.total_capacity() as f64
    }

    /// Checks the generator regime: 4-6 bins, 7-9 items, sizes on the 5..=100
    /// grid, capacities on the 10..=100 grid, no item larger than the largest
    /// bin, no bin smaller than the smallest item, ratio in [0.8, 1.0].
    ///
    /// The "at least two optima" condition needs the solver and is checked
    /// by [`crate::solver::EnumerationResult::has_multiple_optima`].
    pub fn regime_violations(&self) -> Vec<RegimeViolation> {
        let mut out = Vec::new();
        if !(4..=6).contains(&self.bins.len()) {
            out.push(RegimeViolation::BinCount(self.bins.len()));
        }
        if !(7..=9).contains(&self.items.len()) {
            out.push(RegimeViolation::ItemCount(self.items.len()));
        }
        for (item, &size) in self.items.iter().enumerate() {
            if size % 5 != 0 || !(5..=100).contains(&size) {
                out.push(RegimeViolation::SizeOffGrid { item, size });
            }
        }
        for (bin, &capacity) in self.bins.iter().enumerate() {
            if capacity % 10 != 0 || !(10..=100).contains(&capacity) {
                out.push(RegimeViolation::CapacityOffGrid { bin, capacity });
            }
        }
        let max_bin = self.bins.iter().copied().max().unwrap_or(0);
        let min_bin = self.bins.iter().copied().min().unwrap_or(0);
        let max_item = self.items.iter().copied().max().unwrap_or(0);
        let min_item = self.items.iter().copied().min().unwrap_or(0);
        if max_item > max_bin {
            out.push(RegimeViolation::ItemExceedsLargestBin);
        }
        if min_bin < min_item {
            out.push(RegimeViolation::BinBelowSmallestItem);
        }
        let ratio = self.difficulty();
        if !(0.8..=1.0).contains(&ratio) {
            out.push(RegimeViolation::RatioOutOfRange(ratio));
        }
        out
    }

    pub fn in_paper_regime(&self) -> bool {
        self.regime_violations().is_empty()
    }
}

/// Binary item x bin assignment matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Solution {
    num_items: usize,
    num_bins: usize,
    cells: Vec<bool>,
}

impl Solution {
    pub fn empty(num_items: usize, num_bins: usize) -> Self {
        Self {
            num_items,
            num_bins,
            cells: vec![false; num_items * num_bins],
        }
    }

    /// Builds a matrix from a per-item bin index (`None` = unassigned).
    pub fn from_assignment(assignment: &[Option<usize>], num_bins: usize) -> Result<Self> {
        let mut sol = Self::empty(assignment.len(), num_bins);
        for (item, bin) in assignment.iter().enumerate() {
            if let Some(bin) = *bin {
                if bin >= num_bins {
                    return Err(Error::DimensionMismatch(format!(
                        "item {item} assigned to bin {bin}, only {num_bins} bins"
                    )));
                }
                sol.set(item, bin, true);
            }
        }
        Ok(sol)
    }

    /// Builds a matrix from rows of 0/1 entries.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let num_bins = rows.first().map_or(0, Vec::len);
        let mut sol = Self::empty(rows.len(), num_bins);
        for (item, row) in rows.iter().enumerate() {
            if row.len() != num_bins {
                return Err(Error::DimensionMismatch(format!(
                    "row {item} has {} columns, expected {num_bins}",
                    row.len()
                )));
            }
            for (bin, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => sol.set(item, bin, true),
                    other => {
                        return Err(Error::Malformed(format!(
                            "matrix entry {other} at ({item}, {bin}) is not binary"
                        )))
                    }
                }
            }
        }
        Ok(sol)
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn get(&self, item: usize, bin: usize) -> bool {
        self.cells[item * self.num_bins + bin]
    }

    pub fn set(&mut self, item: usize, bin: usize, value: bool) {
        self.cells[item * self.num_bins + bin] = value;
    }

    /// Per-item bin index, or `None` if some item sits in more than one bin.
    pub fn assignment(&self) -> Option<Vec<Option<usize>>> {
        (0..self.num_items)
            .map(|item| {
                let mut bins = (0..self.num_bins).filter(|&b| self.get(item, b));
                let first = bins.next();
                match bins.next() {
                    Some(_) => None,
                    None => Some(first),
                }
            })
            .collect()
    }

    /// Items placed in `bin`, in index order.
    pub fn items_in(&self, bin: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_items).filter(move |&item| self.get(item, bin))
    }

    /// The set cells as `(bin, item)` edges, ordered by item then bin.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_items).flat_map(move |item| {
            (0..self.num_bins)
                .filter(move |&bin| self.get(item, bin))
                .map(move |bin| (bin, item))
        })
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.num_items)
            .map(|item| {
                (0..self.num_bins)
                    .map(|bin| u8::from(self.get(item, bin)))
                    .collect()
            })
            .collect()
    }

    fn check_dims(&self, instance: &ProblemInstance) -> Result<()> {
        if self.num_items != instance.num_items() || self.num_bins != instance.num_bins() {
            return Err(Error::DimensionMismatch(format!(
                "solution is {}x{}, instance has {} items and {} bins",
                self.num_items,
                self.num_bins,
                instance.num_items(),
                instance.num_bins()
            )));
        }
        Ok(())
    }
}

/// Total packed size.
pub fn objective_score(instance: &ProblemInstance, solution: &Solution) -> Result<u64> {
    solution.check_dims(instance)?;
    Ok(solution
        .edges()
        .map(|(_, item)| u64::from(instance.items()[item]))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Capacity { bin: usize, load: u64, capacity: u32 },
    Multiplicity { item: usize, count: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Reports every capacity overflow and every multiply-assigned item.
pub fn validate_solution(
    instance: &ProblemInstance,
    solution: &Solution,
) -> Result<ValidationReport> {
    solution.check_dims(instance)?;
    let mut report = ValidationReport::default();
    for (bin, &capacity) in instance.bins().iter().enumerate() {
        let load: u64 = solution
            .items_in(bin)
            .map(|item| u64::from(instance.items()[item]))
            .sum();
        if load > u64::from(capacity) {
            report.violations.push(Violation::Capacity {
                bin,
                load,
                capacity,
            });
        }
    }
    for item in 0..instance.num_items() {
        let count = (0..instance.num_bins())
            .filter(|&bin| solution.get(item, bin))
            .count();
        if count > 1 {
            report
                .violations
                .push(Violation::Multiplicity { item, count });
        }
    }
    Ok(report)
}

/// One bin of a canonical key: capacity plus sorted contents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BinContent {
    pub capacity: u32,
    pub items: Vec<u32>,
}

/// Deduplication key: the multiset over bins of (capacity, item-size
/// multiset). Empty bins are included; unassigned items are not.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalKey(pub Vec<BinContent>);

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, bin) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("|")?;
            }
            write!(f, "{}:[", bin.capacity)?;
            for (i, z) in bin.items.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{z}")?;
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

pub fn canonical_form(instance: &ProblemInstance, solution: &Solution) -> Result<CanonicalKey> {
    let report = validate_solution(instance, solution)?;
    if !report.is_ok() {
        return Err(Error::Infeasible(format!("{:?}", report.violations)));
    }
    Ok(canonical_key_unchecked(instance, solution))
}

pub(crate) fn canonical_key_unchecked(
    instance: &ProblemInstance,
    solution: &Solution,
) -> CanonicalKey {
    let mut bins: Vec<BinContent> = instance
        .bins()
        .iter()
        .enumerate()
        .map(|(bin, &capacity)| {
            let mut items: Vec<u32> = solution
                .items_in(bin)
                .map(|item| instance.items()[item])
                .collect();
            items.sort_unstable();
            BinContent { capacity, items }
        })
        .collect();
    bins.sort();
    CanonicalKey(bins)
}

/// True when `order` is a permutation of `0..len`.
pub fn is_permutation(order: &[usize], len: usize) -> bool {
    if order.len() != len {
        return false;
    }
    let mut seen = vec![false; len];
    for &k in order {
        if k >= len || seen[k] {
            return false;
        }
        seen[k] = true;
    }
    true
}

pub fn inverse_permutation(order: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; order.len()];
    for (pos, &k) in order.iter().enumerate() {
        inv[k] = pos;
    }
    inv
}

/// A solution as a viewer sees it. Display column `c` shows logical bin
/// `bin_order[c]`; display row `r` shows logical item `item_order[r]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DisplayedSolution {
    solution: Solution,
    bin_order: Vec<usize>,
    item_order: Vec<usize>,
}

impl DisplayedSolution {
    pub fn new(solution: Solution, bin_order: Vec<usize>, item_order: Vec<usize>) -> Result<Self> {
        if !is_permutation(&bin_order, solution.num_bins()) {
            return Err(Error::InvalidPermutation(format!(
                "bin order {bin_order:?} for {} bins",
                solution.num_bins()
            )));
        }
        if !is_permutation(&item_order, solution.num_items()) {
            return Err(Error::InvalidPermutation(format!(
                "item order {item_order:?} for {} items",
                solution.num_items()
            )));
        }
        Ok(Self {
            solution,
            bin_order,
            item_order,
        })
    }

    pub fn identity(solution: Solution) -> Self {
        let bin_order = (0..solution.num_bins()).collect();
        let item_order = (0..solution.num_items()).collect();
        Self {
            solution,
            bin_order,
            item_order,
        }
    }

    pub fn solution(&self) -> &Solution {
        &self.solution
    }

    pub fn bin_order(&self) -> &[usize] {
        &self.bin_order
    }

    pub fn item_order(&self) -> &[usize] {
        &self.item_order
    }

    pub fn is_identity(&self) -> bool {
        self.bin_order.iter().enumerate().all(|(i, &b)| i == b)
            && self.item_order.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Bin capacities in display order.
    pub fn displayed_capacities(&self, instance: &ProblemInstance) -> Vec<u32> {
        self.bin_order.iter().map(|&b| instance.bins()[b]).collect()
    }

    /// Item sizes in display order.
    pub fn displayed_sizes(&self, instance: &ProblemInstance) -> Vec<u32> {
        self.item_order.iter().map(|&j| instance.items()[j]).collect()
    }
}

/// The visually permuted assignment matrix.
pub fn apply_layout(displayed: &DisplayedSolution) -> Solution {
    let sol = &displayed.solution;
    let mut out = Solution::empty(sol.num_items(), sol.num_bins());
    for (row, &item) in displayed.item_order.iter().enumerate() {
        for (col, &bin) in displayed.bin_order.iter().enumerate() {
            out.set(row, col, sol.get(item, bin));
        }
    }
    out
}

/// Interchange record: instance plus one displayed solution. Assignment is
/// stored per item as a bin index or `null`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub id: String,
    pub bins: Vec<u32>,
    pub items: Vec<u32>,
    pub assignment: Vec<Option<usize>>,
    #[serde(default)]
    pub bin_order: Option<Vec<usize>>,
    #[serde(default)]
    pub item_order: Option<Vec<usize>>,
}

impl SolutionRecord {
    pub fn from_parts(instance: &ProblemInstance, displayed: &DisplayedSolution) -> Result<Self> {
        let assignment = displayed.solution().assignment().ok_or_else(|| {
            Error::Infeasible("an item is assigned to more than one bin".into())
        })?;
        Ok(Self {
            id: instance.id().to_owned(),
            bins: instance.bins().to_vec(),
            items: instance.items().to_vec(),
            assignment,
            bin_order: Some(displayed.bin_order().to_vec()),
            item_order: Some(displayed.item_order().to_vec()),
        })
    }

    pub fn into_parts(self) -> Result<(ProblemInstance, DisplayedSolution)> {
        let instance = ProblemInstance::new(self.id, self.bins, self.items)?;
        if self.assignment.len() != instance.num_items() {
            return Err(Error::DimensionMismatch(format!(
                "assignment has {} entries for {} items",
                self.assignment.len(),
                instance.num_items()
            )));
        }
        let solution = Solution::from_assignment(&self.assignment, instance.num_bins())?;
        let bin_order = self
            .bin_order
            .unwrap_or_else(|| (0..instance.num_bins()).collect());
        let item_order = self
            .item_order
            .unwrap_or_else(|| (0..instance.num_items()).collect());
        let displayed = DisplayedSolution::new(solution, bin_order, item_order)?;
        Ok((instance, displayed))
    }
}

/// Instance-only record (`assignment` absent).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    pub bins: Vec<u32>,
    pub items: Vec<u32>,
}

impl From<&ProblemInstance> for InstanceRecord {
    fn from(p: &ProblemInstance) -> Self {
        Self {
            id: p.id().to_owned(),
            bins: p.bins().to_vec(),
            items: p.items().to_vec(),
        }
    }
}

impl TryFrom<InstanceRecord> for ProblemInstance {
    type Error = Error;

    fn try_from(r: InstanceRecord) -> Result<Self> {
        ProblemInstance::new(r.id, r.bins, r.items)
    }
}
