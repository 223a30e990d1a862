//! Exit-wave patterns of a three-agent proportional team over a grid of
//! cost multipliers `(β₂, β₃)`.

use rayon::prelude::*;

use crate::cost::{CostSpec, ScopeBounds};
use crate::equilibrium::equilibrium_exit_schedule;
use crate::planner::greedy_wellordered_sequence;
use crate::report::{fmt_sig, Table};
use crate::scenario::ScanSection;

pub const INVALID: &str = "invalid";

#[derive(Debug, Clone, PartialEq)]
pub struct ScanCell {
    pub beta2: f64,
    pub beta3: f64,
    pub eq_label: String,
    pub sp_label: String,
}

fn label_or_error<E: std::fmt::Display>(r: Result<String, E>) -> String {
    r.unwrap_or_else(|e| format!("error: {e}"))
}

/// Labels for one cell. Cells outside `β₃ > β₂ > β₁` are marked invalid.
pub fn scan_cell(base: &CostSpec, beta1: f64, beta2: f64, beta3: f64, bounds: &ScopeBounds) -> ScanCell {
    if !(beta2 > beta1 && beta3 > beta2) {
        return ScanCell {
            beta2,
            beta3,
            eq_label: INVALID.into(),
            sp_label: INVALID.into(),
        };
    }
    let costs = [base.with_beta(beta1), base.with_beta(beta2), base.with_beta(beta3)];
    let eq_label = label_or_error(equilibrium_exit_schedule(&costs, bounds).map(|s| s.label()));
    let sp_label = label_or_error(greedy_wellordered_sequence(&costs, bounds).map(|(c, _)| c.label()));
    ScanCell {
        beta2,
        beta3,
        eq_label,
        sp_label,
    }
}

/// Every cell, `β₂` outer and `β₃` inner, in grid order regardless of the
/// number of worker threads.
pub fn scan_grid(base: &CostSpec, beta1: f64, grid: &ScanSection, bounds: &ScopeBounds) -> Vec<ScanCell> {
    let b2 = ScanSection::axis(grid.beta2_range, grid.steps);
    let b3 = ScanSection::axis(grid.beta3_range, grid.steps);
    let points: Vec<(f64, f64)> = b2.iter().flat_map(|&x| b3.iter().map(move |&y| (x, y))).collect();
    points
        .par_iter()
        .map(|&(x, y)| scan_cell(base, beta1, x, y, bounds))
        .collect()
}

pub fn scan_table(cells: &[ScanCell]) -> Table {
    let mut t = Table::new(["beta2", "beta3", "eq_label", "sp_label"]);
    for c in cells {
        t.push(vec![
            fmt_sig(c.beta2),
            fmt_sig(c.beta3),
            c.eq_label.clone(),
            c.sp_label.clone(),
        ]);
    }
    t
}

fn colour(label: &str) -> &'static str {
    match label {
        "{1,2,3}" => "#4e79a7",
        "{1}{2,3}" => "#f28e2b",
        "{1,2}{3}" => "#59a14f",
        "{1}{2}{3}" => "#e15759",
        INVALID => "#ffffff",
        _ => "#bab0ac",
    }
}

/// SVG rendering of the equilibrium labels, `β₂` on the horizontal axis.
pub fn scan_svg(cells: &[ScanCell], grid: &ScanSection) -> String {
    let px = 4.0;
    let n = grid.steps;
    let size = n as f64 * px;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
        w = size + 160.0,
        h = size
    );
    for (k, c) in cells.iter().enumerate() {
        let (i, j) = (k / n, k % n);
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{px}\" height=\"{px}\" fill=\"{}\"/>\n",
            i as f64 * px,
            size - (j + 1) as f64 * px,
            colour(&c.eq_label)
        ));
    }
    for (row, label) in ["{1,2,3}", "{1}{2,3}", "{1,2}{3}", "{1}{2}{3}"].iter().enumerate() {
        let y = 20.0 + 20.0 * row as f64;
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/><text x=\"{}\" y=\"{}\" font-size=\"12\">{label}</text>\n",
            size + 10.0,
            y - 10.0,
            colour(label),
            size + 28.0,
            y
        ));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds() -> ScopeBounds {
        ScopeBounds { lo: 0.1, hi: 10.0 }
    }

    fn cell(b2: f64, b3: f64) -> ScanCell {
        scan_cell(&CostSpec::exponential(1.0, 1.0), 1.0, b2, b3, &bounds())
    }

    #[test]
    fn reference_cells() {
        let c = cell(1.2, 2.0);
        assert_eq!((c.eq_label.as_str(), c.sp_label.as_str()), ("{1,2,3}", "{1,2,3}"));
        assert_eq!(cell(1.2, 8.0).eq_label, "{1,2}{3}");
        assert_eq!(cell(1.0 + 1e-3, 1.0 + 2e-3).eq_label, "{1,2,3}");
        assert_eq!(cell(1.5, 3.0).eq_label, "{1}{2,3}");
        assert_eq!(cell(2.0, 12.0).eq_label, "{1}{2}{3}");
        assert_eq!(cell(2.0, 1.5).eq_label, INVALID);
    }

    #[test]
    fn grid_order_is_fixed() {
        let g = ScanSection {
            beta2_range: [1.0, 3.0],
            beta3_range: [1.0, 9.0],
            steps: 4,
        };
        let cells = scan_grid(&CostSpec::exponential(1.0, 1.0), 1.0, &g, &bounds());
        assert_eq!(cells.len(), 16);
        assert_eq!((cells[1].beta2, cells[1].beta3), (1.25, 4.0));
        let csv = scan_table(&cells).to_csv();
        assert!(csv.starts_with("beta2,beta3,eq_label,sp_label\n"));
        assert!(scan_svg(&cells, &g).contains("<rect"));
    }
}
