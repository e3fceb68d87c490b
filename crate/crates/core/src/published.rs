//! Printed limiting constants for the 19 reference values of α, embedded
//! from `data/table1_published.csv`, and a cell-by-cell comparison against
//! [`solve_b_alpha`](crate::limits::solve_b_alpha).

use serde::{Deserialize, Serialize};

use crate::limits::LimitConstants;

const RAW: &str = include_str!("../data/table1_published.csv");

/// Column names shared by the fixture and the CLI report.
pub const COLUMNS: [&str; 9] = [
    "alpha",
    "b_alpha",
    "lim_nF_V1",
    "lim_nF_V2",
    "lim_nF_Vp",
    "r34",
    "r45",
    "r35",
    "improvement",
];

/// One printed row. Field order follows [`COLUMNS`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub alpha: f64,
    pub b_alpha: f64,
    pub lim_nf_v1: f64,
    pub lim_nf_v2: f64,
    pub lim_nf_vp: f64,
    pub r34: f64,
    pub r45: f64,
    pub r35: f64,
    pub improvement: f64,
}

impl TableRow {
    pub fn from_constants(c: &LimitConstants) -> Self {
        TableRow {
            alpha: c.alpha.get(),
            b_alpha: c.b_alpha,
            lim_nf_v1: c.one_choice_limit,
            lim_nf_v2: c.two_choice_limit,
            lim_nf_vp: c.prophet_limit,
            r34: c.ratio_31_42,
            r45: c.ratio_42_5,
            r35: c.ratio_3_5,
            improvement: c.rel_improvement,
        }
    }

    pub fn cells(&self) -> [f64; 9] {
        [
            self.alpha,
            self.b_alpha,
            self.lim_nf_v1,
            self.lim_nf_v2,
            self.lim_nf_vp,
            self.r34,
            self.r45,
            self.r35,
            self.improvement,
        ]
    }

    fn from_cells(c: [f64; 9]) -> Self {
        TableRow {
            alpha: c[0],
            b_alpha: c[1],
            lim_nf_v1: c[2],
            lim_nf_v2: c[3],
            lim_nf_vp: c[4],
            r34: c[5],
            r45: c[6],
            r35: c[7],
            improvement: c[8],
        }
    }
}

/// The printed rows in ascending α.
pub fn rows() -> Vec<TableRow> {
    let mut lines = RAW.lines();
    let header = lines.next().expect("fixture has a header");
    assert_eq!(header, COLUMNS.join(","), "fixture header drifted");
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut cells = [0.0; 9];
            let mut it = l.split(',');
            for c in cells.iter_mut() {
                *c = it
                    .next()
                    .and_then(|v| v.trim().parse().ok())
                    .expect("fixture cell parses as f64");
            }
            TableRow::from_cells(cells)
        })
        .collect()
}

pub fn row_for(alpha: f64) -> Option<TableRow> {
    rows().into_iter().find(|r| (r.alpha - alpha).abs() < 1e-12)
}

/// Absolute deviation per cell, columns 2 through 9.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowDiff {
    pub alpha: f64,
    pub deviations: [f64; 8],
}

impl RowDiff {
    pub fn max(&self) -> f64 {
        self.deviations.iter().copied().fold(0.0, f64::max)
    }

    /// Name of the column with the largest deviation.
    pub fn worst_column(&self) -> &'static str {
        let (i, _) = self
            .deviations
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        COLUMNS[i + 1]
    }
}

pub fn diff(computed: &TableRow, printed: &TableRow) -> RowDiff {
    let (a, b) = (computed.cells(), printed.cells());
    let mut deviations = [0.0; 8];
    for (k, d) in deviations.iter_mut().enumerate() {
        *d = (a[k + 1] - b[k + 1]).abs();
    }
    RowDiff {
        alpha: printed.alpha,
        deviations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::TABLE_ALPHAS;

    #[test]
    fn fixture_covers_the_reference_alphas() {
        let rows = rows();
        assert_eq!(rows.len(), 19);
        for (r, a) in rows.iter().zip(TABLE_ALPHAS) {
            assert_eq!(r.alpha, a);
        }
        let one = row_for(1.0).unwrap();
        assert_eq!(one.lim_nf_v2, 1.16562);
        assert_eq!(one.improvement, 0.83438);
        assert!(row_for(1.5).is_none());
    }

    #[test]
    fn diff_reports_worst_column() {
        let a = row_for(2.0).unwrap();
        let mut b = a;
        b.r45 += 0.01;
        let d = diff(&b, &a);
        assert!((d.max() - 0.01).abs() < 1e-12);
        assert_eq!(d.worst_column(), "r45");
    }
}
