//! Morse inequality verification and the structured run report.

use std::fmt::Write as _;

use serde::Serialize;

use crate::homology::{BettiVector, CriticalGroupTable, HomologyField};

/// Verdicts and derived quantities for one (m, β) pair.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub morse_numbers: Vec<usize>,
    pub betti_numbers: Vec<usize>,
    /// Per-degree verdicts for the alternating-sum inequalities.
    pub inequalities: Vec<bool>,
    /// Morse equation: the full alternating sums agree.
    pub equation: bool,
    /// Poincaré-polynomial quotient coefficients `γ_q`.
    pub gamma: Vec<i64>,
    /// All `γ_q ≥ 0`.
    pub gamma_nonnegative: bool,
    /// `γ_top = 0`, equivalent to the Morse equation.
    pub gamma_top_zero: bool,
    pub euler: i64,
    pub all_pass: bool,
}

/// Check the Morse inequalities, the Morse equation and the polynomial
/// identity `M(t) - P(t) = (1+t)Q(t)` with nonnegative `Q`.
pub fn verify_inequalities(morse: &[usize], betti: &[usize]) -> InequalityReport {
    assert_eq!(morse.len(), betti.len());
    let n = morse.len();
    let mut inequalities = Vec::with_capacity(n);
    let mut gamma = Vec::with_capacity(n);
    for q in 0..n {
        // alternating partial sums Σ_{j≤q} (-1)^{q-j} (m_j - β_j)
        let mut acc = 0i64;
        for j in 0..=q {
            let term = morse[j] as i64 - betti[j] as i64;
            acc = if (q - j) % 2 == 0 { acc + term } else { acc - term };
        }
        inequalities.push(acc >= 0);
        gamma.push(acc);
    }
    let alt = |v: &[usize]| -> i64 {
        v.iter()
            .enumerate()
            .map(|(q, &x)| if q % 2 == 0 { x as i64 } else { -(x as i64) })
            .sum()
    };
    let euler = alt(betti);
    let equation = alt(morse) == euler;
    let gamma_nonnegative = gamma.iter().all(|&g| g >= 0);
    let gamma_top_zero = gamma.last().map_or(true, |&g| g == 0);
    let all_pass = inequalities.iter().all(|&b| b) && equation && gamma_nonnegative;
    InequalityReport {
        morse_numbers: morse.to_vec(),
        betti_numbers: betti.to_vec(),
        inequalities,
        equation,
        gamma,
        gamma_nonnegative,
        gamma_top_zero,
        euler,
        all_pass,
    }
}

/// Structured result of a full run: critical groups, Morse data and verdicts
/// for both the plain and the quotient theory.
#[derive(Debug, Clone, Serialize)]
pub struct MorseReport {
    pub system: String,
    pub depth: Vec<usize>,
    pub field: HomologyField,
    pub component_count: usize,
    pub component_sizes: Vec<usize>,
    pub critical_groups: Vec<Vec<usize>>,
    pub quotient_critical_groups: Vec<Vec<usize>>,
    pub plain: InequalityReport,
    /// Quotient theory: every Morse set collapsed to a point. The pair used
    /// for the quotient groups is a derived identity, not a quoted formula;
    /// it is pinned by the worked example of the planar circle system.
    pub quotient: InequalityReport,
    pub notes: Vec<String>,
}

impl MorseReport {
    pub fn from_table(
        system: &str,
        depth: &[usize],
        component_sizes: Vec<usize>,
        table: &CriticalGroupTable,
        basin: &BettiVector,
        quotient_basin: &BettiVector,
    ) -> Self {
        let m = crate::homology::morse_numbers(&table.groups);
        let mq = crate::homology::morse_numbers(&table.quotient);
        let plain = verify_inequalities(&m, &basin.ranks);
        let quotient = verify_inequalities(&mq, &quotient_basin.ranks);
        MorseReport {
            system: system.to_string(),
            depth: depth.to_vec(),
            field: table.field,
            component_count: table.groups.len(),
            component_sizes,
            critical_groups: table.groups.iter().map(|g| g.ranks.clone()).collect(),
            quotient_critical_groups: table.quotient.iter().map(|g| g.ranks.clone()).collect(),
            plain,
            quotient,
            notes: vec!["quotient critical groups use the derived collapsed-pair identity".to_string()],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn all_pass(&self) -> bool {
        self.plain.all_pass && self.quotient.all_pass
    }

    /// Human-readable table for standard output.
    pub fn human_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "system: {}  depth: {:?}  field: {}", self.system, self.depth, self.field).unwrap();
        writeln!(out, "Morse sets: {}", self.component_count).unwrap();
        for (k, size) in self.component_sizes.iter().enumerate() {
            writeln!(
                out,
                "  M{}  {:>6} boxes   C_* = {:?}   C~_* = {:?}",
                k + 1,
                size,
                self.critical_groups[k],
                self.quotient_critical_groups[k]
            )
            .unwrap();
        }
        let fmt_line = |label: &str, rep: &InequalityReport| {
            format!(
                "{label}: m = {:?}  beta = {:?}  gamma = {:?}  chi = {}  ineq {}  eq {}",
                rep.morse_numbers,
                rep.betti_numbers,
                rep.gamma,
                rep.euler,
                if rep.inequalities.iter().all(|&b| b) && rep.gamma_nonnegative { "PASS" } else { "FAIL" },
                if rep.equation { "PASS" } else { "FAIL" },
            )
        };
        writeln!(out, "{}", fmt_line("plain   ", &self.plain)).unwrap();
        writeln!(out, "{}", fmt_line("quotient", &self.quotient)).unwrap();
        out
    }
}
