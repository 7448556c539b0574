//! The 81-rule base over (cpu, mem, disk, bw) linguistic terms.

use crate::domain::LoadLevel;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

/// Linguistic value of one input, ordered low < medium < high.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinguisticTerm {
    Low,
    Medium,
    High,
}

impl LinguisticTerm {
    pub const ALL: [LinguisticTerm; 3] = [
        LinguisticTerm::Low,
        LinguisticTerm::Medium,
        LinguisticTerm::High,
    ];

    pub fn index(self) -> usize {
        match self {
            LinguisticTerm::Low => 0,
            LinguisticTerm::Medium => 1,
            LinguisticTerm::High => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LinguisticTerm::Low => "low",
            LinguisticTerm::Medium => "medium",
            LinguisticTerm::High => "high",
        }
    }
}

/// One if-then rule: a term per input and the resulting load level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FuzzyRule {
    pub antecedent: [LinguisticTerm; 4],
    pub consequent: LoadLevel,
}

/// Total rule base: every element of {low, medium, high}^4 exactly once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleBase {
    rules: Vec<FuzzyRule>,
}

/// Consequent as a function of how many inputs sit at high and medium:
/// under-load needs no high terms and at most two mediums; three or more
/// mediums or exactly one high is normal; two highs are highly-loaded;
/// three or more highs are over-loaded.
fn consequent_for_counts(high: usize, medium: usize) -> LoadLevel {
    if high >= 3 {
        LoadLevel::OverLoad
    } else if high == 2 {
        LoadLevel::HighlyLoad
    } else if high == 1 || medium >= 3 {
        LoadLevel::NormalLoad
    } else {
        LoadLevel::UnderLoad
    }
}

/// Builds the complete 81-rule base in lexicographic antecedent order.
pub fn build_rule_base() -> RuleBase {
    let mut rules = Vec::with_capacity(81);
    for cpu in LinguisticTerm::ALL {
        for mem in LinguisticTerm::ALL {
            for disk in LinguisticTerm::ALL {
                for bw in LinguisticTerm::ALL {
                    let antecedent = [cpu, mem, disk, bw];
                    let high = antecedent
                        .iter()
                        .filter(|&&t| t == LinguisticTerm::High)
                        .count();
                    let medium = antecedent
                        .iter()
                        .filter(|&&t| t == LinguisticTerm::Medium)
                        .count();
                    rules.push(FuzzyRule {
                        antecedent,
                        consequent: consequent_for_counts(high, medium),
                    });
                }
            }
        }
    }
    RuleBase { rules }
}

impl RuleBase {
    pub fn rules(&self) -> &[FuzzyRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// The consequent of a given antecedent combination.
    pub fn consequent_for(&self, antecedent: [LinguisticTerm; 4]) -> LoadLevel {
        let idx = antecedent
            .iter()
            .fold(0usize, |acc, t| acc * 3 + t.index());
        self.rules[idx].consequent
    }

    /// Human-readable 81-row table for audit: rule number, one term per
    /// input, consequent.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>4}  {:<6} {:<6} {:<6} {:<6} -> level", "rule", "cpu", "mem", "disk", "bw");
        for (k, rule) in self.rules.iter().enumerate() {
            let [cpu, mem, disk, bw] = rule.antecedent;
            let _ = writeln!(
                out,
                "{:>4}  {:<6} {:<6} {:<6} {:<6} -> {}",
                k + 1,
                cpu.name(),
                mem.name(),
                disk.name(),
                bw.name(),
                rule.consequent
            );
        }
        out
    }
}
