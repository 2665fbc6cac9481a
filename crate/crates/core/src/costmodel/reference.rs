//! The reference cost table: 2021 price points, dataset statistics and
//! measured throughput, with the published cell values each derived figure is
//! checked against.

use serde::Serialize;

use super::{
    build_report, format_usd, CostError, CostInputs, CostReport, DatasetStats, PricingModel, Scenario,
    ThroughputProfile,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CostField {
    OneTimeCommercial,
    OneTimeOpenSource,
    RecurringCommercial,
    RecurringOpenSource,
    AddedLatency,
}

impl CostField {
    pub const ALL: [CostField; 5] = [
        CostField::OneTimeCommercial,
        CostField::OneTimeOpenSource,
        CostField::RecurringCommercial,
        CostField::RecurringOpenSource,
        CostField::AddedLatency,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CostField::OneTimeCommercial => "one-time commercial",
            CostField::OneTimeOpenSource => "one-time open-source",
            CostField::RecurringCommercial => "recurring commercial",
            CostField::RecurringOpenSource => "recurring open-source",
            CostField::AddedLatency => "added latency",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tolerance {
    /// Fraction of the expected value.
    Relative(f64),
    Absolute(f64),
}

impl Tolerance {
    pub fn admits(self, actual: f64, expected: f64) -> bool {
        // slack for binary representation of decimal inputs
        let gap = (actual - expected).abs() - 1e-9;
        match self {
            Tolerance::Relative(r) => gap <= r * expected.abs(),
            Tolerance::Absolute(a) => gap <= a,
        }
    }
}

/// A derived value that is known to differ from the published one and is
/// reproduced as derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KnownGap {
    pub derived: f64,
    pub tolerance: Tolerance,
    pub note: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PublishedCell {
    pub field: CostField,
    pub value: f64,
    pub tolerance: Tolerance,
    pub known_gap: Option<KnownGap>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub task: &'static str,
    pub scenario: Scenario,
    pub inputs: CostInputs,
    /// Cells with a published figure; cells left out are "-".
    pub published: Vec<PublishedCell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellCheck {
    pub field: CostField,
    pub derived: f64,
    pub published: f64,
    /// `(derived - published) / published`.
    pub relative_gap: f64,
    pub within_tolerance: bool,
    pub known_gap: Option<KnownGap>,
}

impl CellCheck {
    /// Within tolerance of the published value, or, for a known gap, of the
    /// documented derived value.
    pub fn passes(&self) -> bool {
        match self.known_gap {
            Some(gap) => gap.tolerance.admits(self.derived, gap.derived),
            None => self.within_tolerance,
        }
    }
}

impl ReferenceRow {
    pub fn label(&self) -> String {
        format!("{} {}", self.task, self.scenario)
    }

    pub fn report(&self, pricing: &PricingModel) -> Result<CostReport, CostError> {
        build_report(self.scenario, &self.inputs, pricing)
    }

    /// Every published cell compared with its derived value. Unpublished
    /// cells must derive to exactly zero.
    pub fn check(&self, pricing: &PricingModel) -> Result<(CostReport, Vec<CellCheck>, bool), CostError> {
        let report = self.report(pricing)?;
        let checks: Vec<CellCheck> = self
            .published
            .iter()
            .map(|cell| {
                let derived = report.get(cell.field);
                CellCheck {
                    field: cell.field,
                    derived,
                    published: cell.value,
                    relative_gap: (derived - cell.value) / cell.value,
                    within_tolerance: cell.tolerance.admits(derived, cell.value),
                    known_gap: cell.known_gap,
                }
            })
            .collect();
        let blanks_are_zero = CostField::ALL
            .iter()
            .filter(|f| !self.published.iter().any(|c| c.field == **f))
            .all(|f| report.get(*f) == 0.0);
        Ok((report, checks, blanks_are_zero))
    }
}

const COMMERCIAL_REL: Tolerance = Tolerance::Relative(0.01);
const ONE_TIME_REL: Tolerance = Tolerance::Relative(0.005);
const LAST_DIGIT: Tolerance = Tolerance::Absolute(0.01);
const LATENCY: Tolerance = Tolerance::Absolute(0.005);

fn cell(field: CostField, value: f64, tolerance: Tolerance) -> PublishedCell {
    PublishedCell {
        field,
        value,
        tolerance,
        known_gap: None,
    }
}

fn gap(field: CostField, value: f64, tolerance: Tolerance, derived: f64, derived_tol: f64, note: &'static str) -> PublishedCell {
    PublishedCell {
        known_gap: Some(KnownGap {
            derived,
            tolerance: Tolerance::Absolute(derived_tol),
            note,
        }),
        ..cell(field, value, tolerance)
    }
}

fn stats(total: u64, avg: f64) -> Option<DatasetStats> {
    Some(DatasetStats::from_total_and_average(total, avg))
}

fn batch32(seconds: f64) -> Option<ThroughputProfile> {
    Some(ThroughputProfile::new(seconds, 32).expect("positive latency"))
}

fn zero_shot(task: &'static str) -> ReferenceRow {
    ReferenceRow {
        task,
        scenario: Scenario::ZeroShot,
        inputs: CostInputs::default(),
        published: Vec::new(),
    }
}

/// Rows of the reference table, in table order.
pub fn reference_rows() -> Vec<ReferenceRow> {
    use CostField::*;

    let squad_train = stats(17_688_764, 936.11);
    let faquad_test = stats(38_250, 1006.57);
    let mnli_train = stats(56_521_137, 144.49);
    let assin2_test = stats(219_834, 89.80);
    let collection = stats(3_047_540_622, 344.67);
    let dev_queries = stats(3_615_835, 35.77);

    let collection_cells = [
        cell(OneTimeCommercial, 50_793.0, Tolerance::Relative(0.001)),
        cell(OneTimeOpenSource, 141.27, ONE_TIME_REL),
    ];

    vec![
        zero_shot("QA"),
        ReferenceRow {
            task: "QA",
            scenario: Scenario::TranslateTrain,
            inputs: CostInputs {
                corpus: squad_train,
                wall_hours: Some(1.0),
                ..Default::default()
            },
            published: vec![
                gap(
                    OneTimeCommercial,
                    299.17,
                    ONE_TIME_REL,
                    294.81,
                    0.005,
                    "17,688,764 training characters at 16.67 USD/M give 294.81; the published 299.17 is 1.5% higher",
                ),
                cell(OneTimeOpenSource, 2.77, ONE_TIME_REL),
            ],
        },
        ReferenceRow {
            task: "QA",
            scenario: Scenario::TranslateInfer,
            inputs: CostInputs {
                inference: faquad_test,
                throughput: batch32(2.50),
                ..Default::default()
            },
            published: vec![
                cell(RecurringCommercial, 16.78, COMMERCIAL_REL),
                cell(RecurringOpenSource, 0.06, LAST_DIGIT),
                cell(AddedLatency, 2.50, LATENCY),
            ],
        },
        zero_shot("NLI"),
        ReferenceRow {
            task: "NLI",
            scenario: Scenario::TranslateTrain,
            inputs: CostInputs {
                corpus: mnli_train,
                wall_hours: Some(2.25),
                ..Default::default()
            },
            published: vec![
                cell(OneTimeCommercial, 941.67, ONE_TIME_REL),
                cell(OneTimeOpenSource, 6.24, ONE_TIME_REL),
            ],
        },
        ReferenceRow {
            task: "NLI",
            scenario: Scenario::TranslateInfer,
            inputs: CostInputs {
                inference: assin2_test,
                throughput: batch32(0.78),
                ..Default::default()
            },
            published: vec![
                cell(RecurringCommercial, 1.50, COMMERCIAL_REL),
                cell(RecurringOpenSource, 0.02, LAST_DIGIT),
                cell(AddedLatency, 0.78, LATENCY),
            ],
        },
        zero_shot("Ranking"),
        ReferenceRow {
            task: "Ranking",
            scenario: Scenario::TranslateTrain,
            inputs: CostInputs {
                corpus: collection,
                wall_hours: Some(51.0),
                ..Default::default()
            },
            published: collection_cells.to_vec(),
        },
        ReferenceRow {
            task: "Ranking",
            scenario: Scenario::TranslateInferS1,
            inputs: CostInputs {
                passages: collection,
                inference: dev_queries,
                wall_hours: Some(51.0),
                throughput: batch32(0.72),
                ..Default::default()
            },
            published: vec![
                collection_cells[0],
                collection_cells[1],
                gap(
                    RecurringCommercial,
                    0.70,
                    COMMERCIAL_REL,
                    0.596,
                    0.0005,
                    "35.77 characters per query give 0.596 USD/1k; the published 0.70 is 17% higher",
                ),
                gap(
                    RecurringOpenSource,
                    0.01,
                    LAST_DIGIT,
                    0.017,
                    0.0005,
                    "0.72 s per batch of 32 gives 0.017 USD/1k, which rounds to 0.02, not the published 0.01",
                ),
                cell(AddedLatency, 0.72, LATENCY),
            ],
        },
        ReferenceRow {
            task: "Ranking",
            scenario: Scenario::TranslateInferS2,
            inputs: CostInputs {
                passages: collection,
                inference: dev_queries,
                throughput: batch32(680.64),
                ..Default::default()
            },
            published: vec![
                cell(RecurringCommercial, 5_733.0, COMMERCIAL_REL),
                cell(RecurringOpenSource, 16.36, LAST_DIGIT),
                cell(AddedLatency, 680.64, LATENCY),
            ],
        },
    ]
}

fn show(field: CostField, x: f64) -> String {
    // sub-cent recurring figures need a third decimal to be told apart
    if matches!(field, CostField::RecurringCommercial | CostField::RecurringOpenSource) && x.abs() < 1.0 {
        format!("{x:.4}")
    } else {
        format_usd(x)
    }
}

/// The reference table with derived values, then one line per published
/// cell saying whether it was reproduced. Returns the text and whether every
/// check passed.
pub fn render_reference(pricing: &PricingModel) -> Result<(String, bool), CostError> {
    let rows = reference_rows();
    let mut reports = Vec::with_capacity(rows.len());
    let mut lines = Vec::new();
    let mut all_pass = true;
    for row in &rows {
        let (report, checks, blanks_are_zero) = row.check(pricing)?;
        all_pass &= blanks_are_zero;
        if !blanks_are_zero {
            lines.push(format!("FAIL  {}: unpublished cells are not zero", row.label()));
        }
        for c in checks {
            all_pass &= c.passes();
            let status = if c.passes() { "ok  " } else { "FAIL" };
            let what = format!(
                "{status}  {}, {}: derived {} vs published {} ({:+.2}%)",
                row.label(),
                c.field.label(),
                show(c.field, c.derived),
                show(c.field, c.published),
                100.0 * c.relative_gap
            );
            match c.known_gap {
                Some(gap) => lines.push(format!("{what}  discrepancy: {}", gap.note)),
                None => lines.push(what),
            }
        }
        reports.push((row.label(), report));
    }
    let mut table = super::render_table(&reports);
    table.push('\n');
    for line in lines {
        table.push_str(&line);
        table.push('\n');
    }
    Ok((table, all_pass))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::round2;

    #[test]
    fn every_reference_cell_reproduces() {
        let pricing = PricingModel::paper_2021();
        for row in reference_rows() {
            let (_, checks, blanks) = row.check(&pricing).unwrap();
            assert!(blanks, "{}", row.label());
            for c in checks {
                assert!(c.passes(), "{} {:?}: {} vs {}", row.label(), c.field, c.derived, c.published);
                // known gaps do not round to the published value
                if c.known_gap.is_some() {
                    assert_ne!(round2(c.derived), c.published, "{} {:?}", row.label(), c.field);
                } else {
                    assert!(c.within_tolerance);
                }
            }
        }
    }

    #[test]
    fn rendered_table_flags_discrepancies() {
        let (text, ok) = render_reference(&PricingModel::paper_2021()).unwrap();
        assert!(ok);
        assert_eq!(text.matches("discrepancy:").count(), 3);
        assert!(text.contains("50,792.34"));
        assert!(text.contains("294.81"));
        assert!(!text.contains("FAIL"));
    }

    #[test]
    fn tolerance() {
        assert!(Tolerance::Relative(0.001).admits(50_792.34, 50_793.0));
        assert!(!Tolerance::Relative(0.00001).admits(50_792.34, 50_793.0));
        assert!(Tolerance::Absolute(0.01).admits(0.0601, 0.06));
        assert!(!Tolerance::Absolute(0.01).admits(0.0173, 0.0));
    }
}
