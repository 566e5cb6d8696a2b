//! Mortgage-application encoding: categorical recodes driven by a JSON rules
//! file, plus a deterministic synthetic fixture shaped like a 2022 public
//! loan-application register extract.
//!
//! The encoder turns raw string records into a [`Dataset`]: one binary
//! recode supplies the protected attribute, one the target, further recodes
//! produce binary features, and numeric rules parse (optionally
//! log-transforming) continuous features. Rows matching an explicit case get
//! that case's value; rows matching no case are either dropped and counted
//! (`drop_unmatched: true`) or reported as an [`Error::UnmappedCategory`].
//!
//! The bundled fixture reproduces the row counts and approval base rates of
//! the Wisconsin 2022 extract exactly (83,808 kept rows; 56,065 approvals
//! overall; 53,947 of 79,450 White non-Hispanic; 2,118 of 4,358 Black) and
//! adds decoy rows that exercise every drop path. It is synthetic: useful
//! for end-to-end pipeline checks, not for substantive conclusions.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::adjacency::DagConfig;
use crate::dataset::{Column, ColumnKind, Dataset};
use crate::error::{io_err, Error, Result};
use crate::seeding::{mix_seed, STREAM_FIXTURE};
use crate::stats::sigmoid;

/// One recode branch: matches when every listed column holds one of the
/// allowed raw values. An empty `when` matches every row (a catch-all).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecodeCase {
    pub when: BTreeMap<String, Vec<String>>,
    pub value: f64,
}

/// Derives one binary output column from raw categorical columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryRecode {
    /// Output column name.
    pub name: String,
    /// Tried in order; the first matching case wins.
    pub cases: Vec<RecodeCase>,
    /// Drop (and count) unmatched rows instead of raising `UnmappedCategory`.
    pub drop_unmatched: bool,
}

/// Derives one numeric output column from a raw numeric column. Rows whose
/// value does not parse (or is not positive under a log transform) are
/// dropped and counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericRecode {
    /// Output column name.
    pub name: String,
    /// Raw source column.
    pub column: String,
    pub log_transform: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmdaEncodingRules {
    /// Produces the protected-attribute column.
    pub pa: BinaryRecode,
    /// Produces the target column.
    pub target: BinaryRecode,
    pub binary_features: Vec<BinaryRecode>,
    pub numeric_features: Vec<NumericRecode>,
}

impl HmdaEncodingRules {
    pub fn validate(&self) -> Result<()> {
        let bad = |detail: String| Err(Error::Config { field: "rules".into(), detail });
        let mut names = BTreeSet::new();
        let binaries =
            [&self.pa, &self.target].into_iter().chain(self.binary_features.iter());
        for recode in binaries {
            if recode.name.is_empty() {
                return bad("recode output names must be non-empty".into());
            }
            if !names.insert(recode.name.clone()) {
                return bad(format!("duplicate output column {:?}", recode.name));
            }
            if recode.cases.is_empty() {
                return bad(format!("recode {:?} has no cases", recode.name));
            }
            for case in &recode.cases {
                if case.value != 0.0 && case.value != 1.0 {
                    return bad(format!(
                        "recode {:?} maps to {}, binary outputs must be 0 or 1",
                        recode.name, case.value
                    ));
                }
            }
        }
        for numeric in &self.numeric_features {
            if numeric.name.is_empty() || numeric.column.is_empty() {
                return bad("numeric recode names and source columns must be non-empty".into());
            }
            if !names.insert(numeric.name.clone()) {
                return bad(format!("duplicate output column {:?}", numeric.name));
            }
        }
        Ok(())
    }

    /// Every raw column any rule reads.
    fn source_columns(&self) -> BTreeSet<&str> {
        let mut cols = BTreeSet::new();
        let binaries =
            [&self.pa, &self.target].into_iter().chain(self.binary_features.iter());
        for recode in binaries {
            for case in &recode.cases {
                cols.extend(case.when.keys().map(String::as_str));
            }
        }
        cols.extend(self.numeric_features.iter().map(|n| n.column.as_str()));
        cols
    }
}

/// Rules for a 2022 public loan-application register extract: approval from
/// the action-taken code, Black vs White non-Hispanic as the protected
/// attribute, log loan amount, home-purchase indicator, a high
/// debt-to-income indicator cut at the 43% qualified-mortgage line, and
/// age-over-62 / female confounders.
pub fn default_hmda_rules() -> HmdaEncodingRules {
    let case = |when: &[(&str, &[&str])], value: f64| RecodeCase {
        when: when
            .iter()
            .map(|(c, vs)| (c.to_string(), vs.iter().map(|v| v.to_string()).collect()))
            .collect(),
        value,
    };
    HmdaEncodingRules {
        pa: BinaryRecode {
            name: "black".into(),
            cases: vec![
                case(&[("derived_race", &["Black or African American"])], 1.0),
                case(
                    &[
                        ("derived_race", &["White"]),
                        ("derived_ethnicity", &["Not Hispanic or Latino"]),
                    ],
                    0.0,
                ),
            ],
            drop_unmatched: true,
        },
        target: BinaryRecode {
            name: "approved".into(),
            cases: vec![
                case(&[("action_taken", &["1", "2"])], 1.0),
                case(&[("action_taken", &["3"])], 0.0),
            ],
            drop_unmatched: true,
        },
        binary_features: vec![
            BinaryRecode {
                name: "home_purchase".into(),
                cases: vec![
                    case(&[("loan_purpose", &["1"])], 1.0),
                    case(&[("loan_purpose", &["2", "31", "32", "4", "5"])], 0.0),
                ],
                drop_unmatched: true,
            },
            BinaryRecode {
                name: "dti_high".into(),
                cases: vec![
                    case(
                        &[(
                            "debt_to_income_ratio",
                            &["44", "45", "46", "47", "48", "49", "50%-60%", ">60%"],
                        )],
                        1.0,
                    ),
                    case(
                        &[(
                            "debt_to_income_ratio",
                            &[
                                "<20%", "20%-<30%", "30%-<36%", "36", "37", "38", "39", "40",
                                "41", "42", "43",
                            ],
                        )],
                        0.0,
                    ),
                ],
                drop_unmatched: true,
            },
            BinaryRecode {
                name: "age_above_62".into(),
                cases: vec![
                    case(&[("applicant_age_above_62", &["Yes"])], 1.0),
                    case(&[("applicant_age_above_62", &["No"])], 0.0),
                ],
                drop_unmatched: true,
            },
            BinaryRecode {
                name: "female".into(),
                cases: vec![
                    case(&[("derived_sex", &["Female"])], 1.0),
                    case(&[("derived_sex", &["Male"])], 0.0),
                ],
                drop_unmatched: true,
            },
        ],
        numeric_features: vec![NumericRecode {
            name: "log_amount".into(),
            column: "loan_amount".into(),
            log_transform: true,
        }],
    }
}

/// Causal graph over the encoded columns: race may influence the loan terms
/// and the decision; age and sex are root confounders feeding both.
pub fn default_hmda_dag() -> DagConfig {
    let names = |cols: &[&str]| cols.iter().map(|c| c.to_string()).collect::<Vec<_>>();
    let confounded = ["black", "age_above_62", "female"];
    DagConfig {
        pa: "black".into(),
        parents: [
            ("black", vec![]),
            ("age_above_62", vec![]),
            ("female", vec![]),
            ("log_amount", names(&confounded)),
            ("home_purchase", names(&confounded)),
            ("dti_high", names(&confounded)),
            (
                "approved",
                names(&[
                    "black",
                    "log_amount",
                    "home_purchase",
                    "dti_high",
                    "age_above_62",
                    "female",
                ]),
            ),
        ]
        .map(|(node, parents)| (node.to_string(), parents))
        .into(),
    }
}

/// Where encoded rows went: kept, or dropped at a named rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeReport {
    pub input_rows: usize,
    pub kept_rows: usize,
    /// Drop counts keyed by the output column whose rule dropped the row.
    pub drops: BTreeMap<String, usize>,
}

impl EncodeReport {
    pub fn dropped_rows(&self) -> usize {
        self.drops.values().sum()
    }
}

enum RowOutcome {
    Keep(Vec<f64>),
    Drop(String),
}

/// Encode raw string records into a dataset under `rules`.
///
/// Output column order: protected attribute, numeric features, binary
/// features, target. Encoding is a pure function of the inputs; rows are
/// processed in order and dropped rows are counted per rule in the report.
pub fn hmda_encode(
    headers: &[String],
    rows: &[Vec<String>],
    rules: &HmdaEncodingRules,
) -> Result<(Dataset, EncodeReport)> {
    rules.validate()?;
    let header_pos: BTreeMap<&str, usize> =
        headers.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
    for col in rules.source_columns() {
        if !header_pos.contains_key(col) {
            return Err(Error::SchemaMismatch(format!(
                "input is missing required column {col:?}"
            )));
        }
    }

    let binary_recodes: Vec<&BinaryRecode> = [&rules.pa, &rules.target]
        .into_iter()
        .chain(rules.binary_features.iter())
        .collect();
    let n_out = binary_recodes.len() + rules.numeric_features.len();

    let encode_row = |row: &[String]| -> Result<RowOutcome> {
        let mut out = Vec::with_capacity(n_out);
        for recode in &binary_recodes {
            let matched = recode.cases.iter().find(|case| {
                case.when.iter().all(|(col, allowed)| {
                    let raw = &row[header_pos[col.as_str()]];
                    allowed.contains(raw)
                })
            });
            match matched {
                Some(case) => out.push(case.value),
                None if recode.drop_unmatched => {
                    return Ok(RowOutcome::Drop(recode.name.clone()));
                }
                None => {
                    let read: BTreeSet<&str> = recode
                        .cases
                        .iter()
                        .flat_map(|c| c.when.keys().map(String::as_str))
                        .collect();
                    let raw: Vec<String> = read
                        .iter()
                        .map(|c| format!("{c}={:?}", row[header_pos[c]]))
                        .collect();
                    return Err(Error::UnmappedCategory {
                        column: recode.name.clone(),
                        value: raw.join(", "),
                    });
                }
            }
        }
        for numeric in &rules.numeric_features {
            let raw = &row[header_pos[numeric.column.as_str()]];
            let parsed: Option<f64> = raw.trim().parse().ok().filter(|v: &f64| v.is_finite());
            let value = match parsed {
                Some(v) if numeric.log_transform && v <= 0.0 => None,
                Some(v) if numeric.log_transform => Some(v.ln()),
                Some(v) => Some(v),
                None => None,
            };
            match value {
                Some(v) => out.push(v),
                None => return Ok(RowOutcome::Drop(numeric.name.clone())),
            }
        }
        Ok(RowOutcome::Keep(out))
    };

    let mut kept: Vec<Vec<f64>> = Vec::new();
    let mut drops: BTreeMap<String, usize> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != headers.len() {
            return Err(Error::Parse {
                row: i + 1,
                column: "<record>".into(),
                detail: format!("expected {} fields, got {}", headers.len(), row.len()),
            });
        }
        match encode_row(row)? {
            RowOutcome::Keep(values) => kept.push(values),
            RowOutcome::Drop(rule) => *drops.entry(rule).or_default() += 1,
        }
    }

    // column order: pa, numeric features, binary features, target
    let mut columns: Vec<Column> = Vec::with_capacity(n_out);
    let mut push = |name: &str, kind: ColumnKind, src: usize| {
        columns.push(Column {
            name: name.to_string(),
            kind,
            values: kept.iter().map(|r| r[src]).collect(),
        });
    };
    push(&rules.pa.name, ColumnKind::Binary, 0);
    for (j, numeric) in rules.numeric_features.iter().enumerate() {
        push(&numeric.name, ColumnKind::Numeric, binary_recodes.len() + j);
    }
    for (j, recode) in rules.binary_features.iter().enumerate() {
        push(&recode.name, ColumnKind::Binary, 2 + j);
    }
    push(&rules.target.name, ColumnKind::Binary, 1);

    let report =
        EncodeReport { input_rows: rows.len(), kept_rows: kept.len(), drops };
    let ds = Dataset::new(columns, &rules.pa.name, &rules.target.name)?;
    Ok((ds, report))
}

/// Read a raw CSV file and encode it under `rules`.
pub fn encode_csv_file(
    path: impl AsRef<Path>,
    rules: &HmdaEncodingRules,
) -> Result<(Dataset, EncodeReport)> {
    let mut reader = csv::Reader::from_path(path.as_ref()).map_err(Error::Csv)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    hmda_encode(&headers, &rows, rules)
}

/// Shape of the synthetic fixture; defaults reproduce the published counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureConfig {
    pub seed: u64,
    /// Rows added on top of the kept rows to exercise every drop path.
    pub decoy_rows: usize,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig { seed: 0, decoy_rows: 4000 }
    }
}

pub const FIXTURE_HEADERS: [&str; 8] = [
    "action_taken",
    "derived_race",
    "derived_ethnicity",
    "loan_amount",
    "loan_purpose",
    "debt_to_income_ratio",
    "applicant_age_above_62",
    "derived_sex",
];

struct GroupShape {
    n: usize,
    approved: usize,
    race: &'static str,
    ethnicity: &'static str,
    purchase: f64,
    dti_high: f64,
    age62: f64,
    female: f64,
    amount_meanlog: f64,
    amount_sdlog: f64,
}

const WHITE: GroupShape = GroupShape {
    n: 79_450,
    approved: 53_947,
    race: "White",
    ethnicity: "Not Hispanic or Latino",
    purchase: 0.390,
    dti_high: 0.629,
    age62: 0.25,
    female: 0.34,
    amount_meanlog: 12.3,
    amount_sdlog: 0.55,
};

const BLACK: GroupShape = GroupShape {
    n: 4_358,
    approved: 2_118,
    race: "Black or African American",
    ethnicity: "Not Hispanic or Latino",
    purchase: 0.347,
    dti_high: 0.702,
    age62: 0.18,
    female: 0.45,
    amount_meanlog: 12.1,
    amount_sdlog: 0.55,
};

const DTI_HIGH_BUCKETS: [&str; 8] = ["44", "45", "46", "47", "48", "49", "50%-60%", ">60%"];
const DTI_LOW_BUCKETS: [&str; 8] = ["<20%", "20%-<30%", "30%-<36%", "36", "38", "40", "42", "43"];
const PURPOSE_OTHER: [&str; 4] = ["2", "31", "32", "4"];

fn pick<'a>(options: &[&'a str], rng: &mut ChaCha8Rng) -> &'a str {
    options[rng.random_range(0..options.len())]
}

/// Intercept b with `mean sigmoid(b + offset_i) == rate`, by bisection.
fn calibrate_intercept(offsets: &[f64], rate: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..80 {
        let mid = (lo + hi) / 2.0;
        let mean: f64 =
            offsets.iter().map(|o| sigmoid(mid + o)).sum::<f64>() / offsets.len() as f64;
        if mean < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

fn synth_group(shape: &GroupShape, seed: u64, rows: &mut Vec<Vec<String>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(shape.amount_meanlog, shape.amount_sdlog).unwrap();
    let n = shape.n;

    let purchase: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < shape.purchase).collect();
    let dti: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < shape.dti_high).collect();
    let age62: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < shape.age62).collect();
    let female: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < shape.female).collect();
    let amount: Vec<f64> = (0..n)
        .map(|_| {
            let raw = normal.inverse_cdf(rng.random::<f64>()).exp();
            (raw / 5000.0).round().max(1.0) * 5000.0 // ledger amounts come in 5k steps
        })
        .collect();

    let offsets: Vec<f64> = (0..n)
        .map(|i| {
            let z = (amount[i].ln() - shape.amount_meanlog) / shape.amount_sdlog;
            -1.1 * f64::from(dti[i]) - 0.4 * f64::from(purchase[i]) + 0.5 * z
                + 0.3 * f64::from(age62[i])
                - 0.2 * f64::from(female[i])
        })
        .collect();
    let b = calibrate_intercept(&offsets, shape.approved as f64 / n as f64);

    // Bernoulli draws, then flip the rows nearest the decision boundary
    // until the approval count is exact.
    let mut margin: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut approved: Vec<bool> = Vec::with_capacity(n);
    for (i, o) in offsets.iter().enumerate() {
        let p = sigmoid(b + o);
        let u = rng.random::<f64>();
        approved.push(u < p);
        margin.push((p - u, i));
    }
    let have = approved.iter().filter(|a| **a).count();
    if have > shape.approved {
        let mut hot: Vec<(f64, usize)> =
            margin.iter().copied().filter(|(m, _)| *m > 0.0).collect();
        hot.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &(_, i) in hot.iter().take(have - shape.approved) {
            approved[i] = false;
        }
    } else {
        let mut cold: Vec<(f64, usize)> =
            margin.iter().copied().filter(|(m, _)| *m <= 0.0).collect();
        cold.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for &(_, i) in cold.iter().take(shape.approved - have) {
            approved[i] = true;
        }
    }

    for i in 0..n {
        let action = if approved[i] {
            if rng.random::<f64>() < 0.9 {
                "1"
            } else {
                "2"
            }
        } else {
            "3"
        };
        rows.push(vec![
            action.to_string(),
            shape.race.to_string(),
            shape.ethnicity.to_string(),
            format!("{:.0}", amount[i]),
            if purchase[i] { "1".into() } else { pick(&PURPOSE_OTHER, &mut rng).to_string() },
            if dti[i] {
                pick(&DTI_HIGH_BUCKETS, &mut rng).to_string()
            } else {
                pick(&DTI_LOW_BUCKETS, &mut rng).to_string()
            },
            if age62[i] { "Yes".into() } else { "No".into() },
            if female[i] { "Female".into() } else { "Male".into() },
        ]);
    }
}

/// One otherwise-valid row, then a single field overridden per decoy class.
fn synth_decoys(count: usize, seed: u64, rows: &mut Vec<Vec<String>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (column index, replacement values) per drop path
    let classes: [(usize, &[&str]); 6] = [
        (1, &["Asian", "Joint", "Race Not Available"]), // race filter
        (0, &["4", "5", "6", "7", "8"]),                // withdrawn/incomplete
        (5, &["NA", "Exempt"]),                         // debt ratio missing
        (6, &["NA"]),                                   // age flag missing
        (7, &["Joint", "Sex Not Available"]),           // sex not binary
        (3, &["NA", "Exempt"]),                         // amount unparseable
    ];
    for k in 0..count {
        let mut row = vec![
            if rng.random::<f64>() < 0.67 { "1" } else { "3" }.to_string(),
            "White".to_string(),
            "Not Hispanic or Latino".to_string(),
            format!("{:.0}", (rng.random_range(3..=120) * 5000)),
            pick(&["1", "2", "31"], &mut rng).to_string(),
            pick(&DTI_LOW_BUCKETS, &mut rng).to_string(),
            "No".to_string(),
            pick(&["Female", "Male"], &mut rng).to_string(),
        ];
        let (col, values) = classes[k % classes.len()];
        row[col] = pick(values, &mut rng).to_string();
        rows.push(row);
    }
}

/// Deterministic synthetic raw table shaped like a public 2022 extract.
pub fn synthesize_fixture(cfg: &FixtureConfig) -> (Vec<String>, Vec<Vec<String>>) {
    let master = mix_seed(cfg.seed, STREAM_FIXTURE);
    let mut rows = Vec::with_capacity(WHITE.n + BLACK.n + cfg.decoy_rows);
    synth_group(&WHITE, mix_seed(master, 1), &mut rows);
    synth_group(&BLACK, mix_seed(master, 2), &mut rows);
    synth_decoys(cfg.decoy_rows, mix_seed(master, 3), &mut rows);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(master, 4));
    rows.shuffle(&mut rng);
    let headers = FIXTURE_HEADERS.iter().map(|h| h.to_string()).collect();
    (headers, rows)
}

/// Write the synthetic fixture as a raw CSV file.
pub fn write_fixture_csv(path: impl AsRef<Path>, cfg: &FixtureConfig) -> Result<()> {
    if let Some(parent) = path.as_ref().parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_err(path.as_ref(), e))?;
    }
    let (headers, rows) = synthesize_fixture(cfg);
    let mut writer = csv::Writer::from_path(path.as_ref()).map_err(Error::Csv)?;
    writer.write_record(&headers)?;
    for row in &rows {
        writer.write_record(row)?;
    }
    writer.flush().map_err(|e| io_err(path.as_ref(), e))?;
    Ok(())
}
