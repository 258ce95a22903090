//! Categorical data model of a coded driving event.
//!
//! An event is eight categorical variables: the severity label `e_s` and
//! seven case variables. The case variables split into a premise (the
//! situation: `e_n, p_e, p_m, r_c, d_c`) and a solution (what the driver did:
//! `d_r, c_t`).

use std::collections::HashSet;

use crate::error::{Error, Result, Violation};

/// Names of the seven case variables, in canonical field order. This order
/// fixes FFM feature offsets, enumeration order and embedding layout.
pub const CASE_VARIABLES: [&str; 7] = ["e_n", "p_e", "p_m", "d_r", "c_t", "r_c", "d_c"];

/// Positions of the premise variables inside [`CASE_VARIABLES`].
pub const PREMISE_POSITIONS: [usize; 5] = [0, 1, 2, 5, 6];

/// Positions of the solution variables inside [`CASE_VARIABLES`].
pub const SOLUTION_POSITIONS: [usize; 2] = [3, 4];

pub const LABEL: &str = "e_s";

pub const NUM_CASE_VARS: usize = 7;
pub const NUM_PREMISE_VARS: usize = 5;

/// Severity codes.
pub const NEAR_CRASH: u8 = 0;
pub const CRASH: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDef {
    pub name: String,
    pub cardinality: u8,
}

impl FieldDef {
    pub fn new(name: impl Into<String>, cardinality: u8) -> Self {
        Self {
            name: name.into(),
            cardinality,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSchema {
    fields: Vec<FieldDef>,
    premise_names: Vec<String>,
    solution_names: Vec<String>,
    label_name: String,
    // cardinalities of the case variables, in CASE_VARIABLES order
    case_cards: [u8; NUM_CASE_VARS],
    label_card: u8,
}

impl VariableSchema {
    /// Builds a schema and checks its invariants. The case variables must be
    /// the canonical seven names; their cardinalities are free.
    pub fn new(
        fields: Vec<FieldDef>,
        premise_names: Vec<String>,
        solution_names: Vec<String>,
        label_name: String,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for f in &fields {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate field {}", f.name)));
            }
            if f.cardinality < 2 {
                return Err(Error::InvalidSchema(format!(
                    "field {} has cardinality {} (< 2)",
                    f.name, f.cardinality
                )));
            }
        }
        for name in premise_names
            .iter()
            .chain(&solution_names)
            .chain(std::iter::once(&label_name))
        {
            if !seen.contains(name.as_str()) {
                return Err(Error::InvalidSchema(format!("unknown field {name}")));
            }
        }
        let card = |name: &str| -> Result<u8> {
            fields
                .iter()
                .find(|f| f.name == name)
                .map(|f| f.cardinality)
                .ok_or_else(|| Error::InvalidSchema(format!("missing case variable {name}")))
        };
        let mut case_cards = [0u8; NUM_CASE_VARS];
        for (slot, name) in case_cards.iter_mut().zip(CASE_VARIABLES) {
            *slot = card(name)?;
        }
        let premise_expected: Vec<&str> = PREMISE_POSITIONS
            .iter()
            .map(|&p| CASE_VARIABLES[p])
            .collect();
        let solution_expected: Vec<&str> = SOLUTION_POSITIONS
            .iter()
            .map(|&p| CASE_VARIABLES[p])
            .collect();
        if premise_names != premise_expected
            || solution_names != solution_expected
            || label_name != LABEL
        {
            return Err(Error::InvalidSchema(
                "premise/solution/label partition must be (e_n,p_e,p_m,r_c,d_c)/(d_r,c_t)/e_s"
                    .into(),
            ));
        }
        if fields.len() != NUM_CASE_VARS + 1 {
            return Err(Error::InvalidSchema(format!(
                "expected 8 fields, got {}",
                fields.len()
            )));
        }
        let label_card = card(LABEL)?;
        if label_card != 2 {
            return Err(Error::InvalidSchema("label must be binary".into()));
        }
        Ok(Self {
            fields,
            premise_names,
            solution_names,
            label_name,
            case_cards,
            label_card,
        })
    }

    /// Schema with the canonical names and the given case-variable
    /// cardinalities (in [`CASE_VARIABLES`] order). Used for reduced schemas.
    pub fn with_case_cardinalities(cards: [u8; NUM_CASE_VARS]) -> Result<Self> {
        let mut fields = vec![FieldDef::new(LABEL, 2)];
        fields.extend(
            CASE_VARIABLES
                .iter()
                .zip(cards)
                .map(|(n, c)| FieldDef::new(*n, c)),
        );
        Self::new(
            fields,
            PREMISE_POSITIONS
                .iter()
                .map(|&p| CASE_VARIABLES[p].to_string())
                .collect(),
            SOLUTION_POSITIONS
                .iter()
                .map(|&p| CASE_VARIABLES[p].to_string())
                .collect(),
            LABEL.to_string(),
        )
    }

    pub fn fields(&self) -> &[FieldDef] {
        &self.fields
    }

    pub fn premise_names(&self) -> &[String] {
        &self.premise_names
    }

    pub fn solution_names(&self) -> &[String] {
        &self.solution_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn label_cardinality(&self) -> u8 {
        self.label_card
    }

    /// Cardinalities of the case variables in canonical order.
    pub fn case_cardinalities(&self) -> [u8; NUM_CASE_VARS] {
        self.case_cards
    }

    pub fn premise_cardinalities(&self) -> [u8; NUM_PREMISE_VARS] {
        PREMISE_POSITIONS.map(|p| self.case_cards[p])
    }

    /// Number of one-hot features (sum of case-variable cardinalities).
    pub fn num_features(&self) -> usize {
        self.case_cards.iter().map(|&c| c as usize).sum()
    }

    /// Offset of each case variable's first feature.
    pub fn feature_offsets(&self) -> [usize; NUM_CASE_VARS] {
        let mut out = [0; NUM_CASE_VARS];
        let mut acc = 0;
        for (o, &c) in out.iter_mut().zip(&self.case_cards) {
            *o = acc;
            acc += c as usize;
        }
        out
    }

    /// Size of the full case space.
    pub fn case_space_size(&self) -> u64 {
        self.case_cards.iter().map(|&c| c as u64).product()
    }

    pub fn premise_space_size(&self) -> u64 {
        self.premise_cardinalities()
            .iter()
            .map(|&c| c as u64)
            .product()
    }

    /// Index of a case variable by name.
    pub fn case_position(name: &str) -> Option<usize> {
        CASE_VARIABLES.iter().position(|&n| n == name)
    }
}

/// The schema of the transcription protocol: e_s:2, e_n:8, p_e:10, p_m:11,
/// d_r:7, c_t:4, r_c:6, d_c:7.
pub fn default_schema() -> VariableSchema {
    VariableSchema::with_case_cardinalities([8, 10, 11, 7, 4, 6, 7])
        .expect("default schema is valid")
}

/// The situational half of a case: `(e_n, p_e, p_m, r_c, d_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Premise(pub [u8; NUM_PREMISE_VARS]);

/// The actionable half of a case: driver reaction and cushion-time bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Solution {
    pub d_r: u8,
    pub c_t: u8,
}

impl Solution {
    pub fn new(d_r: u8, c_t: u8) -> Self {
        Self { d_r, c_t }
    }
}

impl Premise {
    pub fn validate(&self, schema: &VariableSchema) -> std::result::Result<(), Vec<Violation>> {
        let v: Vec<Violation> = self
            .0
            .iter()
            .zip(schema.premise_cardinalities())
            .zip(PREMISE_POSITIONS)
            .filter(|((&code, card), _)| code >= *card)
            .map(|((&code, _), p)| Violation {
                field: CASE_VARIABLES[p].to_string(),
                code,
            })
            .collect();
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }
}

/// One coded driving event.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventCase {
    pub e_n: u8,
    pub p_e: u8,
    pub p_m: u8,
    pub d_r: u8,
    pub c_t: u8,
    pub r_c: u8,
    pub d_c: u8,
    pub e_s: Option<u8>,
    pub driver_id: Option<String>,
}

impl EventCase {
    /// Unlabeled, anonymous case from codes in canonical order.
    pub fn from_codes(c: [u8; NUM_CASE_VARS]) -> Self {
        Self {
            e_n: c[0],
            p_e: c[1],
            p_m: c[2],
            d_r: c[3],
            c_t: c[4],
            r_c: c[5],
            d_c: c[6],
            e_s: None,
            driver_id: None,
        }
    }

    pub fn from_parts(premise: Premise, solution: Solution) -> Self {
        let p = premise.0;
        Self::from_codes([p[0], p[1], p[2], solution.d_r, solution.c_t, p[3], p[4]])
    }

    pub fn with_label(mut self, e_s: u8) -> Self {
        self.e_s = Some(e_s);
        self
    }

    pub fn with_driver(mut self, id: impl Into<String>) -> Self {
        self.driver_id = Some(id.into());
        self
    }

    pub fn codes(&self) -> [u8; NUM_CASE_VARS] {
        [
            self.e_n, self.p_e, self.p_m, self.d_r, self.c_t, self.r_c, self.d_c,
        ]
    }

    pub fn premise(&self) -> Premise {
        Premise([self.e_n, self.p_e, self.p_m, self.r_c, self.d_c])
    }

    pub fn solution(&self) -> Solution {
        Solution::new(self.d_r, self.c_t)
    }
}

/// Checks every code against the schema. An empty violation list is `Ok`.
pub fn validate_case(
    case: &EventCase,
    schema: &VariableSchema,
) -> std::result::Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    if let Some(s) = case.e_s {
        if s >= schema.label_cardinality() {
            violations.push(Violation {
                field: LABEL.to_string(),
                code: s,
            });
        }
    }
    for ((code, card), name) in case
        .codes()
        .into_iter()
        .zip(schema.case_cardinalities())
        .zip(CASE_VARIABLES)
    {
        if code >= card {
            violations.push(Violation {
                field: name.to_string(),
                code,
            });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Like [`validate_case`] but as an [`Error`].
pub fn ensure_valid(case: &EventCase, schema: &VariableSchema) -> Result<()> {
    validate_case(case, schema).map_err(Error::InvalidCase)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventDataset {
    pub schema: VariableSchema,
    pub rows: Vec<EventCase>,
}

impl EventDataset {
    /// Builds a dataset, rejecting rows that do not validate.
    pub fn new(schema: VariableSchema, rows: Vec<EventCase>) -> Result<Self> {
        for r in &rows {
            ensure_valid(r, &schema)?;
        }
        Ok(Self { schema, rows })
    }

    pub fn empty(schema: VariableSchema) -> Self {
        Self {
            schema,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, case: EventCase) -> Result<()> {
        ensure_valid(&case, &self.schema)?;
        self.rows.push(case);
        Ok(())
    }

    /// Labels of every row, failing on the first unlabeled one.
    pub fn labels(&self) -> Result<Vec<u8>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| r.e_s.ok_or(Error::UnlabeledRow(i)))
            .collect()
    }

    /// `(near-crash count, crash count)`.
    pub fn class_counts(&self) -> Result<(usize, usize)> {
        let labels = self.labels()?;
        let crash = labels.iter().filter(|&&l| l == CRASH).count();
        Ok((labels.len() - crash, crash))
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}
