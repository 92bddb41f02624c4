//! Data-tuple schema, validation, synthesis, and file persistence.
//!
//! A tuple is one donor plus the list of potential recipients the offer was
//! matched against, each carrying the decision-support predictions (time to
//! next offer, mortality likelihood) and the surgeon's accept/refuse call.

mod io;
mod synth;

pub use io::{load_tuples, read_report, save_tuples, write_report, Report, RunConfig};
pub use synth::{
    synthesize_dataset, BiasKnobs, DecisionModel, DemographicMix, RaceMix, SynthSpec,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Race {
    White,
    Black,
    Hispanic,
    Asian,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    Male,
    Female,
}

/// The protected attribute a fairness split conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Gender,
    Race,
    Age,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::Gender, Attribute::Race, Attribute::Age];

    /// Advantaged-group membership: Male, non-Black races, or age ≤ 50.
    pub fn advantaged(&self, r: &RecipientRecord) -> bool {
        match self {
            Attribute::Gender => r.gender == Gender::Male,
            Attribute::Race => r.race != Race::Black,
            Attribute::Age => r.age <= 50,
        }
    }

    /// Disadvantaged-group membership: Female, Black, or age > 50. Exact
    /// complement of [`Attribute::advantaged`], so the two groups partition
    /// any recipient list.
    pub fn disadvantaged(&self, r: &RecipientRecord) -> bool {
        !self.advantaged(r)
    }
}

impl std::fmt::Display for Attribute {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Attribute::Gender => "gender",
            Attribute::Race => "race",
            Attribute::Age => "age",
        })
    }
}

impl std::str::FromStr for Attribute {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gender" => Ok(Attribute::Gender),
            "race" => Ok(Attribute::Race),
            "age" => Ok(Attribute::Age),
            other => Err(format!(
                "unknown attribute {other:?}; expected gender, race, or age"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DonorProfile {
    pub age: u32,
    pub race: Race,
    pub gender: Gender,
    pub kdpi: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipientRecord {
    pub age: u32,
    pub race: Race,
    pub gender: Gender,
    pub epts: u8,
    pub distance: f64,
    /// Predicted time to next offer, months (ŷ_T).
    pub ttno: f64,
    /// Predicted mortality likelihood before the next offer (ŷ_D).
    pub mortality: f64,
    /// Surgeon decision z, serialized as 0 (refuse) / 1 (transplant).
    #[serde(with = "zero_one")]
    pub decision: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTuple {
    pub donor: DonorProfile,
    pub recipients: Vec<RecipientRecord>,
}

impl DataTuple {
    pub fn acceptance_count(&self) -> usize {
        self.recipients.iter().filter(|r| r.decision).count()
    }
}

mod zero_one {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(de::Error::custom(format!(
                "decision must be 0 or 1, got {other}"
            ))),
        }
    }
}

pub const MIN_RECIPIENTS: usize = 2;
pub const MAX_RECIPIENTS: usize = 16;
pub const MIN_AGE: u32 = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// One validation finding; errors violate a schema invariant, warnings flag
/// conditions that merely degrade downstream scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: String) -> Self {
        Self {
            severity: Severity::Error,
            message,
        }
    }

    fn warning(message: String) -> Self {
        Self {
            severity: Severity::Warning,
            message,
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Checks every schema invariant plus group coverage under each attribute
/// split. Empty output means the tuple is fully usable.
pub fn validate_tuple(t: &DataTuple) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let k = t.recipients.len();
    if !(MIN_RECIPIENTS..=MAX_RECIPIENTS).contains(&k) {
        out.push(Diagnostic::error(format!(
            "recipient count {k} outside [{MIN_RECIPIENTS}, {MAX_RECIPIENTS}]"
        )));
    }
    if t.donor.age < MIN_AGE {
        out.push(Diagnostic::error(format!(
            "donor age {} below {MIN_AGE}",
            t.donor.age
        )));
    }
    if t.donor.kdpi > 100 {
        out.push(Diagnostic::error(format!(
            "donor kdpi {} above 100",
            t.donor.kdpi
        )));
    }

    for (i, r) in t.recipients.iter().enumerate() {
        if r.age < MIN_AGE {
            out.push(Diagnostic::error(format!(
                "recipient {i}: age {} below {MIN_AGE}",
                r.age
            )));
        }
        if r.epts > 100 {
            out.push(Diagnostic::error(format!(
                "recipient {i}: epts {} above 100",
                r.epts
            )));
        }
        if !r.distance.is_finite() || r.distance < 0.0 {
            out.push(Diagnostic::error(format!(
                "recipient {i}: distance {} must be finite and nonnegative",
                r.distance
            )));
        }
        if !r.ttno.is_finite() || r.ttno <= 0.0 {
            out.push(Diagnostic::error(format!(
                "recipient {i}: ttno {} must be finite and positive",
                r.ttno
            )));
        }
        if !r.mortality.is_finite() || r.mortality <= 0.0 || r.mortality >= 1.0 {
            out.push(Diagnostic::error(format!(
                "recipient {i}: mortality {} must lie strictly inside (0, 1)",
                r.mortality
            )));
        }
    }

    let accepted = t.acceptance_count();
    if !(1..=2).contains(&accepted) {
        out.push(Diagnostic::error(format!(
            "{accepted} accepted recipients; tuples carry 1 or 2 acceptances"
        )));
    }

    for attr in Attribute::ALL {
        let adv = t.recipients.iter().filter(|r| attr.advantaged(r)).count();
        let dis = k - adv;
        if adv == 0 {
            out.push(Diagnostic::warning(format!(
                "empty advantaged group under {attr} split"
            )));
        }
        if dis == 0 {
            out.push(Diagnostic::warning(format!(
                "empty disadvantaged group under {attr} split"
            )));
        }
    }

    out
}
