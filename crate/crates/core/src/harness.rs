//! JSON-driven runner: config validation, the check registry and versioned
//! run reports.
//!
//! A config names one instance and a list of checks:
//!
//! ```json
//! {
//!   "instance": { "kind": "pointwise", "dim": 4, "n": 3 },
//!   "checks": ["neumann", { "name": "tdz", "threshold": 1e-8 }],
//!   "seed": 42, "samples": 200, "tolerance": 1e-9,
//!   "arithmetic_mode": "exact"
//! }
//! ```
//!
//! Validation collects every problem before giving up, so a config with a
//! misspelled check and a dependent anchor reports both.

use std::collections::BTreeMap;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::algebra::audit::ADVERSARIAL_LIBRARY_VERSION;
use crate::algebra::{
    anchor_scaling_audit, dependent_summand_probe, multiplicativity_audit, Algebra, InstanceNNorm, NormVariant,
    OperatorAlgebra, PointwiseAlgebra, SeriesAlgebra, Unitization,
};
use crate::axioms::{check_n_norm_axioms, GramNNorm};
use crate::element::Element;
use crate::functionals::{
    character_search, default_grid, exponential_check, gkz_converse_check, gkz_forward_check,
    homomorphism_lemma_check, BLinearFunctional,
};
use crate::invertibility::{
    bound_sweep, group_check, neumann_sweep, openness_check, resolvent_sweep, slope_sweep, tdz_sweep, BoundCheck,
    TdzParams,
};
use crate::linalg::rank;
use crate::nnorm::{cauchy_schwarz_sweep, DEFAULT_TOL};
use crate::report::{CheckReport, Outcome};
use crate::scalar::{ArithmeticMode, CRat, Scalar, ScalarJson, C64};

pub const SCHEMA_VERSION: u32 = 1;
pub const ARTIFACT: &str = "nbanach";
/// Largest candidate count `character_search` will enumerate.
pub const MAX_GRID_CANDIDATES: usize = 1_000_000;

const DEFAULT_SEED: u64 = 0;
const DEFAULT_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    NNormAxioms,
    CauchySchwarz,
    MultiplicativityAudit,
    AnchorScalingAudit,
    DependentSummandProbe,
    Neumann,
    Resolvent,
    Openness,
    Continuity,
    Perturbation,
    PerturbationSlope,
    GroupLaws,
    Tdz,
    HomomorphismLemma,
    GkzForward,
    GkzConverse,
    CharacterSearch,
    Exponential,
}

impl CheckName {
    pub const ALL: [CheckName; 18] = [
        CheckName::NNormAxioms,
        CheckName::CauchySchwarz,
        CheckName::MultiplicativityAudit,
        CheckName::AnchorScalingAudit,
        CheckName::DependentSummandProbe,
        CheckName::Neumann,
        CheckName::Resolvent,
        CheckName::Openness,
        CheckName::Continuity,
        CheckName::Perturbation,
        CheckName::PerturbationSlope,
        CheckName::GroupLaws,
        CheckName::Tdz,
        CheckName::HomomorphismLemma,
        CheckName::GkzForward,
        CheckName::GkzConverse,
        CheckName::CharacterSearch,
        CheckName::Exponential,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::NNormAxioms => "n_norm_axioms",
            CheckName::CauchySchwarz => "cauchy_schwarz",
            CheckName::MultiplicativityAudit => "multiplicativity_audit",
            CheckName::AnchorScalingAudit => "anchor_scaling_audit",
            CheckName::DependentSummandProbe => "dependent_summand_probe",
            CheckName::Neumann => "neumann",
            CheckName::Resolvent => "resolvent",
            CheckName::Openness => "openness",
            CheckName::Continuity => "continuity",
            CheckName::Perturbation => "perturbation",
            CheckName::PerturbationSlope => "perturbation_slope",
            CheckName::GroupLaws => "group",
            CheckName::Tdz => "tdz",
            CheckName::HomomorphismLemma => "homomorphism_lemma",
            CheckName::GkzForward => "gkz_forward",
            CheckName::GkzConverse => "gkz_converse",
            CheckName::CharacterSearch => "character_search",
            CheckName::Exponential => "exponential",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == name)
    }

    /// Check-specific keys accepted next to `name`, `samples` and `tolerance`.
    fn params(self) -> &'static [&'static str] {
        match self {
            CheckName::Neumann | CheckName::Resolvent => &["q_max"],
            CheckName::Openness => &["centers", "perturbations"],
            CheckName::PerturbationSlope => &["slope_tol"],
            CheckName::Tdz => &["threshold", "k_max"],
            CheckName::HomomorphismLemma | CheckName::GkzForward | CheckName::GkzConverse => &["functional", "bound"],
            CheckName::CharacterSearch => &["grid"],
            _ => &[],
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Check groups behind the CLI subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    CheckAxioms,
    Invert,
    Resolvent,
    TdzScan,
    Gkz,
    Audit,
    /// The configured checks, or the kind's default suite when none are listed.
    Run,
}

impl Group {
    fn members(self) -> &'static [CheckName] {
        use CheckName::*;
        match self {
            Group::CheckAxioms => &[NNormAxioms, CauchySchwarz],
            Group::Invert => &[Neumann, Openness, Continuity, Perturbation, PerturbationSlope, GroupLaws],
            Group::Resolvent => &[CheckName::Resolvent],
            Group::TdzScan => &[Tdz],
            Group::Gkz => &[HomomorphismLemma, GkzForward, GkzConverse, CharacterSearch],
            Group::Audit => &[MultiplicativityAudit, AnchorScalingAudit, DependentSummandProbe],
            Group::Run => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Gram,
    Pointwise,
    Series,
    Operator,
    Unitization,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceSpec {
    pub kind: InstanceKind,
    /// Vector dimension (gram, pointwise) or matrix size (operator).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<NormVariant>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Vec<Vec<ScalarJson>>>,
    pub normalize: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<Box<InstanceSpec>>,
}

impl InstanceSpec {
    /// Coordinates per element.
    pub fn element_dim(&self) -> usize {
        match self.kind {
            InstanceKind::Gram | InstanceKind::Pointwise => self.dim.unwrap_or(0),
            InstanceKind::Series => self.degree.unwrap_or(0) + 1,
            InstanceKind::Operator => self.dim.unwrap_or(0).pow(2),
            InstanceKind::Unitization => self.base.as_ref().map_or(0, |b| b.element_dim() + 1),
        }
    }

    fn root_kind(&self) -> InstanceKind {
        self.kind
    }

    fn base_kind(&self) -> Option<InstanceKind> {
        self.base.as_ref().map(|b| b.kind)
    }

    /// Whether `check` can run on this instance at all.
    pub fn supports(&self, check: CheckName) -> bool {
        use CheckName::*;
        match (self.root_kind(), check) {
            (InstanceKind::Gram, NNormAxioms | CauchySchwarz) => true,
            (InstanceKind::Gram, _) | (_, CauchySchwarz) => false,
            (InstanceKind::Operator, NNormAxioms | DependentSummandProbe) => false,
            (InstanceKind::Unitization, NNormAxioms | DependentSummandProbe) => {
                self.base_kind() != Some(InstanceKind::Operator)
            }
            _ => true,
        }
    }

    /// Checks run when a config lists none.
    pub fn default_suite(&self) -> Vec<CheckName> {
        use CheckName::*;
        let list: &[CheckName] = match self.kind {
            InstanceKind::Gram => &[NNormAxioms, CauchySchwarz],
            InstanceKind::Pointwise | InstanceKind::Series => &[
                NNormAxioms,
                MultiplicativityAudit,
                Neumann,
                Resolvent,
                Openness,
                Continuity,
                Perturbation,
                PerturbationSlope,
                GroupLaws,
                Tdz,
                HomomorphismLemma,
                GkzForward,
                GkzConverse,
                CharacterSearch,
                Exponential,
            ],
            InstanceKind::Operator | InstanceKind::Unitization => &[
                MultiplicativityAudit,
                Neumann,
                Resolvent,
                Continuity,
                Perturbation,
                PerturbationSlope,
                GroupLaws,
                Tdz,
                Exponential,
            ],
        };
        list.iter()
            .copied()
            .filter(|&c| c != CharacterSearch || default_grid::<C64>().len().pow(self.element_dim() as u32) <= 10_000)
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CheckParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub functional: Option<Vec<ScalarJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<ScalarJson>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSpec {
    pub name: CheckName,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(flatten)]
    pub params: CheckParams,
}

impl CheckSpec {
    pub fn new(name: CheckName) -> Self {
        CheckSpec {
            name,
            samples: None,
            tolerance: None,
            params: CheckParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub instance: InstanceSpec,
    /// Empty means the instance's default suite.
    pub checks: Vec<CheckSpec>,
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
    pub arithmetic_mode: ArithmeticMode,
}

impl RunConfig {
    /// Pointwise C^4 with n = 3 and the default suite.
    pub fn default_pointwise() -> Self {
        RunConfig {
            instance: InstanceSpec {
                kind: InstanceKind::Pointwise,
                dim: Some(4),
                degree: None,
                variant: None,
                n: 3,
                anchors: None,
                normalize: true,
                base: None,
            },
            checks: Vec::new(),
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            tolerance: DEFAULT_TOL,
            arithmetic_mode: ArithmeticMode::Approximate,
        }
    }

    /// The checks that will actually run.
    pub fn resolved_checks(&self) -> Vec<CheckSpec> {
        if self.checks.is_empty() {
            self.instance.default_suite().into_iter().map(CheckSpec::new).collect()
        } else {
            self.checks.clone()
        }
    }

    /// Narrows the config to a subcommand's group, keeping the parameters of
    /// any configured entry for a member. Errors when nothing applies.
    pub fn select_group(&mut self, group: Group) -> Result<(), ConfigErrors> {
        if group == Group::Run {
            return Ok(());
        }
        let picked: Vec<CheckSpec> = group
            .members()
            .iter()
            .filter(|&&c| self.instance.supports(c))
            .filter(|&&c| c != CheckName::CharacterSearch || grid_size(&self.instance, None) <= MAX_GRID_CANDIDATES)
            .map(|&c| {
                self.checks
                    .iter()
                    .find(|s| s.name == c)
                    .cloned()
                    .unwrap_or_else(|| CheckSpec::new(c))
            })
            .collect();
        if picked.is_empty() {
            return Err(ConfigErrors(vec![ConfigError::new(
                "checks",
                format!("no check of this subcommand applies to a {:?} instance", self.instance.kind),
            )]));
        }
        self.checks = picked;
        Ok(())
    }
}

fn grid_size(inst: &InstanceSpec, grid: Option<&Vec<ScalarJson>>) -> usize {
    let g = grid.map_or(default_grid::<C64>().len(), Vec::len);
    g.checked_pow(inst.element_dim() as u32).unwrap_or(usize::MAX)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Every validation problem found in a config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

struct Validator {
    errors: Vec<ConfigError>,
}

impl Validator {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(ConfigError::new(path, message));
    }

    fn unknown_keys(&mut self, path: &str, obj: &Map<String, Value>, allowed: &[&str]) {
        for key in obj.keys() {
            if !allowed.contains(&key.as_str()) {
                self.push(format!("{path}.{key}"), format!("unknown key; expected one of {allowed:?}"));
            }
        }
    }

    fn usize_field(&mut self, path: &str, obj: &Map<String, Value>, key: &str) -> Option<usize> {
        let v = obj.get(key)?;
        match v.as_u64().and_then(|u| usize::try_from(u).ok()) {
            Some(u) => Some(u),
            None => {
                self.push(format!("{path}.{key}"), "expected a nonnegative integer");
                None
            }
        }
    }

    fn f64_field(&mut self, path: &str, obj: &Map<String, Value>, key: &str) -> Option<f64> {
        let v = obj.get(key)?;
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.push(format!("{path}.{key}"), "expected a finite number");
                None
            }
        }
    }

    fn scalars(&mut self, path: &str, v: &Value) -> Option<Vec<ScalarJson>> {
        let parsed: Result<Vec<ScalarJson>, _> = serde_json::from_value(v.clone());
        match parsed {
            Ok(list) => {
                let bad: Vec<usize> = (0..list.len()).filter(|&i| list[i].to_scalar::<CRat>().is_none()).collect();
                if bad.is_empty() {
                    Some(list)
                } else {
                    self.push(path, format!("entries {bad:?} are not finite rationals"));
                    None
                }
            }
            Err(e) => {
                self.push(path, format!("expected a list of {{\"re\", \"im\"}} scalars ({e})"));
                None
            }
        }
    }

    fn instance(&mut self, path: &str, v: &Value, nested: bool) -> Option<InstanceSpec> {
        let Some(obj) = v.as_object() else {
            self.push(path, "expected an object");
            return None;
        };
        self.unknown_keys(path, obj, &["kind", "dim", "degree", "variant", "n", "anchors", "normalize", "base"]);
        let kind = match obj.get("kind").map(|k| serde_json::from_value::<InstanceKind>(k.clone())) {
            Some(Ok(k)) => k,
            Some(Err(_)) => {
                self.push(
                    format!("{path}.kind"),
                    "unknown kind; expected gram, pointwise, series, operator or unitization",
                );
                return None;
            }
            None => {
                self.push(format!("{path}.kind"), "missing");
                return None;
            }
        };
        let before = self.errors.len();
        let normalize = match obj.get("normalize") {
            None => true,
            Some(Value::Bool(b)) => *b,
            Some(_) => {
                self.push(format!("{path}.normalize"), "expected a boolean");
                true
            }
        };
        if kind == InstanceKind::Unitization {
            if nested {
                self.push(format!("{path}.kind"), "a unitization base cannot itself be a unitization");
                return None;
            }
            for key in ["dim", "degree", "variant", "n", "anchors"] {
                if obj.contains_key(key) {
                    self.push(format!("{path}.{key}"), "set this on the base instance");
                }
            }
            let base = match obj.get("base") {
                Some(b) => self.instance(&format!("{path}.base"), b, true),
                None => {
                    self.push(format!("{path}.base"), "missing base instance");
                    None
                }
            }?;
            if base.kind == InstanceKind::Gram {
                self.push(format!("{path}.base.kind"), "gram is a vector space, not an algebra");
                return None;
            }
            return (self.errors.len() == before).then(|| InstanceSpec {
                kind,
                dim: None,
                degree: None,
                variant: None,
                n: base.n,
                anchors: None,
                normalize,
                base: Some(Box::new(base)),
            });
        }
        if obj.contains_key("base") {
            self.push(format!("{path}.base"), "only unitization takes a base");
        }
        let (dim, degree, variant) = if kind == InstanceKind::Series {
            if obj.contains_key("dim") {
                self.push(format!("{path}.dim"), "series instances take `degree`");
            }
            let degree = self.usize_field(path, obj, "degree").or_else(|| {
                if !obj.contains_key("degree") {
                    self.push(format!("{path}.degree"), "missing");
                }
                None
            });
            let variant = match obj.get("variant").map(|v| serde_json::from_value::<NormVariant>(v.clone())) {
                Some(Ok(v @ (NormVariant::Eq21MaxProduct | NormVariant::L1Corrected))) => Some(v),
                None => Some(NormVariant::L1Corrected),
                Some(_) => {
                    self.push(format!("{path}.variant"), "expected eq21_max_product or l1_corrected");
                    None
                }
            };
            (None, degree, variant)
        } else {
            for key in ["degree", "variant"] {
                if obj.contains_key(key) {
                    self.push(format!("{path}.{key}"), "only series instances take this");
                }
            }
            let dim = self.usize_field(path, obj, "dim").or_else(|| {
                if !obj.contains_key("dim") {
                    self.push(format!("{path}.dim"), "missing");
                }
                None
            });
            (dim, None, None)
        };
        let anchors = match obj.get("anchors") {
            None => None,
            Some(Value::Array(list)) => {
                let parsed: Vec<Option<Vec<ScalarJson>>> = list
                    .iter()
                    .enumerate()
                    .map(|(i, a)| self.scalars(&format!("{path}.anchors[{i}]"), a))
                    .collect();
                parsed.into_iter().collect::<Option<Vec<_>>>()
            }
            Some(_) => {
                self.push(format!("{path}.anchors"), "expected an array of elements");
                None
            }
        };
        let n = match (self.usize_field(path, obj, "n"), &anchors) {
            (Some(n), _) => Some(n),
            (None, Some(a)) if !obj.contains_key("n") => Some(a.len() + 1),
            (None, None) if !obj.contains_key("n") && !obj.contains_key("anchors") => {
                self.push(format!("{path}.anchors"), "missing anchors: give `n` or an explicit `anchors` list");
                None
            }
            _ => None,
        };
        if kind == InstanceKind::Gram && anchors.is_some() {
            self.push(format!("{path}.anchors"), "gram checks draw their own anchors");
        }
        if let (Some(n), Some(a)) = (n, &anchors) {
            if n < 2 {
                self.push(format!("{path}.n"), "n must be at least 2");
            } else if a.len() < n - 1 {
                self.push(
                    format!("{path}.anchors"),
                    format!("missing anchors: n = {n} needs {} anchors, found {}", n - 1, a.len()),
                );
            } else if a.len() > n - 1 {
                self.push(
                    format!("{path}.anchors"),
                    format!("too many anchors: n = {n} needs {}, found {}", n - 1, a.len()),
                );
            }
        }
        if self.errors.len() != before {
            return None;
        }
        let spec = InstanceSpec {
            kind,
            dim,
            degree,
            variant,
            n: n?,
            anchors,
            normalize,
            base: None,
        };
        self.anchors_independent(path, &spec);
        if self.errors.len() == before {
            if let Err(e) = build_probe(&spec) {
                self.push(path.to_string(), e);
            }
        }
        (self.errors.len() == before).then_some(spec)
    }

    /// Exact rank test on the anchor coordinates.
    fn anchors_independent(&mut self, path: &str, spec: &InstanceSpec) {
        let Some(anchors) = &spec.anchors else { return };
        let width = anchors.iter().map(Vec::len).max().unwrap_or(0);
        let rows: Vec<Vec<CRat>> = anchors
            .iter()
            .map(|a| {
                let mut row: Vec<CRat> = a.iter().filter_map(ScalarJson::to_scalar).collect();
                row.resize(width, CRat::zero());
                row
            })
            .collect();
        let r = rank(&rows, 0.0);
        if r < rows.len() {
            self.push(
                format!("{path}.anchors"),
                format!(
                    "anchors are linearly dependent (rank {r} < {}); by N1 every n-norm evaluation on them is 0",
                    rows.len()
                ),
            );
        }
    }

    fn check(&mut self, path: &str, v: &Value, inst: Option<&InstanceSpec>) -> Option<CheckSpec> {
        let (name_str, obj) = match v {
            Value::String(s) => (s.clone(), None),
            Value::Object(o) => match o.get("name").and_then(Value::as_str) {
                Some(s) => (s.to_string(), Some(o)),
                None => {
                    self.push(format!("{path}.name"), "missing check name");
                    return None;
                }
            },
            _ => {
                self.push(path, "expected a check name or an object with `name`");
                return None;
            }
        };
        let Some(name) = CheckName::parse(&name_str) else {
            let known: Vec<&str> = CheckName::ALL.iter().map(|c| c.as_str()).collect();
            self.push(path, format!("unknown check `{name_str}`; registered checks: {}", known.join(", ")));
            return None;
        };
        let mut spec = CheckSpec::new(name);
        if let Some(obj) = obj {
            let mut allowed = vec!["name", "samples", "tolerance"];
            allowed.extend_from_slice(name.params());
            self.unknown_keys(path, obj, &allowed);
            spec.samples = self.usize_field(path, obj, "samples");
            spec.tolerance = self.f64_field(path, obj, "tolerance");
            let p = &mut spec.params;
            p.q_max = self.f64_field(path, obj, "q_max");
            if let Some(q) = p.q_max {
                if !(0.0 < q && q < 1.0) {
                    self.push(format!("{path}.q_max"), "must lie in (0, 1)");
                }
            }
            p.centers = self.usize_field(path, obj, "centers");
            p.perturbations = self.usize_field(path, obj, "perturbations");
            p.slope_tol = self.f64_field(path, obj, "slope_tol");
            p.threshold = self.f64_field(path, obj, "threshold");
            p.k_max = self.usize_field(path, obj, "k_max");
            p.bound = self.f64_field(path, obj, "bound");
            p.functional = obj.get("functional").and_then(|f| self.scalars(&format!("{path}.functional"), f));
            p.grid = obj.get("grid").and_then(|g| self.scalars(&format!("{path}.grid"), g));
        }
        if let Some(inst) = inst {
            if !inst.supports(name) {
                self.push(path, format!("`{name}` does not apply to a {:?} instance", inst.kind));
            }
            if let Some(f) = &spec.params.functional {
                if f.len() != inst.element_dim() {
                    self.push(
                        format!("{path}.functional"),
                        format!("expected {} coefficients, found {}", inst.element_dim(), f.len()),
                    );
                }
            }
            if name == CheckName::CharacterSearch && grid_size(inst, spec.params.grid.as_ref()) > MAX_GRID_CANDIDATES {
                self.push(path, format!("grid has more than {MAX_GRID_CANDIDATES} candidates on this instance"));
            }
        }
        Some(spec)
    }
}

/// Builds the instance in exact arithmetic to surface constructor errors.
fn build_probe(spec: &InstanceSpec) -> Result<(), String> {
    match spec.kind {
        InstanceKind::Gram => {
            let (dim, n) = (spec.dim.unwrap_or(0), spec.n);
            if n < 2 || dim < n {
                Err(format!("gram needs 2 <= n <= dim, got n = {n}, dim = {dim}"))
            } else {
                Ok(())
            }
        }
        InstanceKind::Pointwise => pointwise::<CRat>(spec).map(|_| ()),
        InstanceKind::Series => series::<CRat>(spec).map(|_| ()),
        InstanceKind::Operator => operator::<CRat>(spec).map(|_| ()),
        InstanceKind::Unitization => Ok(()),
    }
}

/// Parses and validates a config document, reporting every problem found.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| ConfigErrors(vec![ConfigError::new("$", format!("malformed JSON: {e}"))]))?;
    let Some(obj) = doc.as_object() else {
        return Err(ConfigErrors(vec![ConfigError::new("$", "expected a JSON object")]));
    };
    let mut v = Validator { errors: Vec::new() };
    v.unknown_keys("$", obj, &["instance", "checks", "seed", "samples", "tolerance", "arithmetic_mode"]);
    let instance = match obj.get("instance") {
        Some(i) => v.instance("instance", i, false),
        None => {
            v.push("instance", "missing");
            None
        }
    };
    let mut checks = Vec::new();
    match obj.get("checks") {
        None => {}
        Some(Value::Array(list)) => {
            for (i, c) in list.iter().enumerate() {
                if let Some(spec) = v.check(&format!("checks[{i}]"), c, instance.as_ref()) {
                    if checks.iter().any(|s: &CheckSpec| s.name == spec.name) {
                        v.push(format!("checks[{i}]"), format!("`{}` is listed twice", spec.name));
                    } else {
                        checks.push(spec);
                    }
                }
            }
        }
        Some(_) => v.push("checks", "expected an array"),
    }
    let seed = match obj.get("seed") {
        None => DEFAULT_SEED,
        Some(s) => s.as_u64().unwrap_or_else(|| {
            v.push("seed", "expected a nonnegative integer");
            DEFAULT_SEED
        }),
    };
    let samples = v.usize_field("$", obj, "samples").unwrap_or(DEFAULT_SAMPLES);
    let tolerance = v.f64_field("$", obj, "tolerance").unwrap_or(DEFAULT_TOL);
    if tolerance < 0.0 {
        v.push("tolerance", "must be nonnegative");
    }
    let arithmetic_mode = match obj.get("arithmetic_mode") {
        None => ArithmeticMode::Approximate,
        Some(m) => serde_json::from_value(m.clone()).unwrap_or_else(|_| {
            v.push("arithmetic_mode", "expected approximate or exact");
            ArithmeticMode::Approximate
        }),
    };
    match (instance, v.errors.is_empty()) {
        (Some(instance), true) => Ok(RunConfig {
            instance,
            checks,
            seed,
            samples,
            tolerance,
            arithmetic_mode,
        }),
        _ => Err(ConfigErrors(v.errors)),
    }
}

fn anchor_scalars<S: Scalar>(spec: &InstanceSpec) -> Option<Vec<Vec<S>>> {
    spec.anchors.as_ref().map(|list| {
        list.iter()
            .map(|a| a.iter().filter_map(ScalarJson::to_scalar).collect())
            .collect()
    })
}

fn pointwise<S: Scalar>(spec: &InstanceSpec) -> Result<PointwiseAlgebra<S>, String> {
    let m = spec.dim.unwrap_or(0);
    match anchor_scalars(spec) {
        Some(a) => PointwiseAlgebra::with_anchors(m, a, spec.normalize),
        None => PointwiseAlgebra::new(m, spec.n),
    }
    .map_err(|e| e.to_string())
}

fn series<S: Scalar>(spec: &InstanceSpec) -> Result<SeriesAlgebra<S>, String> {
    let d = spec.degree.unwrap_or(0);
    let variant = spec.variant.unwrap_or(NormVariant::L1Corrected);
    match anchor_scalars(spec) {
        Some(a) => SeriesAlgebra::with_anchors(d, a, variant, spec.normalize),
        None => SeriesAlgebra::new(d, spec.n, variant),
    }
    .map_err(|e| e.to_string())
}

fn operator<S: Scalar>(spec: &InstanceSpec) -> Result<OperatorAlgebra<S>, String> {
    let d = spec.dim.unwrap_or(0);
    match anchor_scalars(spec) {
        Some(a) => OperatorAlgebra::with_anchors(d, a, spec.normalize),
        None => OperatorAlgebra::new(d, spec.n),
    }
    .map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub hypothesis_violated: usize,
    pub error: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub total_ms: f64,
    pub per_check_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub artifact: String,
    pub version: String,
    pub seed: u64,
    pub arithmetic_mode: ArithmeticMode,
    pub adversarial_library_version: u32,
    pub instance: String,
    pub config: RunConfig,
    pub checks: Vec<CheckReport>,
    pub summary: Summary,
    /// Wall-clock timings; omitted in exact mode so reports compare byte for byte.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl RunReport {
    /// 0 when every check passed or had its hypotheses violated, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.fail + self.summary.error == 0 {
            0
        } else {
            1
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn human_summary(&self) -> String {
        let mut out = format!("{} {} on {} (seed {})\n", self.artifact, self.version, self.instance, self.seed);
        for c in &self.checks {
            let detail = match &c.outcome {
                Outcome::Pass => String::new(),
                Outcome::Fail { reason, .. } | Outcome::HypothesisViolated { reason, .. } => format!(": {reason}"),
                Outcome::Error { message } => format!(": {message}"),
            };
            out.push_str(&format!("  {:<20} {}{detail}\n", c.outcome.label(), c.check));
        }
        let s = &self.summary;
        out.push_str(&format!(
            "{} pass, {} fail, {} hypothesis_violated, {} error\n",
            s.pass, s.fail, s.hypothesis_violated, s.error
        ));
        out
    }
}

fn functional_of<S: Scalar>(p: &CheckParams, dim: usize) -> BLinearFunctional<S> {
    let t = match &p.functional {
        Some(c) => BLinearFunctional::new(c.iter().filter_map(ScalarJson::to_scalar).collect()),
        None => BLinearFunctional::projection(dim, 0),
    };
    match p.bound {
        Some(b) => t.with_bound(b),
        None => t,
    }
}

fn run_algebra_check<S: Scalar, A: Algebra<S>>(inst: &A, spec: &CheckSpec, cfg: &RunConfig) -> CheckReport {
    use CheckName::*;
    let samples = spec.samples.unwrap_or(cfg.samples);
    let tol = spec.tolerance.unwrap_or(cfg.tolerance);
    let seed = cfg.seed;
    let p = &spec.params;
    let dim = inst.zero().dim();
    match spec.name {
        NNormAxioms => check_n_norm_axioms(&InstanceNNorm { inst, radius: 1.0 }, samples, seed, tol),
        MultiplicativityAudit => multiplicativity_audit(inst, samples, seed, tol),
        AnchorScalingAudit => anchor_scaling_audit(inst, samples, seed, tol),
        DependentSummandProbe => dependent_summand_probe(inst, seed, tol),
        Neumann => neumann_sweep(inst, samples, seed, p.q_max.unwrap_or(0.9), tol),
        CheckName::Resolvent => resolvent_sweep(inst, samples, seed, p.q_max.unwrap_or(0.9), tol),
        Openness => openness_check(inst, p.centers.unwrap_or(50), p.perturbations.unwrap_or(100), seed, tol),
        Continuity => bound_sweep(inst, BoundCheck::Continuity, samples, seed, tol),
        Perturbation => bound_sweep(inst, BoundCheck::Perturbation, samples, seed, tol),
        PerturbationSlope => slope_sweep(inst, samples, seed, p.slope_tol.unwrap_or(0.1)),
        CheckName::GroupLaws => group_check(inst, samples, seed, tol),
        Tdz => {
            let d = TdzParams::default();
            let params = TdzParams {
                k_max: p.k_max.unwrap_or(d.k_max),
                threshold: p.threshold.unwrap_or(d.threshold),
                seed,
            };
            tdz_sweep(inst, samples, params, tol)
        }
        HomomorphismLemma => homomorphism_lemma_check(&functional_of(p, dim), inst, samples, seed, tol),
        GkzForward => gkz_forward_check(&functional_of(p, dim), inst, samples, seed, tol),
        GkzConverse => gkz_converse_check(&functional_of(p, dim), inst, samples, seed, tol),
        CharacterSearch => {
            let grid: Vec<S> = match &p.grid {
                Some(g) => g.iter().filter_map(ScalarJson::to_scalar).collect(),
                None => default_grid(),
            };
            character_search(inst, &grid, seed, tol)
        }
        Exponential => exponential_check(inst, samples, seed, tol),
        CauchySchwarz => not_applicable(spec, cfg),
    }
}

fn run_gram_check<S: Scalar>(spec: &CheckSpec, cfg: &RunConfig) -> CheckReport {
    let samples = spec.samples.unwrap_or(cfg.samples);
    let tol = spec.tolerance.unwrap_or(cfg.tolerance);
    let (dim, n) = (cfg.instance.dim.unwrap_or(0), cfg.instance.n);
    match spec.name {
        CheckName::NNormAxioms => {
            check_n_norm_axioms::<S, _>(&GramNNorm { dim, n, tol: DEFAULT_TOL }, samples, cfg.seed, tol)
        }
        CheckName::CauchySchwarz => cauchy_schwarz_sweep::<S>(dim, n, samples, cfg.seed, tol),
        _ => not_applicable(spec, cfg),
    }
}

fn not_applicable(spec: &CheckSpec, cfg: &RunConfig) -> CheckReport {
    let mut r = CheckReport::new(spec.name.as_str(), Some(cfg.seed), 0, cfg.tolerance);
    r.error(format!("`{}` does not apply to a {:?} instance", spec.name, cfg.instance.kind));
    r
}

/// Runs `f` and turns a panic into an error outcome.
fn guarded(spec: &CheckSpec, cfg: &RunConfig, f: impl FnOnce() -> CheckReport) -> CheckReport {
    let mut report = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|panic| {
        let msg = panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "unknown panic".into());
        let mut r = CheckReport::new(spec.name.as_str(), Some(cfg.seed), 0, cfg.tolerance);
        r.error(format!("internal failure: {msg}"));
        r
    });
    report.check = spec.name.as_str().to_string();
    report
}

type Timed = Vec<(CheckReport, f64)>;

fn run_all(specs: &[CheckSpec], cfg: &RunConfig, mut one: impl FnMut(&CheckSpec) -> CheckReport) -> Timed {
    specs
        .iter()
        .map(|spec| {
            let start = Instant::now();
            let r = guarded(spec, cfg, || one(spec));
            (r, start.elapsed().as_secs_f64() * 1e3)
        })
        .collect()
}

fn run_on<S: Scalar, A: Algebra<S>>(inst: &A, specs: &[CheckSpec], cfg: &RunConfig) -> (String, Timed) {
    (inst.describe(), run_all(specs, cfg, |s| run_algebra_check(inst, s, cfg)))
}

fn construction_failed(specs: &[CheckSpec], cfg: &RunConfig, msg: &str) -> (String, Timed) {
    let reports = specs
        .iter()
        .map(|s| {
            let mut r = CheckReport::new(s.name.as_str(), Some(cfg.seed), 0, cfg.tolerance);
            r.error(format!("instance construction failed: {msg}"));
            (r, 0.0)
        })
        .collect();
    ("unconstructed instance".into(), reports)
}

fn run_typed<S: Scalar>(cfg: &RunConfig, specs: &[CheckSpec]) -> (String, Timed) {
    let spec = &cfg.instance;
    let built = match spec.kind {
        InstanceKind::Gram => {
            let desc = format!("gram(dim={}, n={})", spec.dim.unwrap_or(0), spec.n);
            return (desc, run_all(specs, cfg, |s| run_gram_check::<S>(s, cfg)));
        }
        InstanceKind::Pointwise => pointwise::<S>(spec).map(|i| run_on(&i, specs, cfg)),
        InstanceKind::Series => series::<S>(spec).map(|i| run_on(&i, specs, cfg)),
        InstanceKind::Operator => operator::<S>(spec).map(|i| run_on(&i, specs, cfg)),
        InstanceKind::Unitization => {
            let base = spec.base.as_deref().ok_or_else(|| "missing base".to_string());
            base.and_then(|b| match b.kind {
                InstanceKind::Pointwise => pointwise::<S>(b).map(|i| run_on(&Unitization::new(i), specs, cfg)),
                InstanceKind::Series => series::<S>(b).map(|i| run_on(&Unitization::new(i), specs, cfg)),
                InstanceKind::Operator => operator::<S>(b).map(|i| run_on(&Unitization::new(i), specs, cfg)),
                other => Err(format!("{other:?} cannot be unitized")),
            })
        }
    };
    built.unwrap_or_else(|msg| construction_failed(specs, cfg, &msg))
}

/// Executes every resolved check of `cfg`. Every check yields exactly one
/// report with a terminal outcome; panics inside a check become errors.
pub fn run_suite(cfg: &RunConfig) -> RunReport {
    let start = Instant::now();
    let specs = cfg.resolved_checks();
    let (instance, timed) = match cfg.arithmetic_mode {
        ArithmeticMode::Approximate => run_typed::<C64>(cfg, &specs),
        ArithmeticMode::Exact => run_typed::<CRat>(cfg, &specs),
    };
    let mut summary = Summary {
        pass: 0,
        fail: 0,
        hypothesis_violated: 0,
        error: 0,
    };
    for (r, _) in &timed {
        match r.outcome {
            Outcome::Pass => summary.pass += 1,
            Outcome::Fail { .. } => summary.fail += 1,
            Outcome::HypothesisViolated { .. } => summary.hypothesis_violated += 1,
            Outcome::Error { .. } => summary.error += 1,
        }
    }
    let timing = (cfg.arithmetic_mode == ArithmeticMode::Approximate).then(|| Timing {
        total_ms: start.elapsed().as_secs_f64() * 1e3,
        per_check_ms: timed.iter().map(|(r, ms)| (r.check.clone(), *ms)).collect(),
    });
    RunReport {
        schema_version: SCHEMA_VERSION,
        artifact: ARTIFACT.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        arithmetic_mode: cfg.arithmetic_mode,
        adversarial_library_version: ADVERSARIAL_LIBRARY_VERSION,
        instance,
        config: cfg.clone(),
        checks: timed.into_iter().map(|(r, _)| r).collect(),
        summary,
        timing,
    }
}

/// Replays a report's config, for the determinism contract.
pub fn replay(report: &RunReport) -> RunReport {
    run_suite(&report.config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(text: &str) -> Vec<String> {
        parse_config(text).unwrap_err().0.iter().map(ToString::to_string).collect()
    }

    #[test]
    fn minimal_config() {
        let cfg = parse_config(r#"{"instance": {"kind": "pointwise", "dim": 4, "n": 3}, "checks": ["neumann"]}"#)
            .unwrap();
        assert_eq!(cfg.checks.len(), 1);
        assert_eq!(cfg.checks[0].name, CheckName::Neumann);
        assert_eq!(cfg.arithmetic_mode, ArithmeticMode::Approximate);
    }

    #[test]
    fn unknown_check_is_named() {
        let e = errors(r#"{"instance": {"kind": "pointwise", "dim": 4, "n": 3}, "checks": ["speectrum"]}"#);
        assert_eq!(e.len(), 1);
        assert!(e[0].contains("speectrum"), "{e:?}");
    }

    #[test]
    fn dependent_anchors_cite_n1() {
        let e = errors(
            r#"{"instance": {"kind": "pointwise", "dim": 3,
                "anchors": [[{"re": 1}, {"re": 2}, {"re": 0}], [{"re": "2"}, {"re": "4"}, {"re": 0}]]}}"#,
        );
        assert_eq!(e.len(), 1, "{e:?}");
        assert!(e[0].contains("N1") && e[0].contains("dependent"), "{e:?}");
    }

    #[test]
    fn all_errors_reported() {
        let e = errors(
            r#"{"instance": {"kind": "pointwise", "dim": 4, "n": 3, "anchors": [[{"re": 1}, {"re": 0}, {"re": 0}, {"re": 0}]]},
                "checks": ["speectrum", {"name": "neumann", "q_max": 2}, "neumann"],
                "arithmetic_mode": "fuzzy", "colour": 1}"#,
        );
        let joined = e.join("\n");
        for needle in ["colour", "missing anchors", "speectrum", "q_max", "arithmetic_mode"] {
            assert!(joined.contains(needle), "{needle} not in {joined}");
        }
    }

    #[test]
    fn missing_n_and_anchors() {
        let e = errors(r#"{"instance": {"kind": "operator", "dim": 3}}"#);
        assert!(e[0].contains("missing anchors"), "{e:?}");
    }

    #[test]
    fn malformed_json() {
        assert!(errors("{").join("").contains("malformed JSON"));
    }

    #[test]
    fn applicability() {
        let e = errors(r#"{"instance": {"kind": "gram", "dim": 4, "n": 3}, "checks": ["neumann"]}"#);
        assert!(e[0].contains("does not apply"));
        let e = errors(r#"{"instance": {"kind": "pointwise", "dim": 3, "n": 2}, "checks": [{"name": "gkz_forward", "functional": [{"re": 1}]}]}"#);
        assert!(e[0].contains("coefficients"));
    }

    #[test]
    fn eq21_audit_records_counterexample() {
        let cfg = parse_config(
            r#"{"instance": {"kind": "series", "degree": 4, "n": 2, "variant": "eq21_max_product"},
                "checks": ["multiplicativity_audit"], "seed": 1, "samples": 20}"#,
        )
        .unwrap();
        let report = run_suite(&cfg);
        assert_eq!(report.exit_code(), 1);
        match &report.checks[0].outcome {
            Outcome::Fail { counterexample, .. } => assert_eq!(counterexample["pair"], "one_plus_t_squared"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn subcommand_groups() {
        let mut cfg = RunConfig::default_pointwise();
        cfg.select_group(Group::Audit).unwrap();
        assert_eq!(cfg.checks.len(), 3);
        let mut gram = parse_config(r#"{"instance": {"kind": "gram", "dim": 4, "n": 3}}"#).unwrap();
        assert!(gram.select_group(Group::Gkz).is_err());
        gram.select_group(Group::CheckAxioms).unwrap();
        assert_eq!(gram.checks.len(), 2);
    }

    #[test]
    fn exact_reports_repeat() {
        let mut cfg = RunConfig::default_pointwise();
        cfg.arithmetic_mode = ArithmeticMode::Exact;
        cfg.samples = 5;
        cfg.checks = vec![CheckSpec::new(CheckName::Neumann), CheckSpec::new(CheckName::GroupLaws)];
        let a = run_suite(&cfg).to_json_string();
        let b = run_suite(&cfg).to_json_string();
        assert_eq!(a, b);
        assert!(!a.contains("timing"));
    }
}
