//! Scenario-file ingestion and pipeline orchestration.
//!
//! The scenario format is a line-oriented, human-editable text file with
//! a version header, `[section]` blocks, and `key: value` lines; see
//! `docs/scenario-format.md` in the repository root for the full schema.
//! Loading validates every table; `run` executes the resolution loop and
//! renders either a human-readable table or structured JSON.

use serde::Serialize;
use thiserror::Error;

use crate::evidence::{
    build_coverage_bel, build_location_bel, build_movement_bel, build_separation_bel, Argument,
    BandRow, ContourRow, EvidenceError, LocationCoordinate, ToulminInfo,
};
use crate::frame::Point;
use crate::resolver::{
    resolve, DiscreditingFactor, PresenceBelief, Resolution, ResolveOptions, ResolverError,
    Test, TraceStep,
};
use crate::route::{select_route, DangerModel, Route, RouteError};

pub const FORMAT_HEADER: &str = "threatcorr-scenario v1";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("validation error in {field}: {message}")]
    Validation { field: String, message: String },
}

impl From<EvidenceError> for ScenarioError {
    fn from(err: EvidenceError) -> Self {
        match err {
            EvidenceError::BadTable { table, reason } => ScenarioError::Validation {
                field: table,
                message: reason,
            },
            EvidenceError::Mass(e) => ScenarioError::Validation {
                field: "mass function".into(),
                message: e.to_string(),
            },
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Resolver(#[from] ResolverError),
    #[error(transparent)]
    Route(#[from] RouteError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationBlock {
    pub id: String,
    pub center: Point,
    pub rows: Vec<ContourRow>,
    pub toulmin: ToulminInfo,
    pub firmness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MovementBlock {
    pub id: String,
    pub diagonal_mass: f64,
    pub rows: Vec<BandRow>,
    pub toulmin: ToulminInfo,
    pub firmness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageBlock {
    pub id: String,
    pub same_mass: f64,
    pub toulmin: ToulminInfo,
    pub firmness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationBlock {
    pub id: String,
    pub rows: Vec<BandRow>,
    pub toulmin: ToulminInfo,
    pub firmness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorBlock {
    pub id: String,
    pub target: String,
    pub initial: PresenceBelief,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestBlock {
    pub id: String,
    pub factor: String,
    pub cost: f64,
    pub possible_outcomes: Vec<PresenceBelief>,
    pub scripted_outcome: PresenceBelief,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parameters {
    pub tau: f64,
    pub min_benefit_cost_ratio: f64,
    pub lethal_radius: f64,
    pub sample_step: f64,
}

impl Default for Parameters {
    fn default() -> Self {
        Self {
            tau: 0.25,
            min_benefit_cost_ratio: 0.0,
            lethal_radius: 10.0,
            sample_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteBlock {
    pub id: String,
    pub waypoints: Vec<Point>,
}

/// Parsed and validated scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub name: String,
    pub location_first: LocationBlock,
    pub location_second: LocationBlock,
    pub movement: MovementBlock,
    pub coverage: CoverageBlock,
    pub separation: SeparationBlock,
    pub factors: Vec<FactorBlock>,
    pub tests: Vec<TestBlock>,
    pub parameters: Parameters,
    pub routes: Vec<RouteBlock>,
}

fn parse_err(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse {
        line,
        message: message.into(),
    }
}

fn validation_err(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

fn parse_real(token: &str, line: usize) -> Result<f64, ScenarioError> {
    if token == "inf" {
        return Ok(f64::INFINITY);
    }
    token
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("expected a number, got {token:?}")))
}

fn parse_reals(value: &str, n: usize, line: usize) -> Result<Vec<f64>, ScenarioError> {
    let tokens: Vec<&str> = value.split_whitespace().collect();
    if tokens.len() != n {
        return Err(parse_err(
            line,
            format!("expected {n} numbers, got {}", tokens.len()),
        ));
    }
    tokens.iter().map(|t| parse_real(t, line)).collect()
}

fn parse_presence(value: &str, line: usize) -> Result<PresenceBelief, ScenarioError> {
    let v = parse_reals(value, 2, line)?;
    PresenceBelief::new(v[0], v[1])
        .map_err(|e| parse_err(line, e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
enum SectionHeader {
    Scenario,
    Location(LocationCoordinate),
    Movement,
    Coverage,
    Separation,
    Factor(String),
    Test(String),
    Parameters,
    Route(String),
}

fn parse_section_header(inner: &str, line: usize) -> Result<SectionHeader, ScenarioError> {
    let mut parts = inner.split_whitespace();
    let kind = parts.next().unwrap_or("");
    let arg = parts.next();
    if parts.next().is_some() {
        return Err(parse_err(line, format!("too many tokens in section [{inner}]")));
    }
    match (kind, arg) {
        ("scenario", None) => Ok(SectionHeader::Scenario),
        ("location", Some("first")) => Ok(SectionHeader::Location(LocationCoordinate::First)),
        ("location", Some("second")) => Ok(SectionHeader::Location(LocationCoordinate::Second)),
        ("movement", None) => Ok(SectionHeader::Movement),
        ("coverage", None) => Ok(SectionHeader::Coverage),
        ("separation", None) => Ok(SectionHeader::Separation),
        ("factor", Some(id)) => Ok(SectionHeader::Factor(id.into())),
        ("test", Some(id)) => Ok(SectionHeader::Test(id.into())),
        ("parameters", None) => Ok(SectionHeader::Parameters),
        ("route", Some(id)) => Ok(SectionHeader::Route(id.into())),
        _ => Err(parse_err(line, format!("unknown section [{inner}]"))),
    }
}

#[derive(Default)]
struct PendingLocation {
    id: Option<String>,
    center: Option<Point>,
    rows: Vec<ContourRow>,
    toulmin: ToulminInfo,
    firmness: f64,
}

struct Builder {
    name: Option<String>,
    location_first: Option<LocationBlock>,
    location_second: Option<LocationBlock>,
    movement: Option<MovementBlock>,
    coverage: Option<CoverageBlock>,
    separation: Option<SeparationBlock>,
    factors: Vec<FactorBlock>,
    tests: Vec<TestBlock>,
    parameters: Parameters,
    routes: Vec<RouteBlock>,
}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile, ScenarioError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((i, raw)) => {
                let line = strip_comment(raw);
                if line.is_empty() {
                    continue;
                }
                break (i + 1, line.to_string());
            }
            None => return Err(parse_err(1, "empty file")),
        }
    };
    if header.1 != FORMAT_HEADER {
        return Err(parse_err(
            header.0,
            format!("expected header {FORMAT_HEADER:?}, got {:?}", header.1),
        ));
    }

    let mut builder = Builder {
        name: None,
        location_first: None,
        location_second: None,
        movement: None,
        coverage: None,
        separation: None,
        factors: Vec::new(),
        tests: Vec::new(),
        parameters: Parameters::default(),
        routes: Vec::new(),
    };

    let mut section: Option<(usize, SectionHeader)> = None;
    let mut body: Vec<(usize, String, String)> = Vec::new();

    let flush = |section: &Option<(usize, SectionHeader)>,
                     body: &mut Vec<(usize, String, String)>,
                     builder: &mut Builder|
     -> Result<(), ScenarioError> {
        if let Some((line, header)) = section {
            finish_section(*line, header.clone(), std::mem::take(body), builder)?;
        }
        Ok(())
    };

    for (i, raw) in lines {
        let line_no = i + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line_no, "unterminated section header"))?;
            flush(&section, &mut body, &mut builder)?;
            section = Some((line_no, parse_section_header(inner, line_no)?));
        } else {
            let Some((key, value)) = line.split_once(':') else {
                return Err(parse_err(line_no, format!("expected `key: value`, got {line:?}")));
            };
            if section.is_none() {
                return Err(parse_err(line_no, "key/value line outside any section"));
            }
            body.push((line_no, key.trim().to_string(), value.trim().to_string()));
        }
    }
    flush(&section, &mut body, &mut builder)?;

    let scenario = ScenarioFile {
        name: builder
            .name
            .ok_or_else(|| validation_err("scenario", "missing [scenario] name"))?,
        location_first: builder
            .location_first
            .ok_or_else(|| validation_err("location first", "missing section"))?,
        location_second: builder
            .location_second
            .ok_or_else(|| validation_err("location second", "missing section"))?,
        movement: builder
            .movement
            .ok_or_else(|| validation_err("movement", "missing section"))?,
        coverage: builder
            .coverage
            .ok_or_else(|| validation_err("coverage", "missing section"))?,
        separation: builder
            .separation
            .ok_or_else(|| validation_err("separation", "missing section"))?,
        factors: builder.factors,
        tests: builder.tests,
        parameters: builder.parameters,
        routes: builder.routes,
    };
    scenario.validate()?;
    Ok(scenario)
}

fn strip_comment(raw: &str) -> &str {
    match raw.find('#') {
        Some(idx) => raw[..idx].trim(),
        None => raw.trim(),
    }
}

fn finish_section(
    section_line: usize,
    header: SectionHeader,
    body: Vec<(usize, String, String)>,
    builder: &mut Builder,
) -> Result<(), ScenarioError> {
    match header {
        SectionHeader::Scenario => {
            for (line, key, value) in body {
                match key.as_str() {
                    "name" => builder.name = Some(value),
                    _ => return Err(parse_err(line, format!("unknown key {key:?} in [scenario]"))),
                }
            }
        }
        SectionHeader::Location(coordinate) => {
            let mut pending = PendingLocation {
                firmness: 1.0,
                ..Default::default()
            };
            for (line, key, value) in body {
                match key.as_str() {
                    "id" => pending.id = Some(value),
                    "center" => {
                        let v = parse_reals(&value, 2, line)?;
                        pending.center = Some(Point::new(v[0], v[1]));
                    }
                    "contour" => {
                        let v = parse_reals(&value, 2, line)?;
                        pending.rows.push(ContourRow {
                            radius: v[0],
                            mass: v[1],
                        });
                    }
                    "grounds" => pending.toulmin.grounds = value,
                    "warrant" => pending.toulmin.warrant = value,
                    "backing" => pending.toulmin.backing = value,
                    "firmness" => pending.firmness = parse_real(&value, line)?,
                    _ => return Err(parse_err(line, format!("unknown key {key:?} in [location]"))),
                }
            }
            let block = LocationBlock {
                id: pending
                    .id
                    .ok_or_else(|| parse_err(section_line, "location section missing id"))?,
                center: pending
                    .center
                    .ok_or_else(|| parse_err(section_line, "location section missing center"))?,
                rows: pending.rows,
                toulmin: pending.toulmin,
                firmness: pending.firmness,
            };
            match coordinate {
                LocationCoordinate::First => builder.location_first = Some(block),
                LocationCoordinate::Second => builder.location_second = Some(block),
            }
        }
        SectionHeader::Movement => {
            let mut id = None;
            let mut diagonal = None;
            let mut rows = Vec::new();
            let mut toulmin = ToulminInfo::default();
            let mut firmness = 1.0;
            for (line, key, value) in body {
                match key.as_str() {
                    "id" => id = Some(value),
                    "diagonal" => diagonal = Some(parse_real(&value, line)?),
                    "band" => {
                        let v = parse_reals(&value, 3, line)?;
                        rows.push(BandRow {
                            lo: v[0],
                            hi: v[1],
                            mass: v[2],
                        });
                    }
                    "grounds" => toulmin.grounds = value,
                    "warrant" => toulmin.warrant = value,
                    "backing" => toulmin.backing = value,
                    "firmness" => firmness = parse_real(&value, line)?,
                    _ => return Err(parse_err(line, format!("unknown key {key:?} in [movement]"))),
                }
            }
            builder.movement = Some(MovementBlock {
                id: id.ok_or_else(|| parse_err(section_line, "movement section missing id"))?,
                diagonal_mass: diagonal
                    .ok_or_else(|| parse_err(section_line, "movement section missing diagonal"))?,
                rows,
                toulmin,
                firmness,
            });
        }
        SectionHeader::Coverage => {
            let mut id = None;
            let mut same = None;
            let mut toulmin = ToulminInfo::default();
            let mut firmness = 1.0;
            for (line, key, value) in body {
                match key.as_str() {
                    "id" => id = Some(value),
                    "same" => same = Some(parse_real(&value, line)?),
                    "grounds" => toulmin.grounds = value,
                    "warrant" => toulmin.warrant = value,
                    "backing" => toulmin.backing = value,
                    "firmness" => firmness = parse_real(&value, line)?,
                    _ => return Err(parse_err(line, format!("unknown key {key:?} in [coverage]"))),
                }
            }
            builder.coverage = Some(CoverageBlock {
                id: id.ok_or_else(|| parse_err(section_line, "coverage section missing id"))?,
                same_mass: same
                    .ok_or_else(|| parse_err(section_line, "coverage section missing same"))?,
                toulmin,
                firmness,
            });
        }
        SectionHeader::Separation => {
            let mut id = None;
            let mut rows = Vec::new();
            let mut toulmin = ToulminInfo::default();
            let mut firmness = 1.0;
            for (line, key, value) in body {
                match key.as_str() {
                    "id" => id = Some(value),
                    "band" => {
                        let v = parse_reals(&value, 3, line)?;
                        rows.push(BandRow {
                            lo: v[0],
                            hi: v[1],
                            mass: v[2],
                        });
                    }
                    "grounds" => toulmin.grounds = value,
                    "warrant" => toulmin.warrant = value,
                    "backing" => toulmin.backing = value,
                    "firmness" => firmness = parse_real(&value, line)?,
                    _ => {
                        return Err(parse_err(line, format!("unknown key {key:?} in [separation]")))
                    }
                }
            }
            builder.separation = Some(SeparationBlock {
                id: id.ok_or_else(|| parse_err(section_line, "separation section missing id"))?,
                rows,
                toulmin,
                firmness,
            });
        }
        SectionHeader::Factor(id) => {
            let mut target = None;
            let mut initial = PresenceBelief::vacuous();
            for (line, key, value) in body {
                match key.as_str() {
                    "target" => target = Some(value),
                    "initial" => initial = parse_presence(&value, line)?,
                    _ => return Err(parse_err(line, format!("unknown key {key:?} in [factor]"))),
                }
            }
            builder.factors.push(FactorBlock {
                id,
                target: target
                    .ok_or_else(|| parse_err(section_line, "factor section missing target"))?,
                initial,
            });
        }
        SectionHeader::Test(id) => {
            let mut factor = None;
            let mut cost = None;
            let mut outcomes = Vec::new();
            let mut scripted = None;
            for (line, key, value) in body {
                match key.as_str() {
                    "factor" => factor = Some(value),
                    "cost" => cost = Some(parse_real(&value, line)?),
                    "outcome" => outcomes.push(parse_presence(&value, line)?),
                    "scripted" => scripted = Some(parse_presence(&value, line)?),
                    _ => return Err(parse_err(line, format!("unknown key {key:?} in [test]"))),
                }
            }
            builder.tests.push(TestBlock {
                id,
                factor: factor
                    .ok_or_else(|| parse_err(section_line, "test section missing factor"))?,
                cost: cost.ok_or_else(|| parse_err(section_line, "test section missing cost"))?,
                possible_outcomes: outcomes,
                scripted_outcome: scripted
                    .ok_or_else(|| parse_err(section_line, "test section missing scripted"))?,
            });
        }
        SectionHeader::Parameters => {
            for (line, key, value) in body {
                match key.as_str() {
                    "tau" => builder.parameters.tau = parse_real(&value, line)?,
                    "min-benefit-cost-ratio" => {
                        builder.parameters.min_benefit_cost_ratio = parse_real(&value, line)?
                    }
                    "lethal-radius" => builder.parameters.lethal_radius = parse_real(&value, line)?,
                    "sample-step" => builder.parameters.sample_step = parse_real(&value, line)?,
                    _ => {
                        return Err(parse_err(line, format!("unknown key {key:?} in [parameters]")))
                    }
                }
            }
        }
        SectionHeader::Route(id) => {
            let mut waypoints = Vec::new();
            for (line, key, value) in body {
                match key.as_str() {
                    "waypoint" => {
                        let v = parse_reals(&value, 2, line)?;
                        waypoints.push(Point::new(v[0], v[1]));
                    }
                    _ => return Err(parse_err(line, format!("unknown key {key:?} in [route]"))),
                }
            }
            builder.routes.push(RouteBlock { id, waypoints });
        }
    }
    Ok(())
}

impl ScenarioFile {
    /// Semantic validation beyond what parsing catches: table rules,
    /// id resolution, parameter ranges.
    fn validate(&self) -> Result<(), ScenarioError> {
        // Building the arguments validates every table.
        let arguments = self.build_arguments()?;
        let argument_ids: Vec<&str> = arguments.iter().map(|a| a.id.as_str()).collect();
        {
            let mut seen = std::collections::BTreeSet::new();
            for id in &argument_ids {
                if !seen.insert(*id) {
                    return Err(validation_err(*id, "duplicate argument id"));
                }
            }
        }
        for factor in &self.factors {
            if !argument_ids.contains(&factor.target.as_str()) {
                return Err(validation_err(
                    format!("factor {}", factor.id),
                    format!("unknown target argument {:?}", factor.target),
                ));
            }
        }
        for test in &self.tests {
            if !self.factors.iter().any(|f| f.id == test.factor) {
                return Err(validation_err(
                    format!("test {}", test.id),
                    format!("unknown factor {:?}", test.factor),
                ));
            }
            if !(test.cost.is_finite() && test.cost > 0.0) {
                return Err(validation_err(
                    format!("test {}", test.id),
                    format!("cost {} must be positive", test.cost),
                ));
            }
            let matches_scripted = test.possible_outcomes.iter().any(|o| {
                (o.present - test.scripted_outcome.present).abs() < 1e-9
                    && (o.absent - test.scripted_outcome.absent).abs() < 1e-9
            });
            if !matches_scripted {
                return Err(validation_err(
                    format!("test {}", test.id),
                    "scripted outcome is not among the possible outcomes",
                ));
            }
        }
        let p = &self.parameters;
        if !(0.0..1.0).contains(&p.tau) {
            return Err(validation_err("parameters", format!("tau {} outside [0, 1)", p.tau)));
        }
        if p.min_benefit_cost_ratio < 0.0 {
            return Err(validation_err(
                "parameters",
                "min-benefit-cost-ratio must be non-negative",
            ));
        }
        if !(p.lethal_radius > 0.0) || !(p.sample_step > 0.0) {
            return Err(validation_err(
                "parameters",
                "lethal-radius and sample-step must be positive",
            ));
        }
        for route in &self.routes {
            Route::new(route.id.clone(), route.waypoints.clone()).map_err(|e| {
                validation_err(format!("route {}", route.id), e.to_string())
            })?;
        }
        Ok(())
    }

    /// Builds the five arguments with rebuttal links filled in.
    pub fn build_arguments(&self) -> Result<Vec<Argument>, ScenarioError> {
        let mut arguments = vec![
            {
                let mut a = build_location_bel(
                    &self.location_first.id,
                    LocationCoordinate::First,
                    self.location_first.center,
                    &self.location_first.rows,
                )?;
                a.toulmin = self.location_first.toulmin.clone();
                a.firmness = self.location_first.firmness;
                a
            },
            {
                let mut a = build_location_bel(
                    &self.location_second.id,
                    LocationCoordinate::Second,
                    self.location_second.center,
                    &self.location_second.rows,
                )?;
                a.toulmin = self.location_second.toulmin.clone();
                a.firmness = self.location_second.firmness;
                a
            },
            {
                let mut a = build_movement_bel(
                    &self.movement.id,
                    self.movement.diagonal_mass,
                    &self.movement.rows,
                )?;
                a.toulmin = self.movement.toulmin.clone();
                a.firmness = self.movement.firmness;
                a
            },
            {
                let mut a = build_coverage_bel(&self.coverage.id, self.coverage.same_mass)?;
                a.toulmin = self.coverage.toulmin.clone();
                a.firmness = self.coverage.firmness;
                a
            },
            {
                let mut a = build_separation_bel(&self.separation.id, &self.separation.rows)?;
                a.toulmin = self.separation.toulmin.clone();
                a.firmness = self.separation.firmness;
                a
            },
        ];
        for factor in &self.factors {
            if let Some(arg) = arguments.iter_mut().find(|a| a.id == factor.target) {
                arg.rebuttals.push(factor.id.clone());
            }
        }
        Ok(arguments)
    }

    /// Builds the discrediting factors with their tests attached.
    pub fn build_factors(&self) -> Vec<DiscreditingFactor> {
        self.factors
            .iter()
            .map(|block| {
                let mut factor = DiscreditingFactor::new(&block.id, &block.target);
                factor.belief = block.initial;
                factor.tests = self
                    .tests
                    .iter()
                    .filter(|t| t.factor == block.id)
                    .map(|t| Test {
                        id: t.id.clone(),
                        cost: t.cost,
                        possible_outcomes: t.possible_outcomes.clone(),
                        scripted_outcome: t.scripted_outcome,
                    })
                    .collect();
                factor
            })
            .collect()
    }

    pub fn build_routes(&self) -> Vec<Route> {
        self.routes
            .iter()
            .map(|r| Route::new(r.id.clone(), r.waypoints.clone()).expect("validated route"))
            .collect()
    }

    pub fn danger_model(&self) -> DangerModel {
        DangerModel {
            lethal_radius: self.parameters.lethal_radius,
            sample_step: self.parameters.sample_step,
        }
    }

    /// Canonical serialization. Parsing the output reproduces this value
    /// exactly; comments and incidental whitespace are not preserved.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let push = |out: &mut String, s: &str| {
            out.push_str(s);
            out.push('\n');
        };
        push(&mut out, FORMAT_HEADER);
        push(&mut out, "");
        push(&mut out, "[scenario]");
        push(&mut out, &format!("name: {}", self.name));

        let emit_meta = |out: &mut String, toulmin: &ToulminInfo, firmness: f64| {
            if !toulmin.grounds.is_empty() {
                push(out, &format!("grounds: {}", toulmin.grounds));
            }
            if !toulmin.warrant.is_empty() {
                push(out, &format!("warrant: {}", toulmin.warrant));
            }
            if !toulmin.backing.is_empty() {
                push(out, &format!("backing: {}", toulmin.backing));
            }
            if firmness != 1.0 {
                push(out, &format!("firmness: {}", fmt_real(firmness)));
            }
        };

        for (header, block) in [
            ("[location first]", &self.location_first),
            ("[location second]", &self.location_second),
        ] {
            push(&mut out, "");
            push(&mut out, header);
            push(&mut out, &format!("id: {}", block.id));
            push(
                &mut out,
                &format!(
                    "center: {} {}",
                    fmt_real(block.center.x),
                    fmt_real(block.center.y)
                ),
            );
            emit_meta(&mut out, &block.toulmin, block.firmness);
            for row in &block.rows {
                push(
                    &mut out,
                    &format!("contour: {} {}", fmt_real(row.radius), fmt_real(row.mass)),
                );
            }
        }

        push(&mut out, "");
        push(&mut out, "[movement]");
        push(&mut out, &format!("id: {}", self.movement.id));
        push(
            &mut out,
            &format!("diagonal: {}", fmt_real(self.movement.diagonal_mass)),
        );
        emit_meta(&mut out, &self.movement.toulmin, self.movement.firmness);
        for row in &self.movement.rows {
            push(
                &mut out,
                &format!(
                    "band: {} {} {}",
                    fmt_real(row.lo),
                    fmt_real(row.hi),
                    fmt_real(row.mass)
                ),
            );
        }

        push(&mut out, "");
        push(&mut out, "[coverage]");
        push(&mut out, &format!("id: {}", self.coverage.id));
        push(
            &mut out,
            &format!("same: {}", fmt_real(self.coverage.same_mass)),
        );
        emit_meta(&mut out, &self.coverage.toulmin, self.coverage.firmness);

        push(&mut out, "");
        push(&mut out, "[separation]");
        push(&mut out, &format!("id: {}", self.separation.id));
        emit_meta(&mut out, &self.separation.toulmin, self.separation.firmness);
        for row in &self.separation.rows {
            push(
                &mut out,
                &format!(
                    "band: {} {} {}",
                    fmt_real(row.lo),
                    fmt_real(row.hi),
                    fmt_real(row.mass)
                ),
            );
        }

        for factor in &self.factors {
            push(&mut out, "");
            push(&mut out, &format!("[factor {}]", factor.id));
            push(&mut out, &format!("target: {}", factor.target));
            if !factor.initial.is_vacuous() {
                push(
                    &mut out,
                    &format!(
                        "initial: {} {}",
                        fmt_real(factor.initial.present),
                        fmt_real(factor.initial.absent)
                    ),
                );
            }
        }

        for test in &self.tests {
            push(&mut out, "");
            push(&mut out, &format!("[test {}]", test.id));
            push(&mut out, &format!("factor: {}", test.factor));
            push(&mut out, &format!("cost: {}", fmt_real(test.cost)));
            for outcome in &test.possible_outcomes {
                push(
                    &mut out,
                    &format!(
                        "outcome: {} {}",
                        fmt_real(outcome.present),
                        fmt_real(outcome.absent)
                    ),
                );
            }
            push(
                &mut out,
                &format!(
                    "scripted: {} {}",
                    fmt_real(test.scripted_outcome.present),
                    fmt_real(test.scripted_outcome.absent)
                ),
            );
        }

        push(&mut out, "");
        push(&mut out, "[parameters]");
        push(&mut out, &format!("tau: {}", fmt_real(self.parameters.tau)));
        push(
            &mut out,
            &format!(
                "min-benefit-cost-ratio: {}",
                fmt_real(self.parameters.min_benefit_cost_ratio)
            ),
        );
        push(
            &mut out,
            &format!("lethal-radius: {}", fmt_real(self.parameters.lethal_radius)),
        );
        push(
            &mut out,
            &format!("sample-step: {}", fmt_real(self.parameters.sample_step)),
        );

        for route in &self.routes {
            push(&mut out, "");
            push(&mut out, &format!("[route {}]", route.id));
            for wp in &route.waypoints {
                push(
                    &mut out,
                    &format!("waypoint: {} {}", fmt_real(wp.x), fmt_real(wp.y)),
                );
            }
        }
        out
    }
}

fn fmt_real(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

/// Reads and validates a scenario from disk.
pub fn load_scenario(path: &std::path::Path) -> Result<ScenarioFile, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Parse {
        line: 0,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_scenario(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Structured,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Overrides the scenario's tau when set.
    pub threshold: Option<f64>,
    pub format: OutputFormat,
    /// Include per-step conflict attribution in table output.
    pub trace: bool,
    /// Skip pass II entirely, forcing across-the-board discounting.
    pub no_tests: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            threshold: None,
            format: OutputFormat::Table,
            trace: false,
            no_tests: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RouteChoice {
    pub id: String,
    pub danger: f64,
}

/// Full pipeline result: the resolution state plus the rendered report.
#[derive(Debug)]
pub struct RunOutput {
    pub resolution: Resolution,
    pub route: Option<RouteChoice>,
    pub rendered: String,
}

#[derive(Serialize)]
struct StructuredReport<'a> {
    format: &'static str,
    scenario: &'a str,
    tau: f64,
    steps: &'a [TraceStep],
    final_report: &'a crate::resolver::CoarseReport,
    final_discount_rates: &'a [(String, f64)],
    route: &'a Option<RouteChoice>,
}

/// Executes the three-pass pipeline on a loaded scenario and renders the
/// report. Deterministic: identical input and options yield byte-equal
/// output.
pub fn run(scenario: &ScenarioFile, options: &RunOptions) -> Result<RunOutput, RunError> {
    let arguments = scenario.build_arguments()?;
    let factors = scenario.build_factors();
    let tau = options.threshold.unwrap_or(scenario.parameters.tau);
    let resolution = resolve(
        arguments,
        factors,
        ResolveOptions {
            tau,
            min_benefit_cost_ratio: scenario.parameters.min_benefit_cost_ratio,
            tests_enabled: !options.no_tests,
        },
    )?;
    let routes = scenario.build_routes();
    let route = if routes.is_empty() {
        None
    } else {
        let model = scenario.danger_model();
        let (chosen, danger) = select_route(
            &routes,
            &resolution.arguments,
            &resolution.trace.final_report,
            &model,
        )?;
        Some(RouteChoice {
            id: chosen.id.clone(),
            danger,
        })
    };

    let rendered = match options.format {
        OutputFormat::Table => render_table(scenario, tau, &resolution, &route, options.trace),
        OutputFormat::Structured => {
            let report = StructuredReport {
                format: "threatcorr-report v1",
                scenario: &scenario.name,
                tau,
                steps: &resolution.trace.steps,
                final_report: &resolution.trace.final_report,
                final_discount_rates: &resolution.trace.final_rates,
                route: &route,
            };
            let mut text =
                serde_json::to_string_pretty(&report).expect("report serialization cannot fail");
            text.push('\n');
            text
        }
    };
    Ok(RunOutput {
        resolution,
        route,
        rendered,
    })
}

fn render_report_lines(out: &mut String, report: &crate::resolver::CoarseReport) {
    out.push_str(&format!(
        "  Bel(U) = {:.3}    Pl(U) = {:.3}\n",
        report.bel_unchanged, report.pl_unchanged
    ));
    out.push_str(&format!(
        "  Bel(M) = {:.3}    Pl(M) = {:.3}\n",
        report.bel_moved, report.pl_moved
    ));
    out.push_str(&format!(
        "  Bel(D) = {:.3}    Pl(D) = {:.3}\n",
        report.bel_different, report.pl_different
    ));
    out.push_str(&format!("  Uncommitted = {:.3}\n", report.uncommitted));
    out.push_str(&format!(
        "  Conflict (mass assigned to null set) = {:.3}\n",
        report.conflict
    ));
}

fn render_attribution(out: &mut String, attribution: &crate::resolver::ConflictAttribution) {
    out.push_str("  Conflict attribution by type:");
    for (i, mass) in attribution.mass_by_type.iter().enumerate() {
        out.push_str(&format!(" {}={:.3}", i + 1, mass));
    }
    out.push('\n');
}

fn render_table(
    scenario: &ScenarioFile,
    tau: f64,
    resolution: &Resolution,
    route: &Option<RouteChoice>,
    trace: bool,
) -> String {
    let mut out = String::new();
    out.push_str(&format!("Scenario: {}\n", scenario.name));
    out.push_str(&format!("Conflict threshold (tau): {:.3}\n", tau));
    for step in &resolution.trace.steps {
        out.push('\n');
        match step {
            TraceStep::Combined { report } => {
                out.push_str("Pass I: combined belief function (classification of second threat)\n");
                render_report_lines(&mut out, report);
            }
            TraceStep::TestPerformed {
                attribution,
                selection,
                outcome,
                new_discount_rate,
                report,
            } => {
                out.push_str(&format!(
                    "Pass II: test {} of factor {} (benefit {:.3}, cost {:.3})\n",
                    selection.test_id, selection.factor_id, selection.benefit, selection.cost
                ));
                if trace {
                    render_attribution(&mut out, attribution);
                }
                out.push_str(&format!(
                    "  Outcome: present {:.3}, absent {:.3} -> discount rate {:.3}\n",
                    outcome.present, outcome.absent, new_discount_rate
                ));
                render_report_lines(&mut out, report);
            }
            TraceStep::GlobalDiscount {
                attribution,
                rates,
                report,
            } => {
                out.push_str("Pass III: across-the-board discounting\n");
                if trace {
                    render_attribution(&mut out, attribution);
                }
                let rendered_rates: Vec<String> = rates
                    .iter()
                    .map(|(id, rate)| format!("{id} {rate:.3}"))
                    .collect();
                out.push_str(&format!("  Rates applied: {}\n", rendered_rates.join(", ")));
                render_report_lines(&mut out, report);
            }
        }
    }
    out.push('\n');
    out.push_str("Final classification\n");
    render_report_lines(&mut out, &resolution.trace.final_report);
    let rates: Vec<String> = resolution
        .trace
        .final_rates
        .iter()
        .map(|(id, rate)| format!("{id} {rate:.3}"))
        .collect();
    out.push_str(&format!("  Discount rates: {}\n", rates.join(", ")));
    if let Some(route) = route {
        out.push('\n');
        out.push_str(&format!(
            "Route selected: {} (worst-case danger {:.3})\n",
            route.id, route.danger
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
threatcorr-scenario v1

[scenario]
name: minimal

[location first]
id: bel1
center: 20 20
contour: 4.5 0.5
contour: 9.5 0.5

[location second]
id: bel2
center: 80 80
contour: 9 1

[movement]
id: bel3
diagonal: 0.4
band: 10 13 0.6

[coverage]
id: bel4
same: 0.7

[separation]
id: bel5
band: 60 inf 1

[parameters]
tau: 0.25
";

    #[test]
    fn parses_minimal_scenario() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.name, "minimal");
        assert_eq!(s.location_first.rows.len(), 2);
        assert_eq!(s.separation.rows[0].hi, f64::INFINITY);
        assert_eq!(s.parameters.tau, 0.25);
        let args = s.build_arguments().unwrap();
        assert_eq!(args.len(), 5);
    }

    #[test]
    fn round_trip_is_stable() {
        let s = parse_scenario(MINIMAL).unwrap();
        let text = s.serialize();
        let s2 = parse_scenario(&text).unwrap();
        assert_eq!(s, s2);
        assert_eq!(text, s2.serialize());
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = MINIMAL.replace("tau: 0.25", "tau: 0.25  # threshold\n\n# trailing comment");
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.parameters.tau, 0.25);
    }

    #[test]
    fn bad_mass_sum_is_a_validation_error_naming_the_table() {
        let text = MINIMAL.replace("contour: 9 1", "contour: 9 1.05");
        match parse_scenario(&text) {
            Err(ScenarioError::Validation { field, .. }) => assert_eq!(field, "bel2"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_factor_target_is_a_validation_error() {
        let text = format!("{MINIMAL}\n[factor f1]\ntarget: nosuch\n");
        assert!(matches!(
            parse_scenario(&text),
            Err(ScenarioError::Validation { .. })
        ));
    }

    #[test]
    fn malformed_lines_are_parse_errors_with_positions() {
        let text = MINIMAL.replace("center: 20 20", "center: twenty twenty");
        match parse_scenario(&text) {
            Err(ScenarioError::Parse { line, .. }) => assert!(line > 0),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            parse_scenario("not a scenario"),
            Err(ScenarioError::Parse { .. })
        ));
    }

    #[test]
    fn scripted_outcome_must_be_possible() {
        let text = format!(
            "{MINIMAL}\n[factor f1]\ntarget: bel2\n\n[test t1]\nfactor: f1\ncost: 1\noutcome: 0.4 0\nscripted: 0.5 0\n"
        );
        assert!(matches!(
            parse_scenario(&text),
            Err(ScenarioError::Validation { .. })
        ));
    }

    #[test]
    fn run_is_deterministic() {
        let s = parse_scenario(MINIMAL).unwrap();
        let options = RunOptions::default();
        let a = run(&s, &options).unwrap();
        let b = run(&s, &options).unwrap();
        assert_eq!(a.rendered, b.rendered);
        let structured = RunOptions {
            format: OutputFormat::Structured,
            ..Default::default()
        };
        let c = run(&s, &structured).unwrap();
        let d = run(&s, &structured).unwrap();
        assert_eq!(c.rendered, d.rendered);
    }
}
