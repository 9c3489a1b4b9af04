//! JSON input schemas: measures, rewards, concave functions, point lists.
//!
//! All numbers travel as strings ("1/2", "0.25", "3"); exact mode parses
//! them without rounding. Table rewards admit the literals `"inf"` and
//! `"-inf"`.

use serde::Deserialize;

use mot_core::integrals::ConcaveFunction;
use mot_core::measures::DiscreteMeasure;
use mot_core::mot::{RewardSpec, RewardValue};
use mot_core::scalar::{RefOps, Scalar};

use crate::CliError;

#[derive(Debug, Deserialize)]
pub struct MeasureFile {
    pub atoms: Vec<AtomEntry>,
    #[serde(default)]
    pub mode: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct AtomEntry {
    pub x: String,
    pub w: String,
}

fn scalar<S: Scalar>(text: &str, field: &str) -> Result<S, CliError>
where
    for<'a> &'a S: RefOps<S>,
{
    S::parse_str(text)
        .ok_or_else(|| CliError::Invalid(format!("cannot parse {field} value {text:?}")))
}

/// Parses a measure file's JSON text into a [`DiscreteMeasure`].
pub fn parse_measure<S: Scalar>(text: &str) -> Result<DiscreteMeasure<S>, CliError>
where
    for<'a> &'a S: RefOps<S>,
{
    let file: MeasureFile = serde_json::from_str(text)
        .map_err(|e| CliError::Invalid(format!("measure file: {e}")))?;
    let mut atoms = Vec::with_capacity(file.atoms.len());
    for entry in &file.atoms {
        atoms.push((scalar(&entry.x, "x")?, scalar(&entry.w, "w")?));
    }
    DiscreteMeasure::new(atoms).map_err(CliError::from)
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RewardFile {
    SquareDiff,
    AbsDiff,
    IndicatorOffdiag,
    OffblockSqrt,
    PenalizedBand {
        delta: String,
        penalty: String,
    },
    Table {
        #[serde(default)]
        default: Option<String>,
        entries: Vec<TableEntry>,
    },
}

#[derive(Debug, Deserialize)]
pub struct TableEntry {
    pub x: String,
    pub y: String,
    pub f: String,
}

fn reward_value<S: Scalar>(text: &str) -> Result<RewardValue<S>, CliError>
where
    for<'a> &'a S: RefOps<S>,
{
    match text {
        "inf" => Ok(RewardValue::PlusInf),
        "-inf" => Ok(RewardValue::MinusInf),
        other => Ok(RewardValue::Finite(scalar(other, "f")?)),
    }
}

pub fn parse_reward<S: Scalar>(text: &str) -> Result<RewardSpec<S>, CliError>
where
    for<'a> &'a S: RefOps<S>,
{
    let file: RewardFile = serde_json::from_str(text)
        .map_err(|e| CliError::Invalid(format!("reward file: {e}")))?;
    Ok(match file {
        RewardFile::SquareDiff => RewardSpec::SquareDiff,
        RewardFile::AbsDiff => RewardSpec::AbsDiff,
        RewardFile::IndicatorOffdiag => RewardSpec::IndicatorOffdiag,
        RewardFile::OffblockSqrt => RewardSpec::OffblockSqrt,
        RewardFile::PenalizedBand { delta, penalty } => RewardSpec::PenalizedBand {
            delta: scalar(&delta, "delta")?,
            penalty: scalar(&penalty, "penalty")?,
        },
        RewardFile::Table { default, entries } => {
            let default = match default {
                Some(text) => reward_value(&text)?,
                None => RewardValue::Finite(S::zero()),
            };
            let mut parsed = Vec::with_capacity(entries.len());
            for e in &entries {
                parsed.push((
                    (scalar(&e.x, "x")?, scalar(&e.y, "y")?),
                    reward_value(&e.f)?,
                ));
            }
            RewardSpec::table(default, parsed)
        }
    })
}

#[derive(Debug, Deserialize)]
pub struct PointsFile {
    pub points: Vec<PointEntry>,
}

#[derive(Debug, Deserialize)]
pub struct PointEntry {
    pub x: String,
    pub y: String,
}

pub fn parse_points<S: Scalar>(text: &str) -> Result<Vec<(S, S)>, CliError>
where
    for<'a> &'a S: RefOps<S>,
{
    let file: PointsFile = serde_json::from_str(text)
        .map_err(|e| CliError::Invalid(format!("points file: {e}")))?;
    file.points
        .iter()
        .map(|p| Ok((scalar(&p.x, "x")?, scalar(&p.y, "y")?)))
        .collect()
}

#[derive(Debug, Deserialize)]
pub struct ChiFile {
    pub breakpoints: Vec<BreakpointEntry>,
    #[serde(default)]
    pub left_jump: Option<String>,
    #[serde(default)]
    pub right_jump: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct BreakpointEntry {
    pub x: String,
    pub v: String,
}

pub fn parse_chi<S: Scalar>(text: &str) -> Result<ConcaveFunction<S>, CliError>
where
    for<'a> &'a S: RefOps<S>,
{
    let file: ChiFile = serde_json::from_str(text)
        .map_err(|e| CliError::Invalid(format!("chi file: {e}")))?;
    let mut breakpoints = Vec::with_capacity(file.breakpoints.len());
    for b in &file.breakpoints {
        breakpoints.push((scalar(&b.x, "x")?, scalar(&b.v, "v")?));
    }
    let left = match &file.left_jump {
        Some(t) => scalar(t, "left_jump")?,
        None => S::zero(),
    };
    let right = match &file.right_jump {
        Some(t) => scalar(t, "right_jump")?,
        None => S::zero(),
    };
    ConcaveFunction::new(breakpoints, left, right)
        .map_err(|e| CliError::Invalid(e.to_string()))
}
