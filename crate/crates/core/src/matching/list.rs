use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub index_i: usize,
    pub index_j: usize,
    pub distance: f64,
    pub second_distance: Option<f64>,
}

impl Match {
    pub fn pair(&self) -> (usize, usize) {
        (self.index_i, self.index_j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    IToJ,
    JToI,
    Both,
    Either,
}

impl Direction {
    pub fn is_directed(self) -> bool {
        matches!(self, Direction::IToJ | Direction::JToI)
    }

    pub fn tag(self) -> &'static str {
        match self {
            Direction::IToJ => "i->j",
            Direction::JToI => "j->i",
            Direction::Both => "both",
            Direction::Either => "either",
        }
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "i->j" => Ok(Direction::IToJ),
            "j->i" => Ok(Direction::JToI),
            "both" => Ok(Direction::Both),
            "either" => Ok(Direction::Either),
            other => Err(format!("unknown direction tag {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetrizeMode {
    /// Intersection: mutual nearest neighbours.
    Both,
    /// Union of both directed lists.
    Either,
}

/// One processing step recorded in a match list's provenance.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterStep {
    NearestNeighbor(Direction),
    Ratio(f64),
    Fginn { ratio: f64, min_geom_dist: f64 },
    Symmetrize(SymmetrizeMode),
    Distance(f64),
    /// Steps applied by an external producer, kept verbatim.
    External(String),
}

impl fmt::Display for FilterStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterStep::NearestNeighbor(d) => write!(f, "nn({})", d.tag()),
            FilterStep::Ratio(r) => write!(f, "ratio({r})"),
            FilterStep::Fginn { ratio, min_geom_dist } => write!(f, "fginn({ratio},{min_geom_dist})"),
            FilterStep::Symmetrize(SymmetrizeMode::Both) => write!(f, "symmetrize(both)"),
            FilterStep::Symmetrize(SymmetrizeMode::Either) => write!(f, "symmetrize(either)"),
            FilterStep::Distance(d) => write!(f, "distance({d})"),
            FilterStep::External(s) => write!(f, "{s}"),
        }
    }
}

impl FilterStep {
    /// Parses one step; unknown forms are kept as [`FilterStep::External`].
    pub fn parse(s: &str) -> FilterStep {
        let known = (|| {
            let (name, rest) = s.split_once('(')?;
            let args = rest.strip_suffix(')')?;
            let num = |a: &str| a.parse::<f64>().ok();
            match name {
                "nn" => args.parse().ok().map(FilterStep::NearestNeighbor),
                "ratio" => num(args).map(FilterStep::Ratio),
                "fginn" => {
                    let (r, g) = args.split_once(',')?;
                    Some(FilterStep::Fginn { ratio: num(r)?, min_geom_dist: num(g)? })
                }
                "symmetrize" => match args {
                    "both" => Some(FilterStep::Symmetrize(SymmetrizeMode::Both)),
                    "either" => Some(FilterStep::Symmetrize(SymmetrizeMode::Either)),
                    _ => None,
                },
                "distance" => num(args).map(FilterStep::Distance),
                _ => None,
            }
        })();
        let known = known.filter(|step| step.to_string() == s);
        known.unwrap_or_else(|| FilterStep::External(s.to_string()))
    }
}

/// Tentative correspondences between image `i` and image `j`.
///
/// Entries always store `(index_i, index_j)` regardless of direction.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchList {
    pub entries: Vec<Match>,
    pub direction: Direction,
    pub provenance: Vec<FilterStep>,
}

impl MatchList {
    pub fn new(entries: Vec<Match>, direction: Direction, provenance: Vec<FilterStep>) -> Self {
        Self { entries, direction, provenance }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries.iter().map(Match::pair)
    }

    /// Provenance rendered as `step;step;...`.
    pub fn provenance_string(&self) -> String {
        self.provenance.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
    }

    pub fn parse_provenance(s: &str) -> Vec<FilterStep> {
        if s.is_empty() {
            return Vec::new();
        }
        s.split(';').map(FilterStep::parse).collect()
    }

    pub(crate) fn with_step(&self, entries: Vec<Match>, direction: Direction, step: FilterStep) -> Self {
        let mut provenance = self.provenance.clone();
        provenance.push(step);
        Self { entries, direction, provenance }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_round_trip() {
        let steps = vec![
            FilterStep::NearestNeighbor(Direction::IToJ),
            FilterStep::Ratio(0.8),
            FilterStep::Fginn { ratio: 0.85, min_geom_dist: 10.0 },
            FilterStep::Symmetrize(SymmetrizeMode::Either),
            FilterStep::Distance(f64::INFINITY),
            FilterStep::External("cne(v2)".into()),
        ];
        let list = MatchList::new(Vec::new(), Direction::Either, steps.clone());
        assert_eq!(MatchList::parse_provenance(&list.provenance_string()), steps);
        assert_eq!(FilterStep::parse("ratio(0.80)"), FilterStep::External("ratio(0.80)".into()));
    }
}
