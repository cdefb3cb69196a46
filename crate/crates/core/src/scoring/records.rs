use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ScoringError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Indicator {
    Safe,
    Lively,
    Wealthy,
    Beautiful,
    Boring,
    Depressing,
    LiveNearby,
    Walk,
    Cycle,
    Green,
}

impl Indicator {
    pub const ALL: [Indicator; 10] = [
        Indicator::Safe,
        Indicator::Lively,
        Indicator::Wealthy,
        Indicator::Beautiful,
        Indicator::Boring,
        Indicator::Depressing,
        Indicator::LiveNearby,
        Indicator::Walk,
        Indicator::Cycle,
        Indicator::Green,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Indicator::Safe => "safe",
            Indicator::Lively => "lively",
            Indicator::Wealthy => "wealthy",
            Indicator::Beautiful => "beautiful",
            Indicator::Boring => "boring",
            Indicator::Depressing => "depressing",
            Indicator::LiveNearby => "live_nearby",
            Indicator::Walk => "walk",
            Indicator::Cycle => "cycle",
            Indicator::Green => "green",
        }
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Indicator {
    type Err = String;

    /// Accepts `live_nearby`, `live nearby`, `live-nearby`, any case.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .map(|c| match c {
                ' ' | '-' => '_',
                c => c.to_ascii_lowercase(),
            })
            .collect();
        Indicator::ALL
            .into_iter()
            .find(|i| i.as_str() == norm)
            .ok_or_else(|| s.to_string())
    }
}

impl Serialize for Indicator {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Indicator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse()
            .map_err(|v| serde::de::Error::custom(format!("unknown indicator {v:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Choice {
    Left,
    Right,
    Equal,
}

impl Choice {
    pub fn flipped(self) -> Choice {
        match self {
            Choice::Left => Choice::Right,
            Choice::Right => Choice::Left,
            Choice::Equal => Choice::Equal,
        }
    }
}

impl FromStr for Choice {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" => Ok(Choice::Left),
            "right" => Ok(Choice::Right),
            "equal" => Ok(Choice::Equal),
            _ => Err(()),
        }
    }
}

/// Big Five inventory scores, each in `[1, 7]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BigFive {
    pub extraversion: f64,
    pub agreeableness: f64,
    pub conscientiousness: f64,
    pub neuroticism: f64,
    pub openness: f64,
}

const PERSONALITY_COLUMNS: [&str; 5] = [
    "extraversion",
    "agreeableness",
    "conscientiousness",
    "neuroticism",
    "openness",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRecord {
    pub participant_id: String,
    pub participant_country: String,
    pub participant_city: String,
    /// Every column outside the fixed schema, keyed by its (lower-cased) header.
    pub demographics: BTreeMap<String, String>,
    pub personality: Option<BigFive>,
    pub indicator: Indicator,
    pub left_image: String,
    pub right_image: String,
    /// City of each image when known (CSV columns `left_image_city` /
    /// `right_image_city`, or attached later from an image catalog).
    pub left_city: Option<String>,
    pub right_city: Option<String>,
    pub choice: Choice,
}

impl ComparisonRecord {
    /// The same comparison with sides swapped and the choice flipped.
    pub fn mirrored(&self) -> ComparisonRecord {
        ComparisonRecord {
            left_image: self.right_image.clone(),
            right_image: self.left_image.clone(),
            left_city: self.right_city.clone(),
            right_city: self.left_city.clone(),
            choice: self.choice.flipped(),
            ..self.clone()
        }
    }

    /// Fills missing image cities from a lookup.
    pub fn attach_cities(&mut self, cities: &HashMap<String, String>) {
        if self.left_city.is_none() {
            self.left_city = cities.get(&self.left_image).cloned();
        }
        if self.right_city.is_none() {
            self.right_city = cities.get(&self.right_image).cloned();
        }
    }
}

const PARTICIPANT_ID: &str = "participant_id";
const COUNTRY: &str = "country_of_residence";
const CITY: &str = "city_of_residence";
const INDICATOR: &str = "indicator";
const LEFT: &str = "left_image_id";
const RIGHT: &str = "right_image_id";
const CHOICE: &str = "choice";
const LEFT_CITY: &str = "left_image_city";
const RIGHT_CITY: &str = "right_image_city";

const REQUIRED: [&str; 6] = [PARTICIPANT_ID, COUNTRY, INDICATOR, LEFT, RIGHT, CHOICE];

pub fn parse_comparisons(path: &Path) -> Result<Vec<ComparisonRecord>, ScoringError> {
    read_comparisons(std::fs::File::open(path)?)
}

/// Parses comparison CSV. Column names are matched case-insensitively and in
/// any order; row numbers in errors count data rows from 1.
pub fn read_comparisons<R: Read>(reader: R) -> Result<Vec<ComparisonRecord>, ScoringError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let col = |name: &str| headers.iter().position(|h| h == name);

    let mut required = [0usize; 6];
    for (slot, name) in required.iter_mut().zip(REQUIRED) {
        *slot = col(name).ok_or_else(|| ScoringError::SchemaMismatch(name.to_string()))?;
    }
    let [pid, country, indicator, left, right, choice] = required;
    let city = col(CITY);
    let left_city = col(LEFT_CITY);
    let right_city = col(RIGHT_CITY);

    let personality_cols: Vec<Option<usize>> = PERSONALITY_COLUMNS.iter().map(|c| col(c)).collect();
    let personality_cols: Option<Vec<usize>> = if personality_cols.iter().all(Option::is_none) {
        None
    } else {
        let mut cols = Vec::with_capacity(5);
        for (c, name) in personality_cols.iter().zip(PERSONALITY_COLUMNS) {
            cols.push(c.ok_or_else(|| ScoringError::SchemaMismatch(name.to_string()))?);
        }
        Some(cols)
    };

    let mut fixed: Vec<usize> = required.to_vec();
    fixed.extend([city, left_city, right_city].into_iter().flatten());
    fixed.extend(personality_cols.iter().flatten());
    let extra: Vec<usize> = (0..headers.len()).filter(|i| !fixed.contains(i)).collect();

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let field = |c: usize| rec.get(c).unwrap_or("").to_string();
        let nonempty = |c: Option<usize>| c.map(field).filter(|s| !s.is_empty());

        let ind_raw = field(indicator);
        let indicator = ind_raw
            .parse()
            .map_err(|value| ScoringError::BadIndicator { value, row })?;
        let choice_raw = field(choice);
        let choice = choice_raw.parse().map_err(|_| ScoringError::BadChoice {
            value: choice_raw.clone(),
            row,
        })?;
        let (left_image, right_image) = (field(left), field(right));
        for (c, v) in [(left, &left_image), (right, &right_image)] {
            if v.is_empty() {
                return Err(ScoringError::BadValue {
                    column: headers[c].clone(),
                    value: String::new(),
                    row,
                });
            }
        }
        if left_image == right_image {
            return Err(ScoringError::SameImage { row });
        }

        let personality = match &personality_cols {
            None => None,
            Some(cols) => {
                let mut vals = [0f64; 5];
                for (v, &c) in vals.iter_mut().zip(cols) {
                    let raw = field(c);
                    *v = raw
                        .parse::<f64>()
                        .ok()
                        .filter(|x| (1.0..=7.0).contains(x))
                        .ok_or_else(|| ScoringError::BadValue {
                            column: headers[c].clone(),
                            value: raw.clone(),
                            row,
                        })?;
                }
                Some(BigFive {
                    extraversion: vals[0],
                    agreeableness: vals[1],
                    conscientiousness: vals[2],
                    neuroticism: vals[3],
                    openness: vals[4],
                })
            }
        };

        out.push(ComparisonRecord {
            participant_id: field(pid),
            participant_country: field(country),
            participant_city: city.map(field).unwrap_or_default(),
            demographics: extra.iter().map(|&c| (headers[c].clone(), field(c))).collect(),
            personality,
            indicator,
            left_image,
            right_image,
            left_city: nonempty(left_city),
            right_city: nonempty(right_city),
            choice,
        });
    }
    Ok(out)
}

/// A participant-country or image-city scope; `ALL` matches everything.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scope {
    All,
    Named(String),
}

impl Scope {
    pub fn matches(&self, value: &str) -> bool {
        match self {
            Scope::All => true,
            Scope::Named(name) => name.trim().eq_ignore_ascii_case(value.trim()),
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::All => f.write_str("ALL"),
            Scope::Named(n) => f.write_str(n),
        }
    }
}

impl From<&str> for Scope {
    fn from(s: &str) -> Self {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") {
            Scope::All
        } else {
            Scope::Named(s.to_string())
        }
    }
}

impl Serialize for Scope {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scope {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Scope::from(String::deserialize(d)?.as_str()))
    }
}

/// The rating pool a score is computed in.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupingContext {
    pub participant_scope: Scope,
    pub image_scope: Scope,
}

impl GroupingContext {
    pub fn new(participant_scope: impl Into<Scope>, image_scope: impl Into<Scope>) -> Self {
        GroupingContext {
            participant_scope: participant_scope.into(),
            image_scope: image_scope.into(),
        }
    }

    pub fn all() -> Self {
        GroupingContext {
            participant_scope: Scope::All,
            image_scope: Scope::All,
        }
    }

    pub fn admits(&self, record: &ComparisonRecord) -> bool {
        if !self.participant_scope.matches(&record.participant_country) {
            return false;
        }
        match &self.image_scope {
            Scope::All => true,
            scope => match (&record.left_city, &record.right_city) {
                (Some(l), Some(r)) => scope.matches(l) && scope.matches(r),
                _ => false,
            },
        }
    }
}

impl fmt::Display for GroupingContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.participant_scope, self.image_scope)
    }
}

impl FromStr for GroupingContext {
    type Err = ScoringError;

    /// Parses `"<participant scope>,<image scope>"`, e.g. `"Chile,Amsterdam"` or `"ALL,ALL"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(',') {
            Some((p, i)) if !p.trim().is_empty() && !i.trim().is_empty() && !i.contains(',') => {
                Ok(GroupingContext::new(p, i))
            }
            _ => Err(ScoringError::BadContext(s.to_string())),
        }
    }
}

/// Records for one indicator inside one rating pool. Pairs spanning two
/// cities survive only under an `ALL` image scope.
pub fn filter_by_context<'a>(
    records: &'a [ComparisonRecord],
    context: &GroupingContext,
    indicator: Indicator,
) -> Vec<&'a ComparisonRecord> {
    records
        .iter()
        .filter(|r| r.indicator == indicator && context.admits(r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "participant_id,gender,age_group,country_of_residence,extraversion,agreeableness,conscientiousness,neuroticism,openness,indicator,left_image_id,right_image_id,choice";

    #[test]
    fn table_snippet_rows() {
        let csv = format!(
            "{HEADER}\n\
             146,Female,40-49,Nigeria,3,4,5,2,2.5,safe,307,99,right\n\
             146,Female,40-49,Nigeria,3,4,5,2,2.5,green,88,284,equal\n\
             31,Male,21-29,Singapore,2.5,3,3,3,2.5,green,20,340,right\n"
        );
        let recs = read_comparisons(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 3);
        let r = &recs[1];
        assert_eq!(r.participant_id, "146");
        assert_eq!(r.indicator, Indicator::Green);
        assert_eq!((r.left_image.as_str(), r.right_image.as_str()), ("88", "284"));
        assert_eq!(r.choice, Choice::Equal);
        assert_eq!(r.demographics["gender"], "Female");
        assert_eq!(r.personality.unwrap().openness, 2.5);
        assert_eq!(recs[0].choice, Choice::Right);
    }

    #[test]
    fn header_only_is_empty() {
        assert!(read_comparisons(format!("{HEADER}\n").as_bytes())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn bad_choice_reports_row() {
        let csv = format!("{HEADER}\n1,F,20,Chile,1,1,1,1,1,green,1,2,left\n1,F,20,Chile,1,1,1,1,1,green,1,2,middle\n");
        match read_comparisons(csv.as_bytes()) {
            Err(ScoringError::BadChoice { value, row: 2 }) => assert_eq!(value, "middle"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(
            read_comparisons("participant_id,indicator\n".as_bytes()),
            Err(ScoringError::SchemaMismatch(c)) if c == "country_of_residence"
        ));
        let partial = "participant_id,country_of_residence,indicator,left_image_id,right_image_id,choice,openness\n";
        assert!(matches!(
            read_comparisons(partial.as_bytes()),
            Err(ScoringError::SchemaMismatch(c)) if c == "extraversion"
        ));
        let same = "participant_id,country_of_residence,indicator,left_image_id,right_image_id,choice\n1,Chile,green,5,5,left\n";
        assert!(matches!(
            read_comparisons(same.as_bytes()),
            Err(ScoringError::SameImage { row: 1 })
        ));
        let ind = "participant_id,country_of_residence,indicator,left_image_id,right_image_id,choice\n1,Chile,smelly,5,6,left\n";
        assert!(matches!(
            read_comparisons(ind.as_bytes()),
            Err(ScoringError::BadIndicator { .. })
        ));
    }

    #[test]
    fn columns_in_any_order_and_extras_preserved() {
        let csv = "CHOICE,right_image_id,left_image_id,Indicator,country_of_residence,participant_id,left_image_city,right_image_city,income\n\
                   left,2,1,Live Nearby,USA,p9,Abuja,Singapore,high\n";
        let r = &read_comparisons(csv.as_bytes()).unwrap()[0];
        assert_eq!(r.indicator, Indicator::LiveNearby);
        assert_eq!(r.choice, Choice::Left);
        assert_eq!(r.left_city.as_deref(), Some("Abuja"));
        assert_eq!(r.demographics.get("income").map(String::as_str), Some("high"));
        assert!(r.personality.is_none());
    }

    fn rec(country: &str, l: (&str, &str), r: (&str, &str)) -> ComparisonRecord {
        ComparisonRecord {
            participant_id: "p".into(),
            participant_country: country.into(),
            participant_city: String::new(),
            demographics: BTreeMap::new(),
            personality: None,
            indicator: Indicator::Green,
            left_image: l.0.into(),
            right_image: r.0.into(),
            left_city: Some(l.1.into()),
            right_city: Some(r.1.into()),
            choice: Choice::Left,
        }
    }

    #[test]
    fn context_filtering() {
        let recs = vec![
            rec("Chile", ("1", "Amsterdam"), ("2", "Amsterdam")),
            rec("Chile", ("1", "Amsterdam"), ("3", "Abuja")),
            rec("USA", ("1", "Amsterdam"), ("2", "Amsterdam")),
        ];
        let ctx: GroupingContext = "Chile,Amsterdam".parse().unwrap();
        let kept = filter_by_context(&recs, &ctx, Indicator::Green);
        assert_eq!(kept, vec![&recs[0]]);
        let chile_all = GroupingContext::new("Chile", "ALL");
        assert_eq!(filter_by_context(&recs, &chile_all, Indicator::Green).len(), 2);
        assert_eq!(
            filter_by_context(&recs, &GroupingContext::all(), Indicator::Green).len(),
            3
        );
        assert!(filter_by_context(&recs, &GroupingContext::all(), Indicator::Safe).is_empty());
    }

    #[test]
    fn context_parsing() {
        let c: GroupingContext = "ALL,all".parse().unwrap();
        assert_eq!(c, GroupingContext::all());
        assert_eq!(c.to_string(), "ALL,ALL");
        assert!("Chile".parse::<GroupingContext>().is_err());
        assert!("a,b,c".parse::<GroupingContext>().is_err());
    }
}
