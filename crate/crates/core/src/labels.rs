//! Ground-truth demographics and the seed/validation split.
//!
//! Label CSV header: `user_id,age_years,gender,role`. `age_years` and
//! `gender` (`M`/`F`) may be empty; `role` is `seed`, `validation` or
//! `unlabeled`.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    #[serde(rename = "M")]
    Male,
    #[serde(rename = "F")]
    Female,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "M",
            Gender::Female => "F",
        }
    }
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "M" | "m" => Ok(Gender::Male),
            "F" | "f" => Ok(Gender::Female),
            other => Err(format!("unknown gender {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Seed,
    Validation,
    Unlabeled,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Seed => "seed",
            Role::Validation => "validation",
            Role::Unlabeled => "unlabeled",
        }
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "seed" => Ok(Role::Seed),
            "validation" => Ok(Role::Validation),
            "unlabeled" => Ok(Role::Unlabeled),
            other => Err(format!("unknown role {other:?}")),
        }
    }
}

/// Lower bounds of every age category but the first. `[25, 35, 50]` gives
/// the four groups `<25, 25-34, 35-49, >=50`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgeBoundaries(Vec<u32>);

impl Default for AgeBoundaries {
    fn default() -> Self {
        AgeBoundaries(vec![25, 35, 50])
    }
}

impl AgeBoundaries {
    pub fn new(bounds: Vec<u32>) -> Result<Self> {
        if bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("age boundaries must be strictly increasing"));
        }
        Ok(AgeBoundaries(bounds))
    }

    pub fn categories(&self) -> usize {
        self.0.len() + 1
    }

    pub fn category(&self, age: u32) -> usize {
        self.0.iter().take_while(|&&b| age >= b).count()
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.categories());
        let mut lower: Option<u32> = None;
        for &b in &self.0 {
            out.push(match lower {
                None => format!("<{b}"),
                Some(l) => format!("{l}-{}", b - 1),
            });
            lower = Some(b);
        }
        out.push(match lower {
            None => "all".to_owned(),
            Some(l) => format!(">={l}"),
        });
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserLabel {
    pub user_id: String,
    pub age: Option<u32>,
    pub gender: Option<Gender>,
    pub role: Role,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabelStore {
    users: Vec<UserLabel>,
    index: HashMap<String, usize>,
    boundaries: AgeBoundaries,
}

impl LabelStore {
    pub fn new(boundaries: AgeBoundaries) -> Self {
        LabelStore {
            users: Vec::new(),
            index: HashMap::new(),
            boundaries,
        }
    }

    /// Add a user. Seeds and validation users must carry at least one label.
    pub fn insert(&mut self, label: UserLabel) -> Result<()> {
        if label.role != Role::Unlabeled && label.age.is_none() && label.gender.is_none() {
            return Err(Error::invalid(format!(
                "user {} has role {} but no age or gender",
                label.user_id,
                label.role.as_str()
            )));
        }
        if self.index.contains_key(&label.user_id) {
            return Err(Error::invalid(format!("duplicate user {}", label.user_id)));
        }
        self.index.insert(label.user_id.clone(), self.users.len());
        self.users.push(label);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn boundaries(&self) -> &AgeBoundaries {
        &self.boundaries
    }

    pub fn categories(&self) -> usize {
        self.boundaries.categories()
    }

    pub fn iter(&self) -> impl Iterator<Item = &UserLabel> {
        self.users.iter()
    }

    pub fn get(&self, user: &str) -> Option<&UserLabel> {
        self.index.get(user).map(|&i| &self.users[i])
    }

    pub fn age_category(&self, user: &str) -> Option<usize> {
        self.get(user)?.age.map(|a| self.boundaries.category(a))
    }

    pub fn with_role(&self, role: Role) -> impl Iterator<Item = &UserLabel> {
        self.users.iter().filter(move |u| u.role == role)
    }

    /// Fraction of users with role `role` (and a known age) in each category.
    pub fn category_distribution(&self, role: Role) -> Vec<f64> {
        let mut counts = vec![0usize; self.categories()];
        for u in self.with_role(role) {
            if let Some(a) = u.age {
                counts[self.boundaries.category(a)] += 1;
            }
        }
        let total: usize = counts.iter().sum();
        counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect()
    }

    pub fn read_csv<R: Read>(r: R, boundaries: AgeBoundaries) -> Result<LabelStore> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let mut store = LabelStore::new(boundaries);
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.len() != 4 {
                return Err(Error::row(line, format!("expected 4 fields, found {}", rec.len())));
            }
            let age = match &rec[1] {
                "" => None,
                s => Some(s.parse::<u32>().map_err(|e| Error::row(line, format!("bad age {s:?}: {e}")))?),
            };
            let gender = match &rec[2] {
                "" => None,
                s => Some(s.parse().map_err(|e: String| Error::row(line, e))?),
            };
            let role = rec[3].parse().map_err(|e: String| Error::row(line, e))?;
            store
                .insert(UserLabel {
                    user_id: rec[0].to_owned(),
                    age,
                    gender,
                    role,
                })
                .map_err(|e| Error::row(line, e.to_string()))?;
        }
        Ok(store)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["user_id", "age_years", "gender", "role"])?;
        for u in &self.users {
            wtr.write_record([
                u.user_id.as_str(),
                &u.age.map(|a| a.to_string()).unwrap_or_default(),
                u.gender.map(Gender::as_str).unwrap_or(""),
                u.role.as_str(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}
