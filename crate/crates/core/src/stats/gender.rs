use serde::{Deserialize, Serialize};

use crate::graph::Contact;
use crate::labels::{Gender, LabelStore};

/// Who calls whom by gender. `p_x_given_y` is the probability that a call
/// originating from gender `y` reaches gender `x`; a row is `None` when no
/// counted call originates from that gender.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenderConditionals {
    pub calls_mm: u64,
    pub calls_mf: u64,
    pub calls_fm: u64,
    pub calls_ff: u64,
    pub p_f_given_m: Option<f64>,
    pub p_m_given_m: Option<f64>,
    pub p_f_given_f: Option<f64>,
    pub p_m_given_f: Option<f64>,
    /// Population shares among gender-labeled users.
    pub p_m: Option<f64>,
    pub p_f: Option<f64>,
}

/// Counts directed calls whose endpoints are both gender-labeled. The first
/// endpoint of each contact is the originator.
pub fn gender_conditionals<'a, C, I>(calls: I, labels: &LabelStore) -> GenderConditionals
where
    C: Contact + 'a,
    I: IntoIterator<Item = &'a C>,
{
    let mut counts = [[0u64; 2]; 2];
    for c in calls {
        let (a, b) = c.endpoints();
        let ga = labels.get(a).and_then(|u| u.gender);
        let gb = labels.get(b).and_then(|u| u.gender);
        if let (Some(ga), Some(gb)) = (ga, gb) {
            counts[slot(ga)][slot(gb)] += 1;
        }
    }
    let row = |g: usize| {
        let total = counts[g][0] + counts[g][1];
        if total == 0 {
            (None, None)
        } else {
            let to_m = counts[g][0] as f64 / total as f64;
            (Some(to_m), Some(counts[g][1] as f64 / total as f64))
        }
    };
    let (p_m_given_m, p_f_given_m) = row(0);
    let (p_m_given_f, p_f_given_f) = row(1);

    let mut pop = [0u64; 2];
    for u in labels.iter() {
        if let Some(g) = u.gender {
            pop[slot(g)] += 1;
        }
    }
    let labeled = pop[0] + pop[1];
    let share = |c: u64| (labeled > 0).then(|| c as f64 / labeled as f64);

    GenderConditionals {
        calls_mm: counts[0][0],
        calls_mf: counts[0][1],
        calls_fm: counts[1][0],
        calls_ff: counts[1][1],
        p_f_given_m,
        p_m_given_m,
        p_f_given_f,
        p_m_given_f,
        p_m: share(pop[0]),
        p_f: share(pop[1]),
    }
}

fn slot(g: Gender) -> usize {
    match g {
        Gender::Male => 0,
        Gender::Female => 1,
    }
}
