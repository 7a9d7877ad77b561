use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::InstructionError;
use crate::envgen::{EnvKind, InstructionClass};

const SHUFFLE_SEED: u64 = 0x1a57_2024;

const NAV_VERBS: &[&str] = &[
    "Choose", "Take", "Prefer", "Opt for", "Go through", "Aim for", "Stick to", "Navigate through",
    "Favor", "Use",
];
const NARROW_OBJECTS: &[&str] = &[
    "the narrower passages", "narrow paths", "the tighter gaps", "the smaller openings",
    "the more confined spaces", "the less wide pathways", "slim corridors", "the narrow routes",
];
const WIDE_OBJECTS: &[&str] = &[
    "the wider passages", "wide paths", "the broader gaps", "the larger openings",
    "the more open spaces", "the less narrow pathways", "spacious corridors", "the wide routes",
];
const SHORT_VERBS: &[&str] = &[
    "Find", "Take", "Choose", "Follow", "Go along", "Pick", "Use", "Head along", "Plan", "Aim for",
];
const SHORT_OBJECTS: &[&str] = &[
    "the shortest route", "the quickest path", "the most direct way", "the fastest route",
    "a direct line", "the shortest path", "the most efficient route", "the quickest way",
];
const NAV_ENDINGS: &[&str] = &["", " on your way", " to reach the goal", " whenever possible", " for your journey"];

const ROBOT_SUBJECTS: &[&str] = &[
    "Instruct the {r} robot", "Tell the {r} robot", "Have the {r} robot", "Ask the {r} robot",
    "Command the {r} robot", "Direct the {r} robot", "Get the {r} robot", "Order the {r} robot",
];
const ROBOT_VERBS: &[&str] = &[
    "to move to the destination", "to head to the goal", "to travel to the target",
    "to go to the destination", "to make its way to the goal", "to proceed to the target",
];
const CAREFUL: &[&str] = &["cautiously", "carefully", "with care", "safely", "slowly and carefully"];
const RAPID: &[&str] = &["rapidly", "quickly", "as fast as possible", "without delay", "in a hurry"];

/// Every sentence of the template grid for one class, canonical phrasing first.
pub fn template_grid(cls: InstructionClass) -> Vec<String> {
    use InstructionClass::*;
    let mut out = match cls {
        PreferNarrow | PreferWide | Shortest => {
            let (verbs, objects) = match cls {
                PreferNarrow => (NAV_VERBS, NARROW_OBJECTS),
                PreferWide => (NAV_VERBS, WIDE_OBJECTS),
                _ => (SHORT_VERBS, SHORT_OBJECTS),
            };
            let mut v = Vec::new();
            for verb in verbs {
                for object in objects {
                    for ending in NAV_ENDINGS {
                        v.push(format!("{verb} {object}{ending}."));
                    }
                }
            }
            v
        }
        WheeledCareful | WheeledRapid | LeggedCareful | LeggedRapid => {
            let robot = if matches!(cls, WheeledCareful | WheeledRapid) {
                "wheeled"
            } else {
                "legged"
            };
            let manners = if matches!(cls, WheeledCareful | LeggedCareful) {
                CAREFUL
            } else {
                RAPID
            };
            let mut v = Vec::new();
            for subject in ROBOT_SUBJECTS {
                for verb in ROBOT_VERBS {
                    for manner in manners {
                        v.push(format!("{} {verb} {manner}.", subject.replace("{r}", robot)));
                    }
                }
            }
            v
        }
    };
    let mut rest = out.split_off(1);
    rest.shuffle(&mut ChaCha8Rng::seed_from_u64(SHUFFLE_SEED ^ cls as u64));
    out.extend(rest);
    out
}

/// Expands the template grids into `count` distinct sentences with classes
/// balanced within one, interleaved class by class.
pub fn generate_instructions(
    kind: EnvKind,
    count: usize,
) -> Result<Vec<(String, InstructionClass)>, InstructionError> {
    let classes = InstructionClass::for_kind(kind);
    if count < classes.len() {
        return Err(InstructionError::InvalidCount {
            count,
            min: classes.len(),
        });
    }
    let grids: Vec<Vec<String>> = classes.iter().map(|&c| template_grid(c)).collect();
    let per_class: Vec<usize> = (0..classes.len())
        .map(|i| count / classes.len() + usize::from(i < count % classes.len()))
        .collect();
    for (i, grid) in grids.iter().enumerate() {
        if grid.len() < per_class[i] {
            return Err(InstructionError::TemplateExhausted {
                cls: classes[i],
                available: grid.len(),
                requested: per_class[i],
            });
        }
    }
    let mut out = Vec::with_capacity(count);
    let rounds = per_class.iter().copied().max().unwrap_or(0);
    for r in 0..rounds {
        for (i, &cls) in classes.iter().enumerate() {
            if r < per_class[i] {
                out.push((grids[i][r].clone(), cls));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, HashSet};

    use super::*;

    fn class_counts(v: &[(String, InstructionClass)]) -> BTreeMap<InstructionClass, usize> {
        let mut m = BTreeMap::new();
        for (_, c) in v {
            *m.entry(*c).or_insert(0) += 1;
        }
        m
    }

    #[test]
    fn synthetic_132_balanced() {
        let v = generate_instructions(EnvKind::Synthetic, 132).unwrap();
        assert_eq!(v.len(), 132);
        let counts = class_counts(&v);
        assert_eq!(counts.len(), 3);
        assert!(counts.values().all(|&n| n == 44));
    }

    #[test]
    fn indoor_90_contains_canonical_sentence() {
        let v = generate_instructions(EnvKind::Indoor, 90).unwrap();
        assert_eq!(v.len(), 90);
        let counts = class_counts(&v);
        assert_eq!(counts.len(), 4);
        assert!(counts.values().all(|&n| n == 22 || n == 23));
        assert!(v.contains(&(
            "Instruct the wheeled robot to move to the destination cautiously.".to_owned(),
            InstructionClass::WheeledCareful
        )));
    }

    #[test]
    fn minimum_is_one_per_class() {
        let v = generate_instructions(EnvKind::Synthetic, 3).unwrap();
        let classes: HashSet<_> = v.iter().map(|(_, c)| *c).collect();
        assert_eq!(classes.len(), 3);
        assert!(generate_instructions(EnvKind::Synthetic, 2).is_err());
    }

    #[test]
    fn sentences_are_distinct_and_deterministic() {
        for kind in [EnvKind::Synthetic, EnvKind::Indoor] {
            let a = generate_instructions(kind, 300).unwrap();
            let b = generate_instructions(kind, 300).unwrap();
            assert_eq!(a, b);
            let texts: HashSet<_> = a.iter().map(|(t, _)| t).collect();
            assert_eq!(texts.len(), a.len());
        }
    }

    #[test]
    fn exhausting_the_grid_fails() {
        let grid = template_grid(InstructionClass::Shortest).len();
        let err = generate_instructions(EnvKind::Synthetic, 3 * grid + 3).unwrap_err();
        assert!(matches!(err, InstructionError::TemplateExhausted { .. }));
    }
}
