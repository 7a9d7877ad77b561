use super::{CellClass, CostMap, EnvError, EnvironmentMap, InstructionClass, PassageWidth};

/// Expert rule table. Walls always cost 1; passages or steps are added
/// depending on the instruction class; everything else costs 0.
pub fn gt_cost_map(env: &EnvironmentMap, cls: InstructionClass) -> Result<CostMap, EnvError> {
    use InstructionClass::*;
    if cls.kind() != env.kind() {
        return Err(EnvError::ClassKindMismatch {
            cls,
            kind: env.kind(),
        });
    }
    let (w, h) = (env.width(), env.height());
    let mut values: Vec<f64> = env
        .cells()
        .iter()
        .map(|&c| {
            let high = match (cls, c) {
                (_, CellClass::Wall) => true,
                (WheeledCareful, CellClass::StepLow | CellClass::StepHigh) => true,
                (LeggedCareful, CellClass::StepHigh) => true,
                _ => false,
            };
            if high {
                1.0
            } else {
                0.0
            }
        })
        .collect();

    let avoided = match cls {
        PreferWide => Some(PassageWidth::Narrow),
        PreferNarrow => Some(PassageWidth::Wide),
        _ => None,
    };
    if let Some(avoided) = avoided {
        for p in env.passages().iter().filter(|p| p.width_class == avoided) {
            p.rect.cells().for_each(|(x, y)| values[y * w + x] = 1.0);
        }
    }
    CostMap::new(w, h, values)
}
