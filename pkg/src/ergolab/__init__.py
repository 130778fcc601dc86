"""ergolab: exact-arithmetic laboratory for experimental ergodic theory."""

from .errors import (
    BadMarginals,
    BadWeights,
    BudgetExceeded,
    ConfigError,
    DimensionMismatch,
    DivergentMass,
    EmptyRecipe,
    ErgolabError,
    NotErgodic,
    NotMixing,
    OverlapViolation,
    ShiftTooLarge,
    StageOrder,
    UndefinedOrbit,
    UnknownPreset,
)
from .rank_one import (
    Construction,
    CorrelationBound,
    LevelSet,
    SpacerProfile,
    TowerView,
    build,
    construction_from_text,
    correlation,
    mass,
    measure,
    mixing_scan,
    preset,
    refine,
    shift,
    single_level_pairs,
    scan_weak_limit,
    weak_limit_deviation,
)

__version__ = "0.1.0"
