"""Joint subcarrier and power allocation for radar-communication coexistence.

A base station serves single-antenna users over OFDM subcarriers while a
co-channel OFDM radar shares the band. The toolkit maximizes the communication
sum rate subject to a radar SINR floor by relaxing the exclusive-assignment
constraint into a penalized continuous program and solving it with an
alternating fractional-programming ascent, then rounding back to an exclusive
assignment. A brute-force oracle, seeded sweep experiments, and a CLI wrap the
solver for validation and figure reproduction.
"""

from .scenario import (
    ChannelSet,
    ConfigError,
    PathlossModel,
    RadarGeometry,
    ScenarioConfig,
    TargetArea,
    db_to_linear,
    dbm_to_watts,
    generate_channels,
    linear_to_db,
    watts_to_dbm,
)
from .model import (
    Assignment,
    CoefficientBundle,
    PowerMatrix,
    binary_rate,
    extract_assignment,
    interference_matrix,
    proposition1_inequality,
    radar_sinr,
    rates_per_user,
    relaxed_rate,
    sum_relaxed_rate,
)
from .fp_solver import (
    AuxiliaryMatrix,
    Constraints,
    Infeasible,
    SolveResult,
    SolverSettings,
    find_feasible,
    max_radar_sinr,
    project,
    q_gradient,
    q_value,
    solve,
    solve_subproblem,
    update_y,
)
from .oracle import BudgetExceeded, OracleSettings, brute_force, random_toy_instance, toy_config
from .experiments import (
    SweepRow,
    SweepSpec,
    no_radar_baseline,
    run_sweep,
    rows_to_csv,
    write_sweep_csv,
)

__version__ = "0.1.0"
