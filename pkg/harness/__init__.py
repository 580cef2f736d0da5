# Harness Package
from .settings import (
    # Configuration
    ExperimentConfig,
    SlackConfig,
    parse_config,
    load_config,
)

from .level_sets import (
    LevelProfile,
    level_profile,
    superlevel_lower_bound,
)

from .experiments import (
    # Experiments
    ExperimentResult,
    EXPERIMENT_RUNNERS,
    expand_family,
    comparison_ball,
)

from .reporting import (
    render_csv,
    write_csv,
    write_plot_data,
)

from .runner import (
    exit_code,
    run_experiment,
    summarize,
)
