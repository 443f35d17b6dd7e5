"""Dynamic data pruning from mean batch losses.

Per-sample importance scores are conditional EMAs over the mean losses of the
batches each sample participated in; pruning policies, a desk-scale trainer,
and the filtering/spectral analysis used to validate the scoring all live
here.
"""

from .filters import (
    Decomposition,
    FilterSpec,
    ObservationSequence,
    convolution_score,
    convolution_scores,
    decompose_all,
    decompose_batch,
    decompose_run,
    frequency_response_mag,
    impulse_response,
)
from .handler import ScoreHandler
from .models import (
    Dataset,
    DatasetSpec,
    DivergenceError,
    ModelSpec,
    build_model,
    make_synthetic_dataset,
    mean_batch_loss,
    sgd_step,
)
from .pruning import (
    ActiveSet,
    CycleSchedule,
    NoPrune,
    PrunePolicy,
    Sampler,
    ThresholdSoftPrune,
    WindowSelect,
    pruned_percent,
    sampler_for,
    select_active_set,
)
from .runlog import LogRecord, ReplayResult, parse_log, replay, serialize_record, write_log
from .scores import (
    BatchRecord,
    EmaConfig,
    ScoresView,
    ScoreTable,
    apply_batch,
    ema_update,
    scores_snapshot,
)
from .spectral import (
    MeanPsd,
    PsdEstimate,
    SeparationReport,
    WelchConfig,
    mean_psd,
    separation_report,
    welch_psd,
)
from .trainer import (
    RunMetrics,
    SweepRow,
    TrainConfig,
    alpha_sweep,
    no_ema_config,
    run_experiment,
    run_plain_sgd,
)

__version__ = "0.1.0"
