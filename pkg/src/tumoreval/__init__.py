"""Brain-tumor segmentation metrics and overall-survival regression.

Subpackages and modules:

* :mod:`tumoreval.volgrid` - label volumes, NIfTI-1 and sidecar I/O
* :mod:`tumoreval.metrics` - Dice, sensitivity, specificity and HD95
* :mod:`tumoreval.features` - survival tables and volumetric features
* :mod:`tumoreval.models` - the regression model zoo
* :mod:`tumoreval.crossval` - seeded k-fold evaluation and report tables
* :mod:`tumoreval.cli` - the ``tumoreval`` command
"""

__version__ = "0.1.0"

from .errors import TumorEvalError  # noqa: E402
from .volgrid import LabelVolume, Region, load_volume, region_mask, save_volume  # noqa: E402
from .metrics import evaluate_case, hd95, summarize  # noqa: E402
from .features import Dataset, build_dataset, load_survival_csv  # noqa: E402
from .crossval import CVConfig, compare_models, cross_validate  # noqa: E402

__all__ = [
    "__version__",
    "TumorEvalError",
    "LabelVolume",
    "Region",
    "load_volume",
    "save_volume",
    "region_mask",
    "evaluate_case",
    "hd95",
    "summarize",
    "Dataset",
    "build_dataset",
    "load_survival_csv",
    "CVConfig",
    "cross_validate",
    "compare_models",
]
