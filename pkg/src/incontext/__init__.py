"""Measure-theoretic transformers: in-context maps on particle measures, causal masking,
an algebra of elementary maps and its realization as explicit attention stacks."""

__version__ = "0.1.0"

from .attention import Attention, ContextFree, HeadParams, LayerStack, MlpParams, MultiHeadParams  # noqa: E402
from .causal import InContextMapHandle, check_causal, check_identifiable, fit_masked  # noqa: E402
from .measures import ParticleMeasure, SpaceTimeMeasure, mask, pushforward, time_marginal  # noqa: E402
from .transport import wasserstein  # noqa: E402

__all__ = [
    "__version__",
    "Attention", "ContextFree", "HeadParams", "LayerStack", "MlpParams", "MultiHeadParams",
    "InContextMapHandle", "check_causal", "check_identifiable", "fit_masked",
    "ParticleMeasure", "SpaceTimeMeasure", "mask", "pushforward", "time_marginal",
    "wasserstein",
]
