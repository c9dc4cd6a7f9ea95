"""Neural adapters for the peccavi watermarking pipeline.

Generates visual paraphrases (diffusion img2img or a procedural stand-in)
and saliency maps (TorchScript models or gradient magnitude), emitting the
file formats the pipeline consumes: ``.para.json`` manifests with variant
PNGs, and ``.sal.png``/``.sal.json`` saliency pairs.  The two packages
share no code -- only these files and the CLIs.
"""

from .common import (
    ENV_BACKEND,
    ENV_CAPTION_CMD,
    ENV_DEVICE,
    ENV_DIFFUSION_MODEL,
    ENV_MSINET_MODEL,
    ENV_XRAI_MODEL,
    AdapterError,
)
from .paraphrase import BACKENDS, ParaphraseRequest, generate_paraphrases, resolve_backend
from .saliency import METHODS, compute_saliency, neural_saliency

__version__ = "0.1.0"

__all__ = [
    "AdapterError",
    "BACKENDS",
    "ENV_BACKEND",
    "ENV_CAPTION_CMD",
    "ENV_DEVICE",
    "ENV_DIFFUSION_MODEL",
    "ENV_MSINET_MODEL",
    "ENV_XRAI_MODEL",
    "METHODS",
    "ParaphraseRequest",
    "compute_saliency",
    "generate_paraphrases",
    "neural_saliency",
    "resolve_backend",
]
