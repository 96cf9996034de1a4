"""Feature extractor for the affectfusion pipeline: per-frame CNN embeddings,
optical-flow stack embeddings, and windowed audio descriptors."""

from .audio import AUDIO_DIM, extract_audio_features, load_wav
from .job import ExtractionJob, extract_audio, extract_flow, extract_rgb, run

__version__ = "0.1.0"
