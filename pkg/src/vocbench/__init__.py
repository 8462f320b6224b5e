"""vocbench: six GAN-vocoder generators, one multi-resolution
discriminating framework, and the shared training/evaluation recipe."""

__version__ = "0.1.0"

from .dsp import (  # noqa: F401
    MCD_ALPHA,
    AlignmentPath,
    MelConfig,
    MelSpectrogram,
    MfccSequence,
    Waveform,
    dtw_align,
    mcd,
    mel_spectrogram,
    mfcc,
    normalize_loudness,
    zscore_normalize,
)
from .generators import (  # noqa: F401
    GeneratorKind,
    build_generator,
    count_parameters,
    default_config,
    generator_receptive_field,
    probe_receptive_field_empirical,
    receptive_field,
    tiny_config,
)
