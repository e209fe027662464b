"""Exception types shared across the package."""


class PitchcovError(Exception):
    """Base class for every error raised by this package."""


class MalformedWav(PitchcovError):
    """RIFF/WAVE container is structurally invalid or truncated."""


class UnsupportedFormat(PitchcovError):
    """WAV file is readable but not mono 16-bit integer PCM."""


class InvalidRange(PitchcovError, ValueError):
    """Frequency range is empty or exceeds the Nyquist limit."""


class RateTooLow(PitchcovError, ValueError):
    """Sample rate cannot represent the requested F0 search ceiling."""


class EmptyInput(PitchcovError, ValueError):
    pass


class NonPositiveBase(PitchcovError, ValueError):
    pass


class ParamOutOfRange(PitchcovError, ValueError):
    """Contour parameter outside its documented sampling range."""


class UnstableFilter(PitchcovError):
    pass


class NoVoicedFrames(PitchcovError, ValueError):
    """No voiced frames survive feature/target alignment."""


class TooFewSamples(PitchcovError, ValueError):
    pass


class DimensionMismatch(PitchcovError, ValueError):
    pass


class LengthMismatch(PitchcovError, ValueError):
    pass


class ConstantInput(PitchcovError, ValueError):
    """Correlation is undefined because one input has zero variance."""


class EmptyCorpus(PitchcovError, ValueError):
    pass
