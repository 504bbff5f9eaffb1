"""Heart and breathing rate from near-infrared video of the neck."""
from .core import FrameSequence, Rect, ReferenceRecording, TimeWindow, VitalTrace, load_sequence, save_sequence
from .errors import ContainerIOError, NumericalError, ValidationError, VitalsError
from .spectral import BR_BAND, HR_BAND, Band

__version__ = "0.1.0"

__all__ = [
    "BR_BAND", "Band", "ContainerIOError", "FrameSequence", "HR_BAND", "NumericalError", "Rect",
    "ReferenceRecording", "TimeWindow", "ValidationError", "VitalTrace", "VitalsError",
    "load_sequence", "save_sequence",
]
