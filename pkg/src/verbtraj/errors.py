"""Exception types shared across the package."""


class VerbtrajError(Exception):
    """Base class for all library errors."""


class ModelError(VerbtrajError):
    """Invalid articulated-object model (bad tree, bad limits, bad geometry)."""


class UrdfError(ModelError):
    """Unparseable or out-of-subset URDF input."""


class KinematicsError(VerbtrajError):
    """State/model dimension mismatch or invalid state."""


class RenderError(VerbtrajError):
    """Invalid rendering request."""


class DatasetError(VerbtrajError):
    """Dataset generation, manifest, or split failure."""


class NetworkError(VerbtrajError):
    """Classifier shape mismatch or non-finite values."""


class ModelFormatError(VerbtrajError):
    """Corrupt or incompatible serialized classifier file."""


class CmaError(VerbtrajError):
    """Invalid CMA-ES configuration or numerical breakdown."""


class PlannerError(VerbtrajError):
    """Invalid planning request."""
