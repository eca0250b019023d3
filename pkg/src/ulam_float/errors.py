"""Exception hierarchy; ``exit_code`` is what the CLI returns for each."""


class UlamError(Exception):
    exit_code = 1
    stage = "unknown"

    def to_dict(self):
        out = {"error": type(self).__name__, "message": str(self), "stage": self.stage}
        node = getattr(self, "node", None)
        if node is not None:
            out["node"] = node
        return out


class ParameterError(UlamError, ValueError):
    exit_code = 2
    stage = "parameters"


class GeometryError(UlamError):
    exit_code = 3
    stage = "geometry"


class NumericalError(UlamError):
    exit_code = 3
    stage = "numerics"


class ConstructionError(UlamError):
    exit_code = 3
    stage = "construction"

    def __init__(self, message, node=None, stage=None):
        super().__init__(message)
        self.node = node
        if stage is not None:
            self.stage = stage


class MarchingError(ConstructionError):
    stage = "march"


class SmallnessBudgetError(ConstructionError):
    stage = "smallness"


class VerificationError(UlamError):
    exit_code = 4
    stage = "verify"
