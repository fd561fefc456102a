"""Exception hierarchy shared by the engine and the CLI."""


class CutsetSamplingError(Exception):
    """Base class for all engine errors."""

    exit_code = 1


class ModelError(CutsetSamplingError):
    """The network is structurally invalid or an input refers to unknown variables."""

    exit_code = 3


class IncompleteAssignmentError(ModelError):
    pass


class ParameterError(CutsetSamplingError, ValueError):
    exit_code = 2


class ZeroEvidenceError(CutsetSamplingError):
    """P(e) = 0, so the posterior is undefined."""

    exit_code = 4


class WidthGuardError(CutsetSamplingError):
    """Estimated induced width exceeds the configured elimination cap."""

    exit_code = 5

    def __init__(self, width: int, cap: int):
        super().__init__(f"estimated induced width {width} exceeds cap {cap}")
        self.width = width
        self.cap = cap


class TrappedStateError(CutsetSamplingError):
    """Every value of a sampled variable has zero weight in the current state."""

    exit_code = 6

    def __init__(self, variable: int, chain: int | None = None, step: int | None = None):
        where = []
        if chain is not None:
            where.append(f"chain {chain}")
        if step is not None:
            where.append(f"step {step}")
        ctx = f" ({', '.join(where)})" if where else ""
        super().__init__(f"all-zero conditional for variable {variable}{ctx}")
        self.variable = variable
        self.chain = chain
        self.step = step


class ZeroBeliefError(CutsetSamplingError):
    exit_code = 4

    def __init__(self, variable: int):
        super().__init__(f"belief of variable {variable} vanished")
        self.variable = variable
