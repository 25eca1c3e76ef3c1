"""Exception hierarchy shared across the package.

Each error carries the CLI exit code used by the command-line front end:
2 for validation problems, 3 for infeasible velocity plans, 4 for numerical
divergence.
"""

from __future__ import annotations


class RingformError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(RingformError):
    """Scenario configuration is invalid.

    Collects every validation problem found, not just the first.
    """

    exit_code = 2

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class GainInfeasibleError(RingformError):
    """The requested edge gain violates the stability threshold."""

    exit_code = 3


class InfeasiblePlanError(RingformError):
    """No admissible velocity plan exists for the requested target."""

    exit_code = 3


class DivergenceError(RingformError):
    """A simulation left the finite range; carries the blow-up time."""

    exit_code = 4

    def __init__(self, t_blowup, detail="state magnitude exceeded guard"):
        self.t_blowup = float(t_blowup)
        super().__init__(f"divergence at t={self.t_blowup:.6g} s ({detail})")


class PitchRangeError(DivergenceError):
    """Pitch angle approached the kinematic singularity at |theta| = pi/2."""

    def __init__(self, t_blowup, theta):
        self.theta = float(theta)
        super().__init__(t_blowup, f"pitch {self.theta:.6g} rad out of range")
