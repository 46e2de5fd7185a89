"""
Report schemas

Pydantic records written as JSON by the commands.

"""
from typing import Any, Dict, List, Optional

from pydantic import BaseModel


class SuiteResult(BaseModel):
    """
    Outcome of one identity suite.

    Attributes:
        suite (str): Suite name, also the tolerance name.
        dimension (int): Dimension of the level it ran on.
        max_error (float): Largest violation observed.
        tolerance (float): Threshold it was held to.
        passed (bool): max_error ≤ tolerance.
    """
    suite: str
    dimension: int
    max_error: float
    tolerance: float
    passed: bool


class CheckReport(BaseModel):
    suites: List[SuiteResult]
    passed: bool
    first_failure: Optional[str] = None


class DegenerateSummary(BaseModel):
    """
    Result of the degenerate 1D run.

    Attributes:
        gamma (float): γ.
        h (float): Cell width.
        regime (str): "jump" for γ > 2, "smooth" otherwise.
        jump_location (float | None): Facet where the discrete minimizer jumps.
        energy (float): J° of the discrete minimizer.
        oracle_jump (float | None): argmin of the closed-form energy F.
        oracle_energy (float | None): F at its argmin.
        jump_error (float | None): |jump_location - oracle_jump|.
        within_tolerance (bool): jump_error ≤ 2h and generic_gap ≤ 1e-6, or the smooth error below
            the poisson tolerance.
        competitor_gap (float | None): J°(single jump) - J°(plateau competitor).
        generic_energy (float | None): Energy reached by the generic minimizer.
        generic_gap (float | None): |generic_energy - energy|.
        euler_energy (float | None): J° of the winning Euler candidate before polishing.
        max_error (float | None): Smooth regime error against (γ/2)(2x - x²).
    """
    gamma: float
    h: float
    regime: str
    energy: float
    jump_location: Optional[float] = None
    oracle_jump: Optional[float] = None
    oracle_energy: Optional[float] = None
    jump_error: Optional[float] = None
    within_tolerance: bool = True
    competitor_gap: Optional[float] = None
    generic_energy: Optional[float] = None
    generic_gap: Optional[float] = None
    euler_energy: Optional[float] = None
    max_error: Optional[float] = None


class StudySummary(BaseModel):
    """
    Outcome of a refinement study.

    Attributes:
        quantity (str): What was tabulated.
        levels (list[dict]): Per-level rows, in level order.
        limit (float | None): Extrapolated value, for convergent quantities.
        error (float | None): |v_n - v_(n-1)| of the last two levels.
        order (float | None): Observed order when it could be measured.
        passed (bool): Outcome of the study's own acceptance rule.
    """
    quantity: str
    levels: List[Dict[str, Any]]
    limit: Optional[float] = None
    error: Optional[float] = None
    order: Optional[float] = None
    passed: bool = True
