"""Model spacetimes: flat, anti-de Sitter and de Sitter, plus the hyperbolic cone disk."""
from __future__ import annotations

import enum

import numpy as np

from ..errors import ChartDomainError, InadmissibleH


class ModelGeometry(enum.Enum):
    MINKOWSKI = "minkowski"
    ADS = "ads"
    DS = "ds"

    @property
    def sec(self) -> float:
        """Ambient sectional curvature."""
        return {"minkowski": 0.0, "ads": -1.0, "ds": 1.0}[self.value]

    @property
    def h_range(self) -> tuple[float, float]:
        """Open interval of admissible constant mean curvatures."""
        return {"minkowski": (-np.inf, 0.0), "ads": (-np.inf, np.inf), "ds": (-np.inf, -1.0)}[self.value]

    @property
    def k_range(self) -> tuple[float, float]:
        """Open interval of Gauss curvatures of the K-leaves."""
        return {"minkowski": (-np.inf, 0.0), "ads": (-np.inf, -1.0), "ds": (-np.inf, 0.0)}[self.value]

    @property
    def h_range_text(self) -> str:
        lo, hi = self.h_range
        return "H ∈ (−∞,0)" if hi == 0 else ("H ∈ (−∞,∞)" if hi == np.inf else "H ∈ (−∞,−1)")

    def admits(self, H: float) -> bool:
        lo, hi = self.h_range
        return bool(np.isfinite(H) and lo < H < hi)

    def c_eff(self, H: float) -> float:
        """Sec - H^2, the constant Gauss curvature of the umbilic leaf."""
        if not self.admits(H):
            raise InadmissibleH(f"{self.value}: H={H} outside {self.h_range_text}")
        return self.sec - H * H

    @classmethod
    def parse(cls, tag) -> "ModelGeometry":
        if isinstance(tag, cls):
            return tag
        key = str(tag).strip().lower().replace("-", "").replace("_", "")
        aliases = {"minkowski": cls.MINKOWSKI, "mink": cls.MINKOWSKI, "flat": cls.MINKOWSKI,
                   "ads": cls.ADS, "antidesitter": cls.ADS, "ds": cls.DS, "desitter": cls.DS}
        if key not in aliases:
            raise ValueError(f"unknown geometry {tag!r}")
        return aliases[key]


HYPERBOLIC = "hyperbolic"


def model_chart_metric(geometry, theta: float, coords) -> np.ndarray:
    """Diagonal metric matrix of the cone model with angle ``theta`` at a chart point.

    Coordinates: Minkowski (t, r, phi); AdS (t, phi, rho); dS (t, phi, alpha)
    with polar phi in [0, pi] and the cone angle acting on alpha; hyperbolic
    disk (r, phi). The angular coordinate around the singular line ranges over
    [0, theta].
    """
    if not 0.0 < theta <= 2 * np.pi:
        raise ChartDomainError(f"cone angle {theta} out of range")
    c = [float(x) for x in coords]
    if geometry == HYPERBOLIC:
        if len(c) != 2:
            raise ChartDomainError("hyperbolic disk chart expects (r, phi)")
        r, phi = c
        if r < 0 or not 0.0 <= phi <= theta:
            raise ChartDomainError(f"point {coords} outside the H_theta chart")
        return np.diag([1.0, np.sinh(r) ** 2])
    geometry = ModelGeometry.parse(geometry)
    if len(c) != 3:
        raise ChartDomainError("spacetime charts expect three coordinates")
    if geometry is ModelGeometry.MINKOWSKI:
        t, r, phi = c
        if r < 0 or not 0.0 <= phi <= theta:
            raise ChartDomainError(f"point {coords} outside the flat cone chart")
        return np.diag([-1.0, 1.0, r * r])
    if geometry is ModelGeometry.ADS:
        t, phi, rho = c
        if rho < 0 or not 0.0 <= phi <= theta:
            raise ChartDomainError(f"point {coords} outside the AdS cone chart")
        return np.diag([-np.cosh(rho) ** 2, np.sinh(rho) ** 2, 1.0])
    t, phi, alpha = c
    if not 0.0 <= phi <= np.pi or not 0.0 <= alpha <= theta:
        raise ChartDomainError(f"point {coords} outside the dS cone chart")
    ch = np.cosh(t) ** 2
    return np.diag([-1.0, ch, ch * np.sin(phi) ** 2])
