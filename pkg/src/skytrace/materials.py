"""Electrical material models for reflecting surfaces."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Material:
    """Electrical description of a reflecting surface.

    ``perfect_reflector`` short-circuits the Fresnel machinery: the
    reflection coefficient is forced to -1 for both polarizations no
    matter what the permittivity and conductivity say.

    Parameters
    ----------
    name : str
        Label used by configs and reports.
    rel_permittivity : float
        Real relative permittivity, >= 1.
    conductivity_s_m : float
        Conductivity in S/m, >= 0.
    perfect_reflector : bool
        Treat the surface as a lossless mirror (|coefficient| = 1).
    """

    name: str
    rel_permittivity: float = 1.0
    conductivity_s_m: float = 0.0
    perfect_reflector: bool = False

    def __post_init__(self) -> None:
        if self.rel_permittivity < 1.0:
            raise ValueError(
                f"material {self.name!r}: rel_permittivity must be >= 1, "
                f"got {self.rel_permittivity}"
            )
        if self.conductivity_s_m < 0.0:
            raise ValueError(
                f"material {self.name!r}: conductivity must be >= 0, "
                f"got {self.conductivity_s_m}"
            )


# Built-in surface materials. Concrete follows the ITU-R P.2040 model with
# the conductivity evaluated at 3.4 GHz (0.0462 * f_GHz^0.7822 S/m). The
# vegetation entry stands in for vegetated soil; its parameters are
# placeholders meant to be overridden per scenario.
BUILTIN_MATERIALS: dict[str, Material] = {
    "perfect": Material("perfect", perfect_reflector=True),
    "concrete": Material("concrete", rel_permittivity=5.24, conductivity_s_m=0.12),
    "vegetation": Material("vegetation", rel_permittivity=13.0, conductivity_s_m=0.05),
    "dry_ground": Material("dry_ground", rel_permittivity=3.0, conductivity_s_m=1e-4),
}


def get_material(name: str) -> Material:
    """Look up a built-in material by name."""
    try:
        return BUILTIN_MATERIALS[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_MATERIALS))
        raise KeyError(f"unknown material {name!r}; built-ins: {known}") from None
