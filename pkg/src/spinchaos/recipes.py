"""Named presets ``fig2`` ... ``fig21``, each a subcommand plus parameter overrides.

Where the reference run is too large for a desk machine the preset shrinks
it and says so in ``note``.
"""

from __future__ import annotations

from copy import deepcopy

JSTAR = 1.1504059085709741

RECIPES: dict[str, dict] = {
    "fig2": {
        "command": "classical-orbit",
        "params": {"J": [0.79, JSTAR + 1e-6, 1.76]},
        "note": "libration, near-separatrix rotation and rotation on the E = 0 shell",
    },
    "fig3": {
        "command": "lyapunov-scan-J",
        "params": {"J": "0.1:3.0:59", "L": [10, 18, 20, 36], "kind": "periodic", "T_R": 5.0},
        "note": "coarser J grid than published",
    },
    "fig4a": {
        "command": "lyapunov-scan-L",
        "params": {"J": 0.79, "L": "4..44"},
    },
    "fig4b": {
        "command": "lyapunov-scan-L",
        "params": {"J": 1.76, "L": "4..44"},
    },
    "fig4c": {
        "command": "lyapunov-scan-L",
        "params": {"J": 2.23, "L": "4..44"},
    },
    "fig5": {
        "command": "lyapunov-scan-J",
        "params": {"J": [0.79, 1.76], "L": [18, 20], "kind": "periodic", "T_R": 5.0, "vectors": True},
    },
    "fig7": {
        "command": "cusp-scan",
        "params": {"L": 10, "T_R": 2.0, "decades": [1, 6], "per_decade": 2},
        "note": "two points per decade of |dJ| on each side",
    },
    "fig8": {
        "command": "ensemble-otoc",
        "params": {"J": 1.76, "L": 100, "N": 1000, "radius": 1e-4, "duration": 60.0},
    },
    "fig9": {
        "command": "temporal-spectrum",
        "params": {"J": 1.76, "L": 6, "t_start": 300.0, "window": 6000.0, "taper": 0.10},
    },
    "fig10": {
        "command": "fourier-modes",
        "params": {"J": 1.76, "L": [6, 18, 19, 21, 42], "amplitude": 1e-11, "duration": 400.0},
    },
    "fig13": {
        "command": "separatrix",
        "params": {"scalings": True},
    },
    "fig14": {
        "command": "quantum-rvalue",
        "params": {"Jt": 1.76, "S": [0.5, 1.0, 1.5, 2.0], "L": "auto"},
        "note": "lengths up to the desk caps S=1/2: 14, S=1: 8, S=3/2: 7, S=2: 6",
    },
    "fig15": {
        "command": "scar-report",
        "params": {"Jt": 1.76, "S": 2.0, "L": 6},
    },
    "fig16": {
        "command": "stability-certificate",
        "params": {"J": 1.76, "L": 23, "M": 1000, "T_R": [2.0, 5.0, 10.0, 20.0, 50.0]},
    },
    "fig17": {
        "command": "quantum-relax",
        "params": {"Jt": 1.76, "S": 1.5, "L": 7, "L_inf": 7, "t_max": 10.0},
        "note": "published lengths exceed desk caps; Psi_inf at the same reduced L",
    },
    "fig19": {
        "command": "spherical-map",
        "params": {"Jt": 1.76, "S": 2.0, "L": 6, "state": "max-overlap"},
    },
    "fig20": {
        "command": "quantum-relax",
        "params": {"Jt": [0.8, 0.95, JSTAR, 1.3, 1.5], "S": 1.5, "L": 7, "L_inf": 0, "t_max": 20.0},
        "note": "published L=8 for S=3/2 is above the desk cap; L=7",
    },
    "fig21": {
        "command": "pr-scan",
        "params": {"S": 1.5, "L": 7, "Jt": "0.6:1.8:61"},
    },
}


class UnknownRecipe(KeyError):
    pass


def figure_recipe(name: str) -> dict:
    """Preset {"command", "params", "note"} for a figure name."""
    try:
        r = deepcopy(RECIPES[name])
    except KeyError:
        raise UnknownRecipe(f"unknown recipe {name!r}; known: {', '.join(sorted(RECIPES))}") from None
    r.setdefault("note", "")
    return r
