"""Built-in models: a univariate CARMA(2,1), a bivariate MCAR(1) and a bivariate
MCARMA(2,1), each with a null ``T`` and a parametrized family of alternatives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .errors import ConfigError
from .model import StateSpaceModel, validate_model


def carma21(theta) -> StateSpaceModel:
    t1, t2, t3 = map(float, theta)
    A = [[0.0, 1.0], [t1, t2]]
    B = [[t3], [t1 + t2 * t3]]
    return validate_model(A, B, [[1.0, 0.0]], [[1.0]])


def mcar1(theta) -> StateSpaceModel:
    t1, t2, t3, t4 = map(float, theta)
    A = [[t1, t2], [t3, t4]]
    return validate_model(A, A, np.eye(2), np.eye(2))


def mcarma21(theta) -> StateSpaceModel:
    t1, t2, t3, t4, t5, t6, t7 = map(float, theta)
    A = [[t1, t2, 0.0], [0.0, 0.0, 1.0], [t3, t4, t5]]
    B = [[t1, t2], [t6, t7], [t3 + t5 * t6, t4 + t5 * t7]]
    C = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
    return validate_model(A, B, C, np.eye(2))


FAMILIES = {"carma21": carma21, "mcar1": mcar1, "mcarma21": mcarma21}

PARAMETERS: Dict[str, Dict[str, Tuple[float, ...]]] = {
    "carma21": {
        "T": (-1, -1, -1),
        "C1": (-1, -2, 1),
        "C2": (-1, -2, -3),
        "C3": (-2, -3, 5),
        "C4": (-2, -1, -2),
        "C5": (-2, -1, -1),
        "C6": (-1, -1, -1.5),
    },
    "mcar1": {
        "T": (-0.5, -0.5, 1, -1),
        "O1": (-1, -0.5, 1, -1),
        "O2": (-0.5, -1, 1, -1),
        "O3": (-0.5, -0.5, 0, -1),
        "O4": (-0.5, -0.5, 1, -2),
    },
    "mcarma21": {
        "T": (-1, 4, -1, 0, -3, -1, -1),
        "M1": (-2, 1, -3, -1, -1, 1, 1),
        "M2": (-2, -1, 3, -1, -3, -1, -3),
        "M3": (-1, 5, -1, 0, -3, -1, -1),
        "M4": (-1, 4, -2, 0, -3, -1, -1),
    },
}

DESCRIPTIONS = {
    "carma21": "univariate CARMA(2,1)",
    "mcar1": "bivariate MCAR(1)",
    "mcarma21": "bivariate MCARMA(2,1)",
}


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    key: str
    model: StateSpaceModel
    description: str
    theta: Tuple[float, ...]


def catalog_keys():
    return [f"{fam}/{name}" for fam, d in PARAMETERS.items() for name in d]


def alternatives(family: str):
    return [k for k in PARAMETERS[family] if k != "T"]


def get(key: str) -> CatalogEntry:
    """Look up ``"family/name"``, e.g. ``"carma21/T"`` or ``"mcar1/O3"``."""
    try:
        fam, name = key.split("/")
        theta = PARAMETERS[fam][name]
    except (ValueError, KeyError):
        raise ConfigError(f"unknown catalog key {key!r}; known: {', '.join(catalog_keys())}") from None
    model = FAMILIES[fam](theta)
    return CatalogEntry(key, model, f"{DESCRIPTIONS[fam]} {name}", tuple(float(x) for x in theta))
