"""Frozen regression constants, measured on the seeded suites in ``suites.py``.

Regenerate with ``python3 scripts/calibrate.py``.  Checks allow ``REGRESSION_SLACK``.
"""
from __future__ import annotations

import json
from importlib import resources

KAPPA = 1j * 3.141592653589793
REGRESSION_SLACK = 1.1


def load() -> dict:
    return json.loads(resources.files(__package__).joinpath("calibration.json").read_text())


_FROZEN = load()
WEAK_TYPE_C0 = _FROZEN["weak_type_c0"]
FEFFERMAN_STEIN = {float(p): v for p, v in _FROZEN["fefferman_stein"].items()}
MODEL_FORM = _FROZEN["model_form"]
CLASS_MEASURE = _FROZEN["class_measure"]


def snapshot() -> dict:
    """Everything a run manifest records."""
    return {"kappa": [KAPPA.real, KAPPA.imag], "weak_type_c0": WEAK_TYPE_C0,
            "fefferman_stein": {str(p): v for p, v in FEFFERMAN_STEIN.items()},
            "model_form": MODEL_FORM, "class_measure": CLASS_MEASURE, "slack": REGRESSION_SLACK}
