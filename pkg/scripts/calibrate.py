"""Re-measure the frozen regression constants on the seeded suites and rewrite calibration.json."""
import argparse
import json
from pathlib import Path

from calderon_lab import suites

TARGET = Path(__file__).resolve().parents[1] / "src" / "calderon_lab" / "calibration.json"


def measure() -> dict:
    fs = suites.fefferman_stein_suite()
    return {
        "weak_type_c0": max(r["ratio"] for r in suites.weak_type_suite()),
        "fefferman_stein": {str(p): max(r["scaled"] for r in fs if r["p"] == p) for p in suites.FS_EXPONENTS},
        "model_form": max(r["scaled"] for r in suites.model_form_suite()),
        "class_measure": max(suites.class_ratio(c) for _, c in suites.stopping_suite()),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dry-run", action="store_true", help="print the values without writing")
    args = ap.parse_args()
    values = measure()
    text = json.dumps(values, indent=2, sort_keys=True) + "\n"
    print(text, end="")
    if not args.dry_run:
        TARGET.write_text(text)


if __name__ == "__main__":
    main()
