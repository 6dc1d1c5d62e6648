"""Run one experiment by id; same flags and exit codes as ``python3 -m calderon_lab``."""
from calderon_lab.harness import main

if __name__ == "__main__":
    raise SystemExit(main())
