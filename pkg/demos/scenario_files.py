"""
Driving the tool from scenario files
====================================

The command line front end reads an INI scenario, writes CSV with the
resolved configuration in ``#`` lines at the top, and exits 0, 1 or 2 for
success, a failed self-check or a usage error.  The same entry point can
be called from Python, which is what this script does.
"""

import tempfile
from pathlib import Path

from cdmalink.cli import main
from cdmalink.scenario import dumps, load, parse, preset_path

###############################################################################
# The shipped presets
# -------------------
# ``fig2`` is ten users at 6 dB per information bit with a rate 1/4 code.
# Printing it in canonical form shows every key, defaults included.

print(dumps(load(preset_path("fig2"))))

###############################################################################
# Tabulating densities and bounds
# -------------------------------

out = Path(tempfile.mkdtemp())
main(["pdf", str(preset_path("fig4")), "--out", str(out / "fig4.csv")])
print("\n".join((out / "fig4.csv").read_text().splitlines()[:6]))

scenario = out / "fading57x4.ini"
scenario.write_text(
    "[scenario]\nusers = 2\nebn0_db = 10\n\n"
    "[code]\nrate_inverse = 8\nconstraint_length = 3\ngenerators = 5 7 5 7 5 7 5 7\n"
    "spectrum_max_distance = 48\n\n"
    "[experiment]\ntrials = 2000\nmax_errors = 200\ncombining = snr\ninterleaver_depth = 1002\n"
)
argv = ["ber", str(scenario), "--direction", "downlink", "--mode", "both", "--sweep", "ebn0_db=8:12:2"]
main(argv + ["--out", str(out / "ber.csv")])
print("\n".join(l for l in (out / "ber.csv").read_text().splitlines() if not l.startswith("#")))

###############################################################################
# Self-checks and mistakes
# ------------------------
# ``validate`` compares the simulated chain with the analytic densities.  A
# typo in a key is reported with its line number and exit code 2.

print("validate exit code:", main(["validate", str(preset_path("fig2"))]))
try:
    parse("[scenario]\nusers = 4\nuser = 5\n", "typo.ini")
except ValueError as exc:
    print("parse error:", exc)
