# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
# ---

# %% [markdown]
# # The command line
#
# Every analysis is also a subcommand of `warpcurv`. Outputs are CSV or
# canonical JSON, written atomically, and identical across runs.

# %%
import json
import tempfile
from pathlib import Path

import numpy as np

from warpcurv.cli import main

out = Path(tempfile.mkdtemp())
main(["integrate", "--n", "3", "--y0", "0,0", "--p0", "-6,-6", "--span", "-10,10", "--out", str(out / "traj.csv")])
data = np.genfromtxt(out / "traj.csv", delimiter=",", names=True)
print(data.dtype.names)
print("s column range", data["s"].min(), data["s"].max())

# %%
main(["phase", "lin", "--n", "4", "--q", "-2", "--out", str(out / "lin.json")])
print(json.loads((out / "lin.json").read_text())["eigenvalues"])

# %% [markdown]
# Invalid input exits with status 1 and leaves no file behind.

# %%
code = main(["integrate", "--n", "3", "--y0", "0", "--p0", "0,0", "--out", str(out / "bad.csv")])
print(code, (out / "bad.csv").exists())
