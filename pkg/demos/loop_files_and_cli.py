"""
Loop files and the command line
===============================

Loops travel as small JSON documents holding the band and the coefficient
matrices as ``[re, im]`` pairs.  The ``birkhoff`` command reads them and
prints a JSON report; ``run_command`` runs the same code in process.
"""

import io
import json
import tempfile
from pathlib import Path

from birkhoff import LaurentSeries, LoopSpec, MatrixLoop, emit_loop_spec, parse_loop_spec
from birkhoff.cli import run_command

# %%
# Write two loops: ``z - 2`` and ``diag(z**2, 1/z)``.
folder = Path(tempfile.mkdtemp())
scalar = folder / "z_minus_2.loop"
scalar.write_text(emit_loop_spec(LoopSpec.from_loop(LaurentSeries([-2.0, 1.0]))))
matrix = folder / "diag.loop"
matrix.write_text(emit_loop_spec(LoopSpec.from_loop(MatrixLoop.monomial_diag((2, -1)))))
print(scalar.read_text())

# %%
# Emitting a parsed file reproduces it byte for byte.
assert emit_loop_spec(parse_loop_spec(scalar.read_text())) == scalar.read_text()

# %%
# Equivalent to ``birkhoff factor --mode scalar --input z_minus_2.loop``.
out = io.StringIO()
code = run_command(["factor", "--mode", "scalar", "--input", str(scalar)], stdout=out)
report = json.loads(out.getvalue())
print("exit code", code, "kappa", report["result"]["kappa"], "residual", report["residuals"])

# %%
# Partial indices from the command line.
out = io.StringIO()
run_command(["indices", "--input", str(matrix)], stdout=out)
print(json.loads(out.getvalue())["result"])
