"""Post-processing for chemochip CSV outputs.

Everything here works from the documented CSV files alone (field snapshots
and the mass ledger); the simulation engine is not imported.
"""

from plotkit.frames import LedgerTable, SnapshotFrame, load_ledger, load_snapshot
from plotkit.render import render_cells, render_fields, render_mass

__all__ = [
    "LedgerTable",
    "SnapshotFrame",
    "load_ledger",
    "load_snapshot",
    "render_cells",
    "render_fields",
    "render_mass",
]

__version__ = "0.1.0"
