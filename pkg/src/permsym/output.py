"""Plain-text column writers for observables and distributions.

Property file layout::

    # t <label1> <label2> ...
    # <metadata lines>
    <t> <value1> <value2> ...

Numbers are written with ``%.16e`` (17 significant digits); undefined values
(for example g2 with an empty mode) are written as ``nan``.  Distribution
files hold one block per monitor event, each opened by ``# t=<time>`` and
followed by ``<index> <value>`` lines.  A run that fails after a file was
opened appends a ``# FAILED: <reason>`` line.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = ["FAILURE_MARKER", "format_number", "PropertyWriter", "DistributionWriter"]

FAILURE_MARKER = "# FAILED:"


def format_number(v: float) -> str:
    return f"{float(v):.16e}"


class _Writer:
    def __init__(self, path: Path, header: Sequence[str]):
        self.path = Path(path)
        self._fh = open(self.path, "w", encoding="ascii", newline="\n")
        for line in header:
            self._fh.write(line + "\n")
        self.closed = False

    def fail(self, reason: str) -> None:
        if not self.closed:
            self._fh.write(f"{FAILURE_MARKER} {' '.join(str(reason).split())}\n")
            self.close()

    def close(self) -> None:
        if not self.closed:
            self._fh.close()
            self.closed = True


class PropertyWriter(_Writer):
    """One row per monitor event: time then one column per observable."""

    def __init__(self, path, labels: Sequence[str], metadata: Sequence[str] = ()):
        header = ["# t " + " ".join(labels)] + [f"# {m}" for m in metadata]
        super().__init__(path, header)
        self.n_columns = len(labels)
        self.rows = 0

    def write_row(self, t: float, values: Sequence[complex]) -> None:
        if len(values) != self.n_columns:
            raise ValueError(f"expected {self.n_columns} values, got {len(values)}")
        cols = [format_number(t)] + [format_number(np.real(v)) for v in values]
        self._fh.write(" ".join(cols) + "\n")
        self.rows += 1


class DistributionWriter(_Writer):
    """Blocks of ``index value`` pairs, one per monitor event."""

    def __init__(self, path, description: str, metadata: Sequence[str] = ()):
        header = [f"# distribution {description}"] + [f"# {m}" for m in metadata]
        super().__init__(path, header)
        self.blocks = 0

    def write_block(self, t: float, values: np.ndarray) -> None:
        if self.blocks:
            self._fh.write("\n")
        self._fh.write(f"# t={format_number(t)}\n")
        for i, v in enumerate(values):
            self._fh.write(f"{i} {format_number(v)}\n")
        self.blocks += 1
