"""Shared fixtures: small canonical datasets reused across the suite."""

import contextlib
import io
from pathlib import Path

import numpy as np
import pytest

from aggkit import DatasetSource, Representation, induced_source

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture()
def two_tier_rep() -> Representation:
    """Triangle in the plane: c alone on top, a and b tied below."""
    return Representation(
        weights={"a": 1.0, "b": 2.0, "c": 3.0},
        ranks={"a": 0, "b": 0, "c": 1},
        outcomes={"a": [0.0, 0.0], "b": [1.0, 0.0], "c": [0.2, 0.9]},
    )


@pytest.fixture()
def two_tier_source(two_tier_rep) -> DatasetSource:
    return induced_source(two_tier_rep)


@pytest.fixture()
def flat_rep() -> Representation:
    """Single rank class, three non-collinear points, weights 1, 2, 3."""
    return Representation(
        weights={"a": 1.0, "b": 2.0, "c": 3.0},
        ranks={"a": 0, "b": 0, "c": 0},
        outcomes={"a": [0.0, 0.0], "b": [1.0, 0.0], "c": [0.0, 1.0]},
    )


@pytest.fixture()
def flat_source(flat_rep) -> DatasetSource:
    return induced_source(flat_rep)


@pytest.fixture()
def line_three_points() -> DatasetSource:
    """Collinear data that averages pairwise yet admits no weights.

    Every pair aggregate sits strictly between its endpoints, and so
    does the triple, but the implied weight ratios contradict each
    other: the direct (x, z) mixture gives w(z)/w(x) = 3/5 while
    chaining through y gives 1.
    """
    table = {
        frozenset(["x"]): [0.0],
        frozenset(["y"]): [0.5],
        frozenset(["z"]): [1.0],
        frozenset(["x", "y"]): [0.25],
        frozenset(["y", "z"]): [0.75],
        frozenset(["x", "z"]): [0.375],
        frozenset(["x", "y", "z"]): [0.4375],
    }
    return DatasetSource(1, table)


@pytest.fixture()
def coin_beliefs_rep() -> Representation:
    """Two opposed coin beliefs with weight ratio three to one."""
    return Representation(
        weights={"a": 1.0, "b": 3.0},
        ranks={"a": 0, "b": 0},
        outcomes={"a": [0.8, 0.2], "b": [0.2, 0.8]},
    )


@pytest.fixture()
def coin_beliefs_source(coin_beliefs_rep) -> DatasetSource:
    return induced_source(coin_beliefs_rep)


@pytest.fixture()
def run_cli():
    """Run the command line entry point in-process.

    Returns (exit_code, stdout_text).  Keeping it in-process makes the
    determinism and schema sweeps cheap enough to run exhaustively.
    """
    from aggkit import cli

    def run(*args: str, stdin: str | None = None):
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            if stdin is None:
                code = cli.main(list(args))
            else:
                import sys

                old = sys.stdin
                sys.stdin = io.StringIO(stdin)
                try:
                    code = cli.main(list(args))
                finally:
                    sys.stdin = old
        return code, buf.getvalue()

    return run
