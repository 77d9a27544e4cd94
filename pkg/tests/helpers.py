"""Shared table generators for engine-level and acceptance tests."""

from __future__ import annotations

import random

from parsemunge.tidytable import TidyTable

WORDS = ["chrome", "safari", "edge", "mac os x", "windows", "lynx", "opera"]


def random_text_cell(rnd: random.Random) -> str:
    return f"{rnd.choice(WORDS)} {rnd.randint(0, 99)}.{rnd.randint(0, 9)}"


def make_random_table(rnd: random.Random, rows: int = 40, want_missing: bool = True
                      ) -> tuple[TidyTable, dict[str, str]]:
    """A small mixed table plus a root assignment map for some of its columns."""
    columns, headers, assignments = [], [], {}
    n_cols = rnd.randint(2, 5)
    for i in range(n_cols):
        header = f"c{i}"
        kind = rnd.choice(["text", "text", "numeric", "binary"])
        if kind == "numeric":
            col = [round(rnd.uniform(-50, 50), 3) for _ in range(rows)]
            root = rnd.choice([None, "nmbr", "mnmx"])
        elif kind == "binary":
            col = [rnd.choice(["yes", "no"]) for _ in range(rows)]
            root = rnd.choice([None, "bnry", "ord3"])
        else:
            col = [random_text_cell(rnd) for _ in range(rows)]
            root = rnd.choice([None, "ord3", "onht", "1010", "or19", "spl2", "nmcm"])
        if want_missing:
            for _ in range(rnd.randint(0, rows // 8)):
                col[rnd.randrange(rows)] = None
        headers.append(header)
        columns.append(col)
        if root:
            assignments[header] = root
    return TidyTable(headers=headers, columns=columns), assignments
