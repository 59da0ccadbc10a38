"""CSV helpers: full-precision serialization so downstream diffs are exact."""

import csv


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_csv(path, header, rows) -> None:
    """Write rows (sequences or dicts matching `header`) at full precision."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            if isinstance(row, dict):
                row = [row.get(h) for h in header]
            w.writerow([format_value(v) for v in row])


def read_csv(path):
    """Read a CSV written by `write_csv`: (header, list of string rows)."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]
