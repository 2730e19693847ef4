"""Utility module for CSV tables

All floats are written as decimals with 17 significant digits, so
that a table read back reproduces the exact binary values.
"""

import csv
import numbers


def format_value(value) -> str:
    """Formats a single table cell."""
    if isinstance(value, bool):
        return str(int(value))
    elif isinstance(value, numbers.Integral):
        return str(int(value))
    elif isinstance(value, numbers.Real):
        return f"{float(value):.17g}"
    else:
        return str(value)


def write_csv(path: str, columns: list, rows: list):
    """
    Writes rows (sequences or dicts keyed by column name) to a CSV
    file with a header line.
    """

    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)

        for row in rows:
            if isinstance(row, dict):
                row = [row[column] for column in columns]
            writer.writerow([format_value(value) for value in row])


def read_csv(path: str) -> tuple[list, list]:
    """
    Reads a CSV table written by `write_csv`.
    Returns the header and the rows as lists of strings.
    """

    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [row for row in reader if row]

    return header, rows


def read_columns(path: str, types: dict = None) -> dict:
    """
    Reads a CSV table into a dict of columns, converting every
    column to float unless another type is given in `types`.
    """

    types = types or {}
    header, rows = read_csv(path)

    columns = {}
    for i, name in enumerate(header):
        cast = types.get(name, float)
        columns[name] = [cast(row[i]) for row in rows]

    return columns
