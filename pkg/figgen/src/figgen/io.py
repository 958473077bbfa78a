"""CSV/JSON readers for the optokerr output format.

The upstream format: one header line, then rows where floats are
``%.12g``, booleans are ``1``/``0``, and unavailable values are empty
fields.  Labels (``branch_label``, ``region_label``) stay strings;
everything else decodes to float, with empty fields decoding to None.
"""

import csv
import json


class MissingColumn(KeyError):
    def __init__(self, column, path):
        self.column = column
        self.path = str(path)
        super().__init__(column)

    def __str__(self):
        return f"column '{self.column}' missing from {self.path}"


class EmptyDataset(ValueError):
    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"no data rows in {self.path}")


class Table:
    def __init__(self, path, columns, rows):
        self.path = str(path)
        self.columns = tuple(columns)
        self.rows = rows

    def __len__(self):
        return len(self.rows)

    def require(self, *columns):
        for c in columns:
            if c not in self.columns:
                raise MissingColumn(c, self.path)
        return self

    def column(self, name):
        """All values of one column, in row order."""
        self.require(name)
        return [row[name] for row in self.rows]


def _decode(value):
    if value == "":
        return None
    try:
        return float(value)
    except ValueError:
        return value


def read_table(path) -> Table:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset(path) from None
        rows = [dict(zip(header, map(_decode, rec))) for rec in reader if rec]
    if not rows:
        raise EmptyDataset(path)
    return Table(path, header, rows)


def read_sidecar(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
