import os
import tempfile
from pathlib import Path
from typing import Any, Iterator, List, Mapping, Optional, Sequence

import numpy as np
import pyarrow as pa
import pyarrow.csv as pacsv

try:
    import pandas as pd
except ImportError:
    pd = None


class ResultTable:
    """Column-oriented experiment result backed by a PyArrow Table."""

    def __init__(self, table: pa.Table):
        """Initialize the ResultTable.

        Args:
            table (pa.Table): The Arrow table holding the columns.

        """
        self._table = table

    @classmethod
    def from_pydict(cls, data: Mapping[str, Sequence[Any]]) -> "ResultTable":
        """Build a table from a dictionary of columns.

        Float columns become float64; missing values must be given as None.
        """
        arrays = {}
        for name, values in data.items():
            values = list(values)
            if all(v is None or isinstance(v, str) for v in values) and any(isinstance(v, str) for v in values):
                arrays[name] = pa.array(values, type=pa.string())
            elif all(v is None or isinstance(v, (bool, np.bool_)) for v in values) and values:
                arrays[name] = pa.array(values, type=pa.bool_())
            elif all(v is None or isinstance(v, (int, np.integer)) for v in values) and values:
                arrays[name] = pa.array([None if v is None else int(v) for v in values], type=pa.int64())
            else:
                arrays[name] = pa.array([None if v is None else float(v) for v in values], type=pa.float64())
        return cls(pa.table(arrays))

    @classmethod
    def from_rows(cls, rows: Sequence[Mapping[str, Any]], columns: Sequence[str]) -> "ResultTable":
        """Build a table from row dictionaries, keeping ``columns`` order."""
        return cls.from_pydict({name: [row.get(name) for row in rows] for name in columns})

    @property
    def header_names(self) -> List[str]:
        """Get the list of column names.

        Returns:
            List[str]: A list of column names.

        """
        return list(self._table.column_names)

    @property
    def num_rows(self) -> int:
        return self._table.num_rows

    def __len__(self) -> int:
        return self._table.num_rows

    def column(self, name: str) -> np.ndarray:
        """Return a numeric column as a float array (nulls become NaN)."""
        if name not in self._table.column_names:
            raise KeyError(name)
        values = self._table.column(name).to_pylist()
        return np.array([np.nan if v is None else v for v in values], dtype=float)

    def with_columns(self, columns: Mapping[str, Sequence[Any]]) -> "ResultTable":
        """Return a new table with ``columns`` appended."""
        extra = ResultTable.from_pydict(columns).to_arrow()
        if extra.num_rows != self.num_rows:
            raise ValueError(f"appended columns have {extra.num_rows} rows, table has {self.num_rows}")
        table = self._table
        for name in extra.column_names:
            table = table.append_column(name, extra.column(name))
        return ResultTable(table)

    def to_pydict(self) -> dict[str, List[Any]]:
        """Convert the table to a python dictionary of lists (column-oriented).

        Returns:
            dict[str, List[Any]]: A dictionary where keys are column names and values are lists of cell values.

        """
        return self._table.to_pydict()

    def to_arrow(self) -> pa.Table:
        """Return the underlying PyArrow Table."""
        return self._table

    def to_records(self) -> list[dict[str, Any]]:
        """Convert the table to a list of row dictionaries."""
        return self._table.to_pylist()

    def iter_rows(self) -> Iterator[dict[str, Any]]:
        """Iterate over rows as dictionaries."""
        for batch in self._table.to_batches():
            yield from batch.to_pylist()

    def to_csv(self, path: str | os.PathLike[str]) -> Path:
        """Write the table to a CSV file.

        The header is unquoted, decimals use '.', and every row ends with a newline.
        The file is replaced atomically.

        Args:
            path (str | os.PathLike): The path to write the CSV file to.

        """
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        if target.exists() and not os.access(target, os.W_OK):
            raise PermissionError(f"Cannot write to CSV at {target}")
        tmp_fd, tmp_path = tempfile.mkstemp(dir=target.parent, suffix=".part")
        os.close(tmp_fd)
        try:
            options = pacsv.WriteOptions(include_header=True, quoting_style="none")
            pacsv.write_csv(self._table, tmp_path, write_options=options)
            os.replace(tmp_path, target)
        except Exception:
            if os.path.exists(tmp_path):
                os.remove(tmp_path)
            raise
        return target

    def to_pandas(self):
        """Convert the table to a pandas DataFrame.

        Returns:
            pd.DataFrame: A pandas DataFrame representation of the table.

        Raises:
            ImportError: If pandas is not installed.

        """
        if pd is None:
            raise ImportError("pandas is not installed. Please install it with 'pip install pydbqubit[pandas]'")
        return pd.DataFrame(self.to_pydict())

    def __repr__(self) -> str:
        return f"ResultTable(columns={self.header_names}, rows={self.num_rows})"


def read_csv(path: str | os.PathLike[str]) -> ResultTable:
    """Read a CSV previously written by :meth:`ResultTable.to_csv`."""
    return ResultTable(pacsv.read_csv(os.fspath(path)))


def sanitize_status(message: Optional[str]) -> str:
    """Make a free-text status safe for an unquoted CSV field."""
    if not message:
        return "ok"
    return " ".join(message.replace(",", ";").replace('"', "'").split())
