import csv
import logging
import math
import os
import sys
import tempfile
from typing import Any, Dict, Iterable, Optional, Sequence, TextIO


logger = logging.getLogger('experiments')


def format_value(value: Any) -> str:
    """Shortest round-trip text for floats, empty for missing values"""
    if value is None:
        return ''
    if isinstance(value, bool):
        return '1' if value else '0'
    if isinstance(value, float):
        if math.isnan(value):
            return 'nan'
        return repr(value)
    if hasattr(value, 'dtype'):
        return format_value(value.item())
    return str(value)


def config_header(config: Dict[str, Any]) -> str:
    return '# config ' + ' '.join(f'{key}={format_value(value)}' for key, value in config.items())


def write_table(handle: TextIO, config: Dict[str, Any], columns: Sequence[str],
                rows: Iterable[Sequence[Any]], footer: Sequence[str] = ()) -> int:
    handle.write(config_header(config) + '\n')
    writer = csv.writer(handle, lineterminator='\n')
    writer.writerow(columns)
    count = 0
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"Row has {len(row)} values for {len(columns)} columns")
        writer.writerow([format_value(value) for value in row])
        count += 1
    for line in footer:
        handle.write(f'# {line}\n')
    return count


def emit_csv(path: Optional[str], config: Dict[str, Any], columns: Sequence[str],
             rows: Iterable[Sequence[Any]], footer: Sequence[str] = (),
             stream: Optional[TextIO] = None) -> int:
    """
    Write a result table with its config header line

    Args:
        path: Output file; the table goes to stream (stdout by default) when empty
        config: Effective configuration recorded in the header
        columns: Column names
        rows: One sequence of values per row
        footer: Summary lines appended as comments

    Returns:
        Number of data rows written

    The file appears only once complete: rows go to a temporary file in the
    target directory that replaces the target at the end, and the temporary
    file is removed if writing fails.
    """
    if not path:
        return write_table(stream or sys.stdout, config, columns, rows, footer)

    directory = os.path.dirname(os.path.abspath(path))
    fd, temp_path = tempfile.mkstemp(prefix='.capacity-', suffix='.csv.tmp', dir=directory)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as handle:
            count = write_table(handle, config, columns, rows, footer)
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise
    logger.info(f"Wrote {count} rows to {path}")
    return count
