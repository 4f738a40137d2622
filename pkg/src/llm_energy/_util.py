"""Internal helpers shared across modules."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write ``text`` to ``path`` atomically (write to a temp file, then rename).

    The temporary file lives in the destination directory so the final
    ``os.replace`` is a same-filesystem atomic rename.  Content is UTF-8
    with LF line endings preserved as given.
    """
    target = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise
