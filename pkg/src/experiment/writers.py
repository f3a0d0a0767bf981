import os
import tempfile
from pathlib import Path

import pandas as pd
from pydantic import BaseModel


def atomic_write_text(path: Path, text: str) -> Path:
    """Write to a temp file in the target directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    return atomic_write_text(path, frame.to_csv(index=False, lineterminator="\n"))


def write_model_json(model: BaseModel, path: Path) -> Path:
    return atomic_write_text(path, model.model_dump_json(indent=2) + "\n")


def check_writable(directory: Path) -> None:
    """Raise OSError unless files can be created in directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(dir=directory, prefix=".writable.", delete=True):
        pass
