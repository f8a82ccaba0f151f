"""Write-temp-then-rename helpers and the advisory state lock."""

import logging
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional, Tuple, Union

from src.utils.helpers import IoFailure, LockHeld

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]


def _temp_for(path: Path, data: bytes) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    with os.fdopen(fd, "wb") as f:
        f.write(data)
        f.flush()
        os.fsync(f.fileno())
    return Path(tmp)


class StagedWrites:
    """Collects file contents and publishes them together on commit.

    Nothing touches the destination paths until every temp file is written and
    every destination is checked. If a rename still fails, the destinations
    already replaced get their previous contents back.
    """

    def __init__(self):
        self._pending: List[Tuple[Path, bytes]] = []

    def add(self, path: PathLike, data: Union[bytes, str]) -> None:
        if isinstance(data, str):
            data = data.encode("utf-8")
        self._pending.append((Path(path), data))

    def _check_destinations(self) -> None:
        for path, _ in self._pending:
            if path.is_dir():
                raise IoFailure("output path is a directory", {"path": str(path)})
            if path.parent.exists() and not os.access(path.parent, os.W_OK | os.X_OK):
                raise IoFailure("output directory is not writable", {"path": str(path)})
            if path.exists() and not os.access(path, os.R_OK):
                raise IoFailure("existing output cannot be read back", {"path": str(path)})

    def commit(self) -> None:
        self._check_destinations()
        staged: List[Tuple[Path, Path]] = []
        replaced: List[Tuple[Path, Optional[bytes]]] = []
        try:
            for path, data in self._pending:
                staged.append((_temp_for(path, data), path))
            for tmp, path in staged:
                previous = path.read_bytes() if path.exists() else None
                os.replace(tmp, path)
                replaced.append((path, previous))
        except OSError as e:
            for tmp, _ in staged:
                if tmp.exists():
                    tmp.unlink()
            self._restore(replaced)
            raise IoFailure(f"cannot write output: {e}", {"path": str(e.filename or "")})
        logger.debug(f"Committed {len(staged)} files")

    def _restore(self, replaced: List[Tuple[Path, Optional[bytes]]]) -> None:
        for path, previous in reversed(replaced):
            try:
                if previous is None:
                    path.unlink(missing_ok=True)
                else:
                    os.replace(_temp_for(path, previous), path)
            except OSError as e:
                logger.error(f"Could not restore {path}: {e}")


def atomic_write(path: PathLike, data: Union[bytes, str]) -> None:
    batch = StagedWrites()
    batch.add(path, data)
    batch.commit()


@contextmanager
def state_lock(state_path: PathLike) -> Iterator[Path]:
    """Advisory lock: a ``<state>.lock`` file created exclusively."""
    lock = Path(f"{state_path}.lock")
    try:
        lock.parent.mkdir(parents=True, exist_ok=True)
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise LockHeld("another process holds the state lock", {"lock": str(lock)})
    except OSError as e:
        raise IoFailure(f"cannot create lock: {e}", {"lock": str(lock)})
    try:
        os.write(fd, str(os.getpid()).encode("ascii"))
        os.close(fd)
        yield lock
    finally:
        lock.unlink(missing_ok=True)
