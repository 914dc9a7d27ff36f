"""JSON file storage for tableau files, reports and trajectories."""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import BaseModel, ValidationError

from ..config import RESULTS_DIR
from ..errors import MrGarkError, SchemeFileError
from ..models import FlatGarkTableau, MrGarkScheme, OutputFormat, Trajectory

logger = logging.getLogger(__name__)

Scheme = Union[MrGarkScheme, FlatGarkTableau]


class SchemeStorage:
    """Reads and writes scheme files and analysis results."""

    def __init__(self, results_dir: Path = RESULTS_DIR):
        self.results_dir = results_dir

    def _load(self, path: Path) -> Dict[str, Any]:
        """Load raw JSON data from a file."""
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise SchemeFileError(f"file not found: {path}") from None
        except (json.JSONDecodeError, OSError) as exc:
            raise SchemeFileError(f"cannot read {path}: {exc}") from None
        if not isinstance(data, dict):
            raise SchemeFileError(f"{path} must contain a JSON object")
        return data

    def _save(self, path: Path, data: Any) -> Path:
        """Save data as indented JSON, creating parent directories."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(data, indent=2, default=str))
        logger.info("Wrote %s", path)
        return path

    def _default_path(self, stem: str, suffix: str) -> Path:
        return self.results_dir / f"{stem}.{suffix}"

    def load_scheme(self, path: Path) -> Scheme:
        """Parse a tableau file; files with an "A_ff" key are flat GARK tableaus."""
        data = self._load(path)
        model = FlatGarkTableau if "A_ff" in data else MrGarkScheme
        try:
            return model.model_validate(data)
        except ValidationError as exc:
            raise SchemeFileError(f"invalid tableau file {path}", errors=exc.errors(include_url=False)) from None
        except MrGarkError as exc:
            raise SchemeFileError(f"invalid tableau file {path}: {exc.message}") from None

    def dump_scheme(self, scheme: Scheme) -> Dict[str, Any]:
        return scheme.model_dump(mode="json", exclude_none=True)

    def save_scheme(self, scheme: Scheme, path: Optional[Path] = None) -> Path:
        path = path or self._default_path(scheme.name or "scheme", "json")
        return self._save(path, self.dump_scheme(scheme))

    def save_report(self, report: Union[BaseModel, Dict[str, Any]], path: Path) -> Path:
        data = report.model_dump(mode="json") if isinstance(report, BaseModel) else report
        return self._save(path, data)

    def trajectory_csv(self, trajectory: Trajectory) -> str:
        """CSV with a time column followed by one column per state component."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        dim = trajectory.states.shape[1]
        writer.writerow(["t"] + [f"y{i}" for i in range(dim)])
        for t, y in zip(trajectory.times, trajectory.states):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in y])
        return buffer.getvalue()

    def export_trajectory(
        self,
        trajectory: Trajectory,
        path: Path,
        fmt: OutputFormat = OutputFormat.CSV,
    ) -> Path:
        """Write a trajectory as CSV (t, y components) or JSON (with stats)."""
        if fmt is OutputFormat.JSON:
            return self._save(path, trajectory.model_dump(mode="json"))
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.trajectory_csv(trajectory))
        logger.info("Wrote %s", path)
        return path


# Global storage instance
storage = SchemeStorage()
