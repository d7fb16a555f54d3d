"""
Run manifests: line-oriented key=value sidecars next to every artifact
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union
import hashlib
import json
import logging

from . import __version__
from .error_handling import DataException

logger = logging.getLogger("qrc.manifest")

SUFFIX = ".manifest"


def file_digest(path: Union[str, Path]) -> str:
    """SHA-256 of the file content"""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def manifest_path(artifact: Union[str, Path]) -> Path:
    artifact = Path(artifact)
    return artifact.with_name(artifact.name + SUFFIX)


@dataclass
class RunManifest:
    """
    Everything needed to re-run a command: argv, parameters, seed and the
    digests of its inputs. No wall-clock data, so re-runs reproduce it.
    """
    command: str
    argv: List[str]
    version: str = __version__
    seed: Optional[int] = None
    params: Dict[str, str] = field(default_factory=dict)
    inputs: Dict[str, str] = field(default_factory=dict)
    diagnostics: Dict[str, str] = field(default_factory=dict)

    def add_input(self, path: Union[str, Path]):
        self.inputs[str(path)] = file_digest(path)

    def lines(self) -> List[str]:
        lines = [
            f"command={self.command}",
            f"argv={json.dumps(self.argv)}",
            f"version={self.version}",
            f"seed={'' if self.seed is None else self.seed}",
        ]
        for prefix, values in (("param", self.params), ("input", self.inputs), ("diag", self.diagnostics)):
            for key in sorted(values):
                lines.append(f"{prefix}.{key}={values[key]}")
        return lines

    def write(self, artifact: Union[str, Path]) -> Path:
        path = manifest_path(artifact)
        path.write_text("\n".join(self.lines()) + "\n", encoding="utf-8")
        logger.debug(f"Wrote manifest {path}", extra={"path": str(path)})
        return path

    @classmethod
    def read(cls, path: Union[str, Path]) -> "RunManifest":
        fields: Dict[str, str] = {}
        grouped: Dict[str, Dict[str, str]] = {"param": {}, "input": {}, "diag": {}}
        for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise DataException(f"{path}:{number}: expected key=value", error_code="BAD_MANIFEST")
            prefix, dot, name = key.partition(".")
            if dot and prefix in grouped:
                grouped[prefix][name] = value
            else:
                fields[key] = value

        if "command" not in fields or "argv" not in fields:
            raise DataException(f"{path}: missing command or argv", error_code="BAD_MANIFEST")
        try:
            argv = json.loads(fields["argv"])
        except json.JSONDecodeError:
            raise DataException(f"{path}: argv is not a JSON list", error_code="BAD_MANIFEST") from None
        seed = fields.get("seed", "")
        return cls(
            command=fields["command"],
            argv=list(argv),
            version=fields.get("version", ""),
            seed=int(seed) if seed else None,
            params=grouped["param"],
            inputs=grouped["input"],
            diagnostics=grouped["diag"],
        )

    def changed_inputs(self) -> List[str]:
        """Inputs that are missing or whose content no longer matches"""
        changed = []
        for path, digest in sorted(self.inputs.items()):
            if not Path(path).exists() or file_digest(path) != digest:
                changed.append(path)
        return changed
