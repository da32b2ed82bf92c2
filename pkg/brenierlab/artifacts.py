"""
    Artifact writers. Every file is written to a temporary sibling and renamed into place,
    and carries the config digest and the seed of the run that produced it.
"""
import csv
import io
import json
import logging
import os
import tempfile
from collections.abc import Iterable, Sequence
from pathlib import Path

from brenierlab.verify import VerificationReport


__all__ = [
    "atomic_write",
    "write_reports",
    "read_reports",
    "write_csv",
    "write_svg",
    "summary_table",
]


logger = logging.getLogger(__name__)


def atomic_write(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temporary = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as stream:
            stream.write(text)
        os.replace(temporary, path)
    except BaseException:
        Path(temporary).unlink(missing_ok=True)
        raise
    logger.debug("wrote %s", path)
    return path


def write_reports(path: Path, reports: Sequence[VerificationReport], config_digest: str, seed: int) -> Path:
    """A JSON document {config_digest, seed, reports: [...]}, keys sorted for byte stability"""
    document = {
        "config_digest": config_digest,
        "seed": seed,
        "reports": [r.to_dict() for r in reports],
    }
    return atomic_write(path, json.dumps(document, sort_keys=True, indent=2) + "\n")


def read_reports(path: Path) -> list[dict]:
    document = json.loads(Path(path).read_text(encoding="utf-8"))
    return list(document.get("reports", list()))


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence], config_digest: str, seed: int) -> Path:
    """CSV with two leading comment lines holding the provenance"""
    buffer = io.StringIO()
    buffer.write(f"# config_digest={config_digest}\n# seed={seed}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if not isinstance(v, str) else v for v in row])
    return atomic_write(path, buffer.getvalue())


def write_svg(path: Path, x, series: dict[str, Sequence[float]], title: str, config_digest: str, seed: int):
    """
        A static line plot. Requires the optional matplotlib dependency; without it nothing is written.
    """
    try:
        import matplotlib
        matplotlib.use("Agg")
        from matplotlib import pyplot as plt
    except ImportError:
        logger.warning("matplotlib is not installed, skipping %s", path)
        return None
    matplotlib.rcParams["svg.hashsalt"] = config_digest
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, values in series.items():
        ax.plot(x, values, label=label)
    ax.set_title(title)
    ax.legend()
    buffer = io.StringIO()
    fig.savefig(buffer, format="svg", metadata={"Date": None, "Description": f"config_digest={config_digest} seed={seed}"})
    plt.close(fig)
    return atomic_write(path, buffer.getvalue())


def summary_table(reports: Iterable[dict]) -> str:
    """A fixed-width text table of check id, status, empirical, theoretical and slack"""
    lines = [f"{'check':<40} {'status':<13} {'empirical':>14} {'theoretical':>14} {'slack':>6}"]
    for r in reports:
        lines.append(f"{r['check_id']:<40} {r['status']:<13} {str(r['empirical']):>14.14} "
                     f"{str(r['theoretical']):>14.14} {str(r['slack']):>6.6}")
    return "\n".join(lines)
