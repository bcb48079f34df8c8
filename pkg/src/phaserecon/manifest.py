"""Dataset manifests: one WAV path per line, optional tab-separated split tag."""
from dataclasses import dataclass
from pathlib import Path

SPLITS = ("train", "valid", "test")


@dataclass(frozen=True)
class Entry:
    path: Path
    split: str = ""


def read_manifest(path, split=None):
    """Entries of a manifest, resolved relative to its directory.

    Every listed file must exist.  ``split`` keeps only entries with that
    tag (untagged entries are kept for every split).
    """
    path = Path(path)
    base = path.parent
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            name, _, tag = line.partition("\t")
            tag = tag.strip()
            if tag and tag not in SPLITS:
                raise ValueError(f"{path}:{lineno}: unknown split {tag!r}")
            wav = Path(name.strip())
            if not wav.is_absolute():
                wav = base / wav
            if not wav.is_file():
                raise FileNotFoundError(f"{path}:{lineno}: no such file {wav}")
            entries.append(Entry(wav, tag))
    if split is not None:
        entries = [e for e in entries if e.split in ("", split)]
    return entries


def write_manifest(path, entries):
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(f"{e.path}\t{e.split}\n" if e.split else f"{e.path}\n")
