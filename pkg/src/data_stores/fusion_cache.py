"""
Fusion Cache: memoized product tables of fusion rings persisted between runs.
"""
import json
import logging
import re
from pathlib import Path
from typing import Optional, Union

from src.fusion.fusionring import FusionRing, ring_content_hash

logger = logging.getLogger(__name__)


class FusionCache:
    """One JSON file per ring definition, named by its content hash and holding the memo table.

    The full hash is repeated inside the file; a file whose stored hash disagrees is stale and ignored.
    """

    def __init__(self, directory: Optional[Union[str, Path]]):
        self.directory = Path(directory) if directory else None

    @property
    def enabled(self) -> bool:
        return self.directory is not None

    def path_for(self, ring: FusionRing) -> Path:
        stem = re.sub(r"[^A-Za-z0-9_.-]+", "_", ring.name)
        return self.directory / f"{stem}-{ring_content_hash(ring)}.json"

    def load(self, ring: FusionRing) -> bool:
        """Preloads ``ring`` from its cache file. Returns True on a hit."""
        if not self.enabled:
            return False
        path = self.path_for(ring)
        if not path.exists():
            logger.info("fusion cache miss for %s", ring.name)
            return False
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            logger.warning("ignoring unreadable fusion cache %s: %s", path, e)
            return False
        if data.get("hash") != ring_content_hash(ring):
            logger.warning("ignoring stale fusion cache %s", path)
            return False
        ring.preload(data.get("table", {}))
        logger.info("fusion cache hit for %s: %d products", ring.name, len(data.get("table", {})))
        return True

    def store(self, ring: FusionRing):
        if not self.enabled:
            return
        self.directory.mkdir(parents=True, exist_ok=True)
        document = {"hash": ring_content_hash(ring), "table": ring.table_snapshot()}
        self.path_for(ring).write_text(json.dumps(document, indent=1, sort_keys=True), encoding="utf-8")
        logger.info("stored %d products of %s", len(document["table"]), ring.name)

