"""
Ball-table cache
Stores closed ball tables as versioned line-oriented text so repeated commands
skip the enumeration
"""

import logging
import os
import tempfile
from pathlib import Path
from typing import Optional

from config import config
from coset_space import BallTable, metric_ball
from group_core import PairPresentation
from pair_config import PairConfig

logger = logging.getLogger(__name__)

CACHE_VERSION = 1
HEADER = f"hecke-ball-cache {CACHE_VERSION}"


def dump_table(table: BallTable, config_hash: str) -> str:
    """Serialize a closed table, one coset per line"""
    family = table.pres.family
    edges = {}
    for (src, gi), dst in sorted(table.edges.items()):
        edges.setdefault(src, []).append(f"{gi}:{dst}")
    lines = [
        HEADER,
        f"config {config_hash}",
        f"radius {table.radius}",
        f"cosets {len(table)}",
    ]
    for cid in range(len(table)):
        layer = table.layers[cid]
        fields = [
            str(cid),
            family.encode(table.reps[cid]),
            repr(table.keys[cid]),
            '-' if layer is None else str(layer),
            str(table.depths[cid]),
            str(table.orbit_ids[cid]),
            ' '.join(str(i) for i in table.words[cid]),
            ','.join(edges.get(cid, [])),
        ]
        lines.append('\t'.join(fields))
    return '\n'.join(lines) + '\n'


def load_table(text: str, pres: PairPresentation, config_hash: str) -> Optional[BallTable]:
    """Rebuild a table; None when the header, hash or any key does not match"""
    lines = text.splitlines()
    if len(lines) < 4 or lines[0] != HEADER or lines[1] != f"config {config_hash}":
        return None
    radius = int(lines[2].split()[1])
    count = int(lines[3].split()[1])
    if len(lines) != 4 + count:
        return None

    table = BallTable(pres=pres, radius=radius)
    orbit_ids = []
    for line in lines[4:]:
        cid, rep, key, layer, depth, orbit, word, edges = line.split('\t')
        g = pres.family.decode(rep)
        word_ids = tuple(int(i) for i in word.split()) if word else ()
        new_id = table.add(g, word_ids, None if layer == '-' else int(layer))
        if new_id != int(cid) or repr(table.keys[new_id]) != key:
            logger.warning(f"⚠️ Cache entry for coset {cid} does not match; ignoring cache")
            return None
        table.depths.append(int(depth))
        orbit_ids.append(int(orbit))
        for item in filter(None, edges.split(',')):
            gi, dst = item.split(':')
            table.edges[(new_id, int(gi))] = int(dst)

    members = {}
    for cid, orbit in enumerate(orbit_ids):
        members.setdefault(orbit, []).append(cid)
    table.orbit_ids = orbit_ids
    table.orbits = [tuple(members[o]) for o in range(len(members))]
    table.closed = True
    return table


class BallCache:
    """Disk cache of closed ball tables keyed by config hash and radius"""

    def __init__(self, cache_dir: Optional[Path] = None, enabled: Optional[bool] = None):
        self.cache_dir = Path(cache_dir) if cache_dir is not None else config.cache_path
        self.enabled = config.cache_enabled if enabled is None else enabled

    def path_for(self, pair: PairConfig, radius: int) -> Path:
        return self.cache_dir / f"{pair.config_hash()[:16]}_r{radius}.ball"

    def load(self, pair: PairConfig, pres: PairPresentation, radius: int) -> Optional[BallTable]:
        if not self.enabled or not pres.use_coset_keys:
            return None
        path = self.path_for(pair, radius)
        if not path.exists():
            return None
        try:
            table = load_table(path.read_text(encoding='utf-8'), pres, pair.config_hash())
        except (OSError, ValueError) as e:
            logger.warning(f"⚠️ Unreadable cache file {path}: {e}")
            return None
        if table is not None:
            logger.info(f"✅ Loaded ball of radius {radius} from {path}")
        return table

    def save(self, pair: PairConfig, table: BallTable) -> None:
        """Write-then-rename so readers never see a partial file"""
        if not self.enabled or not table.pres.use_coset_keys or not table.closed:
            return
        path = self.path_for(pair, table.radius)
        try:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=self.cache_dir, suffix='.tmp')
            with os.fdopen(fd, 'w', encoding='utf-8') as f:
                f.write(dump_table(table, pair.config_hash()))
            os.replace(tmp, path)
            logger.info(f"✅ Cached ball of radius {table.radius} at {path}")
        except OSError as e:
            logger.warning(f"⚠️ Could not write cache {path}: {e}")

    def metric_ball(self, pair: PairConfig, pres: PairPresentation, radius: int) -> BallTable:
        """Cached metric_ball"""
        table = self.load(pair, pres, radius)
        if table is None:
            table = metric_ball(pres, radius)
            self.save(pair, table)
        return table


# Singleton instance
_ball_cache = None


def get_ball_cache() -> BallCache:
    """Get or create the ball cache singleton"""
    global _ball_cache
    if _ball_cache is None:
        _ball_cache = BallCache()
    return _ball_cache
