"""
p4f-cfa - Benchmark Corpus
Loads the benchmark programs listed in the corpus manifest.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd

from config.settings import settings
from core.exceptions import AnalysisError
from core.models import CorpusEntry
from core.syntax import Program, parse_program

logger = logging.getLogger(__name__)


class CorpusNotFound(AnalysisError):
    """No corpus entry with the requested name"""

    def __init__(self, name: str, available: List[str]):
        self.name = name
        self.available = available
        super().__init__(f"program '{name}' not found. Available: {', '.join(available)}")


class CorpusService:
    """Benchmark programs of one corpus directory"""

    def __init__(self, corpus_dir: Optional[Path] = None):
        self.corpus_dir = Path(corpus_dir or settings.CORPUS_DIR)
        self._entries: Optional[Dict[str, CorpusEntry]] = None

    def _load(self) -> Dict[str, CorpusEntry]:
        manifest = self.corpus_dir / settings.CORPUS_MANIFEST
        if manifest.exists():
            df = pd.read_csv(manifest, dtype={"name": str, "file": str, "notes": str}, keep_default_na=False)
        else:
            # a bare directory of sources; every file is an entry
            files = sorted(self.corpus_dir.glob("*.scm"))
            df = pd.DataFrame({
                "name": [f.stem for f in files],
                "file": [f.name for f in files],
                "expected_oracle_completes": [False] * len(files),
                "notes": [""] * len(files),
            })
        entries: Dict[str, CorpusEntry] = {}
        for row in df.itertuples(index=False):
            path = self.corpus_dir / row.file
            entries[row.name] = CorpusEntry(
                name=row.name,
                source=path.read_text(),
                expected_oracle_completes=str(row.expected_oracle_completes).lower() == "true",
                notes=row.notes,
            )
        logger.info("loaded %d corpus programs from %s", len(entries), self.corpus_dir)
        return entries

    @property
    def entries(self) -> Dict[str, CorpusEntry]:
        if self._entries is None:
            self._entries = self._load()
        return self._entries

    def list_entries(self) -> List[CorpusEntry]:
        return list(self.entries.values())

    def get_names(self) -> List[str]:
        return list(self.entries)

    def get_entry(self, name: str) -> CorpusEntry:
        """
        Raises:
            CorpusNotFound: no entry named `name`
        """
        if name not in self.entries:
            raise CorpusNotFound(name, self.get_names())
        return self.entries[name]

    def get_program(self, name: str) -> Program:
        return parse_program(self.get_entry(name).source)

    def __len__(self) -> int:
        return len(self.entries)


corpus_service = CorpusService()
