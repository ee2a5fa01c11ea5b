import csv
from pathlib import Path
from typing import Dict, List

from .harness import Transcript
from .report import emit_report


class TranscriptStorage:
    def __init__(self, path: str):
        self.path = path

    def save(self, transcript: Transcript, fmt: str = 'csv') -> Path:
        Path(self.path).parent.mkdir(parents=True, exist_ok=True)

        with open(self.path, 'w', newline='', encoding='utf-8') as f:
            f.write(emit_report(transcript, fmt))
        return Path(self.path)

    def load_rows(self) -> List[Dict[str, str]]:
        """Event rows of a csv transcript; emitted tables after the blank line are skipped"""
        with open(self.path, 'r', newline='', encoding='utf-8') as f:
            lines = []
            for line in f:
                if not line.strip():
                    break
                lines.append(line)
        return list(csv.DictReader(lines))
