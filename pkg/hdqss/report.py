"""Transcript and comparison-table rendering"""

import csv
import io
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd

from .analysis import comparison_frame, comparison_table, comparison_matrix_frame
from .harness import Transcript
from .models import EfficiencyReport


TRANSCRIPT_COLUMNS = ['index', 'line', 'event', 'outcome', 'public', 'fingerprint']
SETTING_COLUMNS = ['setting', 'value']
TREE_COLUMNS = ['agent', 'boss', 'level', 'included', 'lock']
DEFAULT_TABLE_M = (3, 50)


def _align(header: List[str], rows: List[List[str]]) -> str:
    """Left-aligned columns separated by two spaces; trailing blanks stripped"""
    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))

    lines = []
    for row in [header] + rows:
        lines.append('  '.join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return '\n'.join(lines) + '\n'


def _frame_rows(frame: pd.DataFrame) -> List[List[str]]:
    return [[str(v) for v in row] for row in frame.itertuples(index=False, name=None)]


def _m_values(reports: List[EfficiencyReport]) -> List[int]:
    return list(dict.fromkeys(r.m for r in reports))


def render_table_text(m_values: Sequence[int], include_features: bool = True) -> str:
    frame = comparison_matrix_frame(m_values, include_features=include_features)
    return _align(list(frame.columns), _frame_rows(frame))


def render_table_csv(reports: List[EfficiencyReport]) -> str:
    return comparison_frame(reports).to_csv(index=False, lineterminator='\n')


def _transcript_rows(transcript: Transcript) -> List[List[str]]:
    return [
        [str(e.index), str(e.line), e.event, e.outcome, e.public_text(), e.tree_fingerprint]
        for e in transcript.entries
    ]


def _setting_rows(transcript: Transcript) -> List[List[str]]:
    return [
        ['seed', str(transcript.seed)],
        ['key_bits', str(transcript.key_length)],
        ['qber_threshold', str(transcript.qber_threshold)],
    ]


def _tree_rows(transcript: Transcript) -> List[List[str]]:
    """Public shape of the final tree; keys never leave the harness"""
    nodes = transcript.final_tree.get('nodes', [])
    included = {n['agent_id']: set(n['included_subordinates']) for n in nodes}
    locks = transcript.final_tree.get('locks', {})

    rows = []
    for node in nodes:
        boss = node['boss']
        if boss is None:
            inclusion = ''
        else:
            inclusion = 'yes' if node['agent_id'] in included[boss] else 'no'
        if node['agent_id'] not in locks:
            lock = ''
        else:
            lock = 'disclosed' if locks[node['agent_id']] else 'pending'
        rows.append([node['agent_id'], boss or '', str(node['level']), inclusion, lock])
    return rows


def emit_report(transcript: Transcript, fmt: str = 'text') -> str:
    """Render a transcript plus every table the scenario emitted

    The csv form is the stable interface: one row per event in execution
    order, then blank-line separated blocks for the run settings, the final
    tree and each emitted table.
    """
    if fmt == 'text':
        header = (f"# seed={transcript.seed} key_bits={transcript.key_length} "
                  f"qber_threshold={transcript.qber_threshold}\n")
        parts = [header, _align(TRANSCRIPT_COLUMNS, _transcript_rows(transcript))]
        tree_rows = _tree_rows(transcript)
        if tree_rows:
            parts.append('\n' + _align(TREE_COLUMNS, tree_rows))
        for reports in transcript.tables:
            parts.append('\n' + render_table_text(_m_values(reports)))
        return ''.join(parts)

    if fmt == 'csv':
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(TRANSCRIPT_COLUMNS)
        writer.writerows(_transcript_rows(transcript))
        buffer.write('\n')
        writer.writerow(SETTING_COLUMNS)
        writer.writerows(_setting_rows(transcript))
        tree_rows = _tree_rows(transcript)
        if tree_rows:
            buffer.write('\n')
            writer.writerow(TREE_COLUMNS)
            writer.writerows(tree_rows)
        for reports in transcript.tables:
            buffer.write('\n')
            buffer.write(render_table_csv(reports))
        return buffer.getvalue()

    raise ValueError(f"Unknown format: {fmt}")


class TableReporter:
    """Writes the efficiency comparison in both renderings"""

    def generate_tables(self, m_values: Sequence[int], output_dir: str) -> Dict[str, Path]:
        Path(output_dir).mkdir(parents=True, exist_ok=True)
        outputs = {
            'csv': Path(output_dir) / 'comparison_table.csv',
            'text': Path(output_dir) / 'comparison_table.txt',
        }
        outputs['csv'].write_text(render_table_csv(comparison_table(m_values)), encoding='utf-8')
        print(f"Generated: {outputs['csv']}")
        outputs['text'].write_text(render_table_text(m_values), encoding='utf-8')
        print(f"Generated: {outputs['text']}")
        return outputs


def generate_table_cli(m_values: Optional[Sequence[int]], output_dir: Optional[str], fmt: str = 'text') -> None:
    m_values = list(dict.fromkeys(m_values or DEFAULT_TABLE_M))
    if output_dir:
        TableReporter().generate_tables(m_values, output_dir)
        return
    if fmt == 'csv':
        print(render_table_csv(comparison_table(m_values)), end='')
    else:
        print(render_table_text(m_values), end='')
