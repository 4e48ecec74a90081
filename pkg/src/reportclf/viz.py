"""Self-contained HTML heatmaps for attention explanations.

Each real token is wrapped in a span whose background opacity equals its
normalized attention weight; padding positions are omitted. The emitted
file references no external resources, so it can be opened or archived
as-is.
"""

from __future__ import annotations

import html
import json
from pathlib import Path

from .attention import AttentionExplanation

_PAGE = """<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>{title}</title>
<style>
body {{ font-family: Georgia, serif; max-width: 60em; margin: 2em auto; line-height: 1.9; }}
header {{ font-family: Helvetica, sans-serif; margin-bottom: 1.5em; }}
span.tok {{ padding: 0.1em 0.15em; border-radius: 0.2em; }}
</style>
</head>
<body>
<header><b>{title}</b></header>
<div id="report">
{body}
</div>
</body>
</html>
"""


def emit_heatmap(explanation: AttentionExplanation, out_path: str | Path) -> Path:
    """Write a single-file HTML heatmap; returns the path written."""
    task = f"task {explanation.task}" if explanation.task is not None else "task ?"
    title = f"{explanation.doc_id or 'document'} | {task} | predicted label {explanation.predicted_label}"
    spans = []
    for i in range(explanation.num_real):
        tok = html.escape(explanation.token_surface[i])
        alpha = float(explanation.normalized_weights[i])
        spans.append(f'<span class="tok" data-weight="{alpha:.6f}" style="background-color: rgba(217,48,37,{alpha:.6f})">{tok}</span>')
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(_PAGE.format(title=html.escape(title), body="\n".join(spans)), encoding="utf-8")
    return out_path


def write_explanation_json(explanation: AttentionExplanation, out_path: str | Path) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(explanation.to_json(), indent=1), encoding="utf-8")
    return out_path
