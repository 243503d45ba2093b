from typing import Any, List, Optional, Sequence


def format_cell(value: Any) -> str:
    """Render one report value for a text table.

    Floats keep two decimals, booleans read yes/no, None is blank.

    Examples:
        >>> format_cell(0.125), format_cell(True), format_cell(None)
        ('0.12', 'yes', '')
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value).replace("|", "\\|")


def separator_cell(width: int, alignment: str) -> str:
    """GitHub-flavored separator cell for a column.

    Alignment rules:
    - "left" → ----
    - "center" → :--:
    - "right" → ---:
    """
    width = max(width, 3)
    if alignment == "center":
        return ":" + "-" * (width - 2) + ":"
    if alignment == "right":
        return "-" * (width - 1) + ":"
    return "-" * width


def render_table(
    headers: Sequence[str], rows: Sequence[Sequence[Any]], alignments: Optional[List[str]] = None
) -> str:
    """Render rows as a GitHub-flavored markdown table with padded columns.

    Args:
        headers: Column titles
        rows: Row values; each row must have one value per header
        alignments: Per-column "left" | "center" | "right" (default: numbers right, text left)

    Returns:
        str: Table text ending with a newline

    Raises:
        ValueError: If a row's cell count differs from the header count

    Examples:
        >>> print(render_table(["Key", "Hop"], [["0111000", "B"]]), end="")
        | Key     | Hop |
        |---------|-----|
        | 0111000 | B   |
    """
    cells = [[format_cell(v) for v in row] for row in rows]
    for row in cells:
        if len(row) != len(headers):
            raise ValueError(f"row has {len(row)} cells, expected {len(headers)}")
    if alignments is None:
        alignments = []
        for col in range(len(headers)):
            values = [row[col] for row in rows]
            numeric = values and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values)
            alignments.append("right" if numeric else "left")
    widths = [max([len(h), 3] + [len(row[i]) for row in cells]) for i, h in enumerate(headers)]

    def line(values: Sequence[str]) -> str:
        padded = []
        for value, width, alignment in zip(values, widths, alignments):
            padded.append(value.rjust(width) if alignment == "right" else value.ljust(width))
        return "| " + " | ".join(padded) + " |"

    out = [line(headers)]
    out.append("|" + "|".join(separator_cell(w + 2, a) for w, a in zip(widths, alignments)) + "|")
    out.extend(line(row) for row in cells)
    return "\n".join(out) + "\n"
