"""Shared visual conventions.

Stability always maps to line style: solid where the branch is
dynamically stable, dotted where it is not.  Phase-diagram regions and
the four Kerr-strength curves each have a fixed color assignment so
panels stay comparable across figures.
"""

# region label -> fill color (stability maps)
REGION_COLORS = {
    "stable": "#e8c235",         # yellow
    "s12_unstable": "#5aa860",   # green
    "s3_unstable": "#e07b28",    # orange
    "all_unstable": "#4f7cc1",   # blue
}
REGION_ORDER = ("stable", "s12_unstable", "s3_unstable", "all_unstable")

# Kerr coefficient in uHz -> curve color
U_COLORS = {
    50.0: "#e07b28",    # orange
    100.0: "#e8c235",   # yellow
    150.0: "#7d4fc1",   # purple
    200.0: "#3f8f4a",   # green
}
FALLBACK_CURVE_COLOR = "#555555"

STABLE_LS = "-"
UNSTABLE_LS = ":"


def curve_color(u_uhz) -> str:
    return U_COLORS.get(float(u_uhz), FALLBACK_CURVE_COLOR)


def stable_segments(rows, stable_key="stable"):
    """Split rows into maximal runs with a constant stability flag.

    Yields (segment_rows, is_stable).  Rows with a blank flag (None)
    count as unstable; each segment repeats the previous boundary row so
    adjacent segments join up visually.
    """
    seg = []
    flag = None
    for row in rows:
        f = bool(row.get(stable_key))
        if flag is None or f == flag:
            seg.append(row)
        else:
            yield seg, flag
            seg = [seg[-1], row]
        flag = f
    if seg:
        yield seg, flag
