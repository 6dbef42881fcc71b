"""Render benchmark CSVs into the standard error-vs-sweep line figures.

Consumes the harness CSV schema
(estimator,sweep_kind,sweep_value,nmse,draws,wall_time_ms) and draws one
line per estimator. The estimator-to-style table is fixed so figures stay
comparable across runs.
"""

from dataclasses import dataclass, field

from matplotlib.figure import Figure

CSV_HEADER = "estimator,sweep_kind,sweep_value,nmse,draws,wall_time_ms"

X_LABELS = {
    "snr": "SNR [dB]",
    "pilots": "number of pilots",
    "antennas": "number of BS antennas",
    "bs_antennas": "number of BS antennas",
}

# fixed style table; unknown estimators fall back to a neutral cycle
STYLES = {
    "genie": dict(color="black", marker="", linestyle="-"),
    "ge": dict(color="black", marker="", linestyle="--"),
    "ml": dict(color="tab:red", marker="o", linestyle="-."),
    "fe": dict(color="tab:green", marker="^", linestyle="--"),
    "cnn": dict(color="tab:blue", marker="o", linestyle="-"),
    "ls": dict(color="dimgray", marker="s", linestyle=":"),
    "omp": dict(color="darkorange", marker="x", linestyle=":"),
}
FALLBACK_COLORS = ("tab:purple", "tab:brown", "tab:pink", "tab:olive")


@dataclass
class PlotSpec:
    csv_paths: list
    x_label: str = "snr"
    log_y: bool = True
    out_path: str = "figure.svg"
    title: str = ""

    def __post_init__(self):
        if not self.csv_paths:
            raise ValueError("need at least one CSV file")


@dataclass
class Series:
    estimator: str
    x: list = field(default_factory=list)
    y: list = field(default_factory=list)


def read_series(path) -> dict:
    """Parse one CSV into {estimator: Series}, sorted by sweep value.
    Malformed content raises with the file and line number."""
    series: dict[str, Series] = {}
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"{path}:1: unexpected header {header!r}")
        for lineno, line in enumerate(f, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(",")
            if len(parts) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
            name = parts[0]
            try:
                x = float(parts[2])
                y = float(parts[3])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric sweep value or "
                                 f"error column") from None
            series.setdefault(name, Series(name))
            series[name].x.append(x)
            series[name].y.append(y)
    for s in series.values():
        order = sorted(range(len(s.x)), key=lambda i: s.x[i])
        s.x = [s.x[i] for i in order]
        s.y = [s.y[i] for i in order]
    return series


def render(spec: PlotSpec) -> Figure:
    """Draw the figure, save it to spec.out_path, and return it. The plotted
    line data stays accessible on the returned figure's axes."""
    merged: dict[str, Series] = {}
    for path in spec.csv_paths:
        for name, s in read_series(path).items():
            if name in merged:
                merged[name].x.extend(s.x)
                merged[name].y.extend(s.y)
            else:
                merged[name] = s
    for s in merged.values():
        order = sorted(range(len(s.x)), key=lambda i: s.x[i])
        s.x = [s.x[i] for i in order]
        s.y = [s.y[i] for i in order]

    fig = Figure(figsize=(7.0, 4.2))
    ax = fig.add_subplot(111)
    fallback = 0
    for name in sorted(merged):
        s = merged[name]
        style = STYLES.get(name)
        if style is None:
            style = dict(color=FALLBACK_COLORS[fallback % len(FALLBACK_COLORS)],
                         marker="d", linestyle="-")
            fallback += 1
        ax.plot(s.x, s.y, label=name, linewidth=1.4, **style)
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel(X_LABELS.get(spec.x_label, spec.x_label))
    ax.set_ylabel("normalized MSE")
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, which="both", alpha=0.4)
    if merged:
        ax.legend()
    fig.savefig(spec.out_path, bbox_inches="tight")
    return fig
