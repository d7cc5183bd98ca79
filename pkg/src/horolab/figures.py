"""Static SVG renderings of the convergence and growth report rows.

Figures are pure renderings of already-computed CSV rows: no new computation
happens here.  Output bytes are deterministic for a fixed seed (hash salt
pinned, date metadata stripped, Agg backend).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _context(seed: int):
    return plt.rc_context(
        {
            "svg.hashsalt": f"horolab-{seed}",
            "figure.figsize": (5.0, 3.2),
            "font.size": 9,
            "axes.grid": True,
            "grid.alpha": 0.3,
        }
    )


def _save(fig, path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    return path


def render_convergence(rows: list[dict], path: Path, seed: int, title: str) -> Path:
    """Deviation of spherical averages from the space average, against n."""
    with _context(seed):
        fig, ax = plt.subplots()
        ns = [r["n"] for r in rows]
        devs = [float(r["deviation"]) for r in rows]
        ax.plot(ns, devs, marker="o", lw=1.2)
        ax.set_yscale("log" if all(d > 0 for d in devs) else "linear")
        ax.set_xlabel("sphere radius n")
        ax.set_ylabel("|average - mean(f)|")
        ax.set_title(title)
        return _save(fig, path)


def render_tv(rows: list[dict], path: Path, seed: int, title: str) -> Path:
    """Total-variation distance of the joint law from product form, against n."""
    with _context(seed):
        fig, ax = plt.subplots()
        ns = [r["n"] for r in rows]
        tvs = [float(r["tv_distance"]) for r in rows]
        ax.plot(ns, tvs, marker="s", lw=1.2, color="tab:red")
        ax.set_yscale("log" if all(t > 0 for t in tvs) else "linear")
        ax.set_xlabel("sphere radius n")
        ax.set_ylabel("TV(joint, product)")
        ax.set_title(title)
        return _save(fig, path)


def render_growth(sizes: list[int], rate: float, path: Path, seed: int, title: str) -> Path:
    """log sphere sizes with the fitted growth slope."""
    with _context(seed):
        fig, ax = plt.subplots()
        ns = list(range(len(sizes)))
        ax.semilogy(ns, sizes, marker="o", lw=1.2, label="|S(e,n)|")
        if len(sizes) > 1:
            import math

            anchor = sizes[len(sizes) // 2]
            mid = len(sizes) // 2
            fit = [anchor * math.exp(rate * (n - mid)) for n in ns]
            ax.semilogy(ns, fit, "--", lw=1.0, label=f"slope {rate:.4f}")
        ax.set_xlabel("n")
        ax.set_ylabel("sphere size")
        ax.legend()
        ax.set_title(title)
        return _save(fig, path)
