"""Result serialization: CSV tables, a gnuplot script, and rendered figures.

CSV files are the machine contract: comma separated, ``.`` decimal point,
scientific notation with 17 significant digits, deterministic row order.
The gnuplot script and the PNG figures are convenience renderings of the
same tables.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

RESULTS_HEADER = "mu,R,h,zeta,l,j,re_S,im_S,J_l,unitarity_defect,cond_E,min_norm_l"
CONVERGENCE_HEADER = "mu,R,err_fro,J_max,lambda_hat,two_gamma_hat"
INCOMPLETE_TRAILER = "# INCOMPLETE"


def _num(x) -> str:
    if x is None or (isinstance(x, float) and not np.isfinite(x)):
        return "nan"
    return f"{float(x):.16e}"


def results_rows(result) -> list[str]:
    """CSV rows of one scattering result: one line per (l, j), 1-based."""
    rows = []
    M = result.S.shape[0]
    for l in range(M):
        for j in range(M):
            rows.append(
                ",".join(
                    [
                        _num(result.mu),
                        _num(result.R),
                        _num(result.h),
                        _num(result.zeta),
                        str(l + 1),
                        str(j + 1),
                        _num(result.S[l, j].real),
                        _num(result.S[l, j].imag),
                        _num(result.J[l]),
                        _num(result.unitarity_defect),
                        _num(result.cond_E),
                        _num(result.minimizer_norms[l]),
                    ]
                )
            )
    return rows


def write_results_csv(path: Path, results: Sequence, incomplete: bool = False) -> None:
    lines = [RESULTS_HEADER]
    for res in results:
        lines.extend(results_rows(res))
    if incomplete:
        lines.append(INCOMPLETE_TRAILER)
    Path(path).write_text("\n".join(lines) + "\n")


def write_convergence_csv(path: Path, studies: Sequence) -> None:
    lines = [CONVERGENCE_HEADER]
    for st in studies:
        lam = st.lambda_hat
        two_gamma = st.two_gamma_hat
        for R, err, jm in zip(st.R_values, st.errors, st.j_max):
            lines.append(
                ",".join(
                    [_num(st.mu), _num(R), _num(err), _num(jm), _num(lam), _num(two_gamma)]
                )
            )
    Path(path).write_text("\n".join(lines) + "\n")


def write_plot_script(path: Path, results_csv: str = "results.csv",
                      convergence_csv: str = "convergence.csv") -> None:
    """Emit a gnuplot script that renders the two standard views."""
    text = f"""# gnuplot script generated by wavescat
set datafile separator ","
set key outside

set terminal pngcairo size 900,600
set output "err_vs_R.png"
set logscale y
set xlabel "R"
set ylabel "|| S^R - S^{{Rref}} ||_F"
plot "{convergence_csv}" every ::1 using 2:3 with linespoints title "err(R)"

unset logscale y
set output "S_vs_mu.png"
set xlabel "mu"
set ylabel "|S_lj|"
plot "{results_csv}" every ::1 using 1:(sqrt($7**2 + $8**2)) with points title "|S_lj|"
"""
    Path(path).write_text(text)


def render_figures(outdir: Path, results: Sequence, studies: Sequence) -> list[Path]:
    """Render convergence and |S| figures as PNG files; returns their paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    written = []

    if studies:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for st in studies:
            ax.semilogy(st.R_values, st.errors, "o-", label=f"mu={st.mu:g}")
            if st.lambda_hat is not None:
                rr = np.linspace(st.R_values[0], st.R_values[-1], 50)
                ax.semilogy(
                    rr,
                    np.exp(st.lambda_fit.intercept - st.lambda_hat * rr),
                    "--",
                    color="gray",
                    linewidth=0.8,
                )
        ax.set_xlabel("R")
        ax.set_ylabel(r"$\|S^R - S^{R_{ref}}\|_F$")
        ax.legend(fontsize=8)
        fig.tight_layout()
        p = outdir / "err_vs_R.png"
        fig.savefig(p, dpi=120)
        plt.close(fig)
        written.append(p)

    if results:
        by_mu: dict[tuple[int, int], list[tuple[float, float]]] = {}
        R_max = max(r.R for r in results)
        for r in results:
            if r.R != R_max:
                continue
            M = r.S.shape[0]
            for l in range(M):
                for j in range(M):
                    by_mu.setdefault((l + 1, j + 1), []).append(
                        (r.mu, abs(r.S[l, j]))
                    )
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for (l, j), pts in sorted(by_mu.items()):
            pts = sorted(pts)
            ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-",
                    label=f"|S_{l}{j}|", markersize=3)
        ax.set_xlabel("mu")
        ax.set_ylabel("|S_lj|")
        ax.set_ylim(bottom=0.0)
        ax.legend(fontsize=7, ncol=2)
        fig.tight_layout()
        p = outdir / "S_vs_mu.png"
        fig.savefig(p, dpi=120)
        plt.close(fig)
        written.append(p)
    return written
