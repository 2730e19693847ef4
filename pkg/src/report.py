"""Phi4LDP - Report module

This module performs several tasks, which may all
be called from the `report` function:
- Collect the CSV tables of a results directory.
- Draw SVG line charts for every table found.
- Write a summary table (summary.csv) with one line per check.
Plots are derived from the CSVs only.
"""

# Path setup
import os
import sys

root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
src = os.path.join(root, "src")
if root not in sys.path: sys.path.append(root)
if src not in sys.path: sys.path.append(src)

# File-specific imports
import numpy as np                                              # noqa: E402
import matplotlib                                               # noqa: E402
matplotlib.use("Agg")
import matplotlib.pyplot as plt                                 # noqa: E402
from util.general import append_logs                            # noqa: E402
from util.style import print_header, print_result               # noqa: E402
from util.tables import read_columns, write_csv                 # noqa: E402

SUMMARY_COLUMNS = ["table", "check", "value"]

# Fixed SVG metadata keeps plots reproducible
SVG_METADATA = {"Date": None, "Creator": "Phi4LDP"}


def _save(fig, path: str):
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)


def plot_tail(columns: dict, path: str, title: str):
    """eps*log p against eps with the mapped Clopper-Pearson band."""
    eps = np.array(columns["epsilon"])
    censored = np.array(columns["censored"], dtype=bool)
    low = np.array(columns["ci_low"])
    high = np.array(columns["ci_high"])

    with np.errstate(divide="ignore"):
        band_low = eps * np.log(np.where(low > 0, low, np.nan))
    band_high = eps * np.log(high)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.fill_between(eps, band_low, band_high, alpha=0.3, label="95% CI")
    ax.plot(eps[~censored], np.array(columns["eps_log_p"])[~censored], "o-",
            label="eps log p")
    if np.any(censored):
        ax.plot(eps[censored], np.array(columns["eps_log_p"])[censored], "v",
                label="censored (3/n)")
    ax.set_xscale("log")
    ax.set_xlabel("eps")
    ax.set_ylabel("eps log P")
    ax.set_title(title)
    ax.legend()
    _save(fig, path)


def plot_moments(columns: dict, path: str):
    """(E X^p)^{1/p} against eps on log-log axes, one line per p."""
    eps = np.array(columns["epsilon"])
    ps = np.array(columns["p"])

    fig, ax = plt.subplots(figsize=(6, 4))
    for p in np.unique(ps):
        rows = ps == p
        ax.errorbar(eps[rows], np.array(columns["moment"])[rows],
                    yerr=np.array(columns["stderr"])[rows], marker="o",
                    label=f"p = {p:g}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("eps")
    ax.set_ylabel("(E X^p)^(1/p)")
    ax.legend()
    _save(fig, path)


def plot_mode_ldp(columns: dict, path: str):
    eps = np.array(columns["epsilon"])

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(eps, columns["eps_log_p_exact"], "o-", label="closed form")
    ax.plot(eps, columns["eps_log_p_mc"], "s", label="Monte Carlo")
    ax.plot(eps, columns["prediction"], "--", label="rate function")
    ax.set_xscale("log")
    ax.set_xlabel("eps")
    ax.set_ylabel("eps log P")
    ax.legend()
    _save(fig, path)


def plot_shifted(columns: dict, path: str):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(columns["epsilon"], columns["mean_sup_l2"],
                yerr=columns["stderr"], marker="o")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("eps")
    ax.set_ylabel("E sup ||v|| (L2)")
    _save(fig, path)


def plot_scaling(columns: dict, path: str):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(columns["p_value"], "o", label="scaled vs unscaled")
    if not np.all(np.isnan(columns["control_p_value"])):
        ax.plot(columns["control_p_value"], "x", label="doubled drift")
    ax.set_yscale("log")
    ax.set_xlabel("test (time, mode, part)")
    ax.set_ylabel("KS p-value")
    ax.legend()
    _save(fig, path)


def _loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def summarize(name: str, columns: dict) -> list:
    """One summary line per check derived from a table."""
    lines = []

    if name in ("tail", "linear_tail"):
        rows = [e for e, c in zip(columns["eps_log_p"], columns["censored"])
                if not c]
        lines.append([name, "rows", len(columns["epsilon"])])
        lines.append([name, "censored rows", int(sum(columns["censored"]))])
        if len(rows) > 1:
            lines.append([name, "eps log p decrease", rows[0] - rows[-1]])
    elif name == "moments":
        mean_rows = [i for i, p in enumerate(columns["p"]) if p == 1.0]
        eps = [columns["epsilon"][i] for i in mean_rows]
        means = [columns["moment"][i] for i in mean_rows]
        if len(eps) > 1:
            lines.append([name, "slope (p = 1)", _loglog_slope(eps, means)])
    elif name == "mode_ldp":
        lines.append([name, "rows within CI",
                      int(sum(columns["within_ci"]))])
        lines.append([name, "eps log P at smallest eps",
                      columns["eps_log_p_exact"][-1]])
    elif name == "shifted":
        if len(columns["epsilon"]) > 1:
            lines.append([name, "slope",
                          _loglog_slope(columns["epsilon"],
                                        columns["mean_sup_l2"])])
        lines.append([name, "max energy ratio",
                      max(columns["max_energy_ratio"])])
    elif name == "scaling":
        p_values = np.array(columns["p_value"])
        lines.append([name, "pass rate", float(np.mean(p_values > 0.01))])

    return lines


PLOTTERS = {
    "tail": lambda c, p: plot_tail(c, p, "shifted solution tail"),
    "linear_tail": lambda c, p: plot_tail(c, p, "linear vs Brownian tail"),
    "moments": plot_moments,
    "mode_ldp": plot_mode_ldp,
    "shifted": plot_shifted,
    "scaling": plot_scaling,
}

COLUMN_TYPES = {
    "tail": {"hits": int, "replicas": int, "censored": int},
    "linear_tail": {"hits": int, "replicas": int, "censored": int},
    "mode_ldp": {"hits": int, "replicas": int, "within_ci": int},
    "shifted": {"aborted": int},
    "scaling": {"k": int, "part": str},
}


def report(input_dir: str, verbose: bool = True) -> dict:
    """
    This is the main function of the report module.
    It turns every known CSV table in `input_dir` into an SVG plot
    and writes summary.csv. Returns {table: plot path}.
    """

    if verbose: print_header("\n==== MODULE 2 - REPORT ====")

    if not os.path.isdir(input_dir):
        raise ValueError(f"Results directory '{input_dir}' doesn't exist.")

    plots_dir = os.path.join(input_dir, "plots")
    if not os.path.isdir(plots_dir): os.makedirs(plots_dir)

    plots, lines = {}, []
    for name, plotter in PLOTTERS.items():
        table = os.path.join(input_dir, f"{name}.csv")
        if not os.path.exists(table):
            continue

        if verbose: print(f"Plotting {name}.csv...\t\t", end="", flush=True)
        columns = read_columns(table, COLUMN_TYPES.get(name))
        if len(next(iter(columns.values()), [])) == 0:
            if verbose: print_result(False)
            continue

        plots[name] = os.path.join(plots_dir, f"{name}.svg")
        plotter(columns, plots[name])
        lines.extend(summarize(name, columns))
        if verbose: print_result()

    if not plots:
        raise UserWarning(f"No result tables found in '{input_dir}'.")

    write_csv(os.path.join(input_dir, "summary.csv"), SUMMARY_COLUMNS, lines)

    logs_dir = os.path.join(input_dir, "logs")
    if os.path.isdir(logs_dir):
        append_logs(f"report: plotted {', '.join(plots)}",
                    os.path.join(logs_dir, "run_logs.txt"))

    if verbose:
        for table, check, value in lines:
            print(f"{table:<14s}{check:<30s}{value}")
        print_header("\nREPORT FINISHED")

    return plots
