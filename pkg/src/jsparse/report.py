"""CSV and SVG emission for sweeps, plus dense-matrix CSV I/O."""
from __future__ import annotations

import csv
import io
import math

import numpy as np

RATES_HEADER = ("m", "trials", "successes", "rate")
TRIALS_HEADER = ("m", "trial_index", "success", "residual", "solver_iterations",
                 "converged", "seed_used")


class MatrixFormatError(ValueError):
    pass


def fmt(value):
    """Shortest round-trip text for a number; booleans as true/false."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def rates_csv(result):
    return _csv_text(RATES_HEADER, [(r.m, r.trials, r.successes, r.rate) for r in result.rates])


def trials_csv(result):
    return _csv_text(TRIALS_HEADER, [
        (r.m, r.trial_index, r.success, r.residual, r.solver_iterations, r.converged,
         r.seed_used) for r in result.records])


def theory_rows(config, geom, bounds, thresholds):
    e1, e2, e3, e4 = geom.partition.sizes
    return [
        ("n", config.n), ("k", config.k), ("l", config.l), ("lambda", config.lam),
        ("e1", e1), ("e2", e2), ("e3", e3), ("e4", e4),
        ("cos_sum", geom.cos_sum), ("cos_sum_spread", geom.cos_spread),
        ("psi_p", bounds.psi_p), ("psi_p_over_l", bounds.psi_p / config.l),
        ("lower", bounds.lower), ("xi_bar", bounds.xi_bar), ("tau_star", bounds.tau_star),
        ("valid_lower", bounds.valid_lower),
        ("eta", thresholds.eta), ("a_eta", thresholds.a_eta),
        ("m_success", thresholds.m_success), ("m_failure", thresholds.m_failure),
    ]


def theory_csv(rows):
    return _csv_text(("quantity", "value"), rows)


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def read_matrix(path):
    """Header-free, row-major numeric CSV into a 2-D float array."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except UnicodeDecodeError as exc:
        raise MatrixFormatError(f"{path}: not UTF-8 text") from exc
    if not rows:
        raise MatrixFormatError(f"{path}: empty matrix file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise MatrixFormatError(f"{path}: ragged rows")
    try:
        data = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise MatrixFormatError(f"{path}: {exc}") from None
    if not np.all(np.isfinite(data)):
        raise MatrixFormatError(f"{path}: non-finite entries")
    return data


def matrix_csv(x):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    for row in np.atleast_2d(x):
        writer.writerow([fmt(float(v)) for v in row])
    return buf.getvalue()


def sweep_svg(result, width=640, height=400):
    """Success rate against m with the kinematic band and the psi_p/l marker."""
    cfg = result.config
    lo, hi = cfg.m_range
    left, right, top, bottom = 60, 20, 30, 50
    pw, ph = width - left - right, height - top - bottom
    span = max(hi - lo, 1)

    def sx(m):
        return left + pw * (min(max(m, lo), hi) - lo) / span

    def sy(p):
        return top + ph * (1.0 - p)

    th = result.thresholds
    center = result.theory.psi_p / cfg.l
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{sx(th.m_failure):.2f}" y="{top}" '
        f'width="{sx(th.m_success) - sx(th.m_failure):.2f}" height="{ph}" '
        'fill="#d0d0d0" fill-opacity="0.5"/>',
    ]
    if lo <= center <= hi:
        parts.append(f'<line x1="{sx(center):.2f}" y1="{top}" x2="{sx(center):.2f}" '
                     f'y2="{top + ph}" stroke="black" stroke-width="1.5"/>')
    if result.rates:
        pts = " ".join(f"{sx(r.m):.2f},{sy(r.rate):.2f}" for r in result.rates)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#1f4fb4" stroke-width="2"/>')
    parts.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for p in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(f'<text x="{left - 8}" y="{sy(p) + 4:.2f}" text-anchor="end">{p:g}</text>')
    step = max(1, span // 10)
    for m in range(lo, hi + 1, step):
        parts.append(f'<text x="{sx(m):.2f}" y="{top + ph + 18}" text-anchor="middle">{m}</text>')
    parts.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">'
                 'measurements m</text>')
    parts.append(f'<text x="{left}" y="{top - 10}">n={cfg.n} k={cfg.k} l={cfg.l} '
                 f'k_w={cfg.k_w} {cfg.prior_type.value} lambda={fmt(cfg.lam)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
