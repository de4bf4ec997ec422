"""Slow, independent reference implementations used only by the tests.

Nothing here imports earkit internals; every routine is a direct scalar
transcription of the definition it checks.
"""

from __future__ import annotations

import math
from fractions import Fraction


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def resize_bilinear_loop(img, out_w, out_h):
    """Exact rational evaluation of the clamped pixel-center bilinear formula."""
    h, w = len(img), len(img[0])
    out = [[0] * out_w for _ in range(out_h)]
    for i in range(out_h):
        sy = min(max((i + Fraction(1, 2)) * h / out_h - Fraction(1, 2), 0), h - 1)
        y0 = math.floor(sy)
        y1 = min(y0 + 1, h - 1)
        fy = sy - y0
        for j in range(out_w):
            sx = min(max((j + Fraction(1, 2)) * w / out_w - Fraction(1, 2), 0), w - 1)
            x0 = math.floor(sx)
            x1 = min(x0 + 1, w - 1)
            fx = sx - x0
            v = ((1 - fy) * ((1 - fx) * img[y0][x0] + fx * img[y0][x1])
                 + fy * ((1 - fx) * img[y1][x0] + fx * img[y1][x1]))
            out[i][j] = math.floor(v + Fraction(1, 2))
    return out


def equalize_loop(img):
    flat = [v for row in img for v in row]
    n = len(flat)
    cdf = []
    running = 0
    for level in range(256):
        running += sum(1 for v in flat if v == level)
        cdf.append(running)
    cdf_min = min(c for c in cdf if c > 0)
    if n == cdf_min:
        return [list(row) for row in img]
    return [[round_half_up(255 * (cdf[v] - cdf_min) / (n - cdf_min)) for v in row] for row in img]


def transitions_by_string(pattern: int, bits: int = 8) -> int:
    s = format(pattern, f"0{bits}b")
    return sum(1 for i in range(bits) if s[i] != s[(i + 1) % bits])


def uniform_table(bits: int = 8):
    uniform = [p for p in range(1 << bits) if transitions_by_string(p, bits) <= 2]
    table = {p: i for i, p in enumerate(uniform)}
    return lambda p: table.get(p, len(uniform)), len(uniform) + 1


def _snap(v: float) -> float:
    r = round(v)
    return float(r) if abs(v - r) < 1e-9 else v


def lbp_codemap_loop(img, radius=2, neighbors=8):
    """Uniform LBP label for every pixel at distance >= radius from the border."""
    label, _ = uniform_table(neighbors)
    h, w = len(img), len(img[0])
    out = []
    for r in range(radius, h - radius):
        row = []
        for c in range(radius, w - radius):
            center = img[r][c]
            pattern = 0
            for k in range(neighbors):
                ang = 2 * math.pi * k / neighbors
                y = _snap(r - radius * math.sin(ang))
                x = _snap(c + radius * math.cos(ang))
                y0, x0 = int(math.floor(y)), int(math.floor(x))
                fy, fx = y - y0, x - x0
                y1 = y0 + 1 if fy > 0 else y0
                x1 = x0 + 1 if fx > 0 else x0
                v = ((1 - fy) * (1 - fx) * img[y0][x0] + (1 - fy) * fx * img[y0][x1]
                     + fy * (1 - fx) * img[y1][x0] + fy * fx * img[y1][x1])
                if v - center >= -1e-9:
                    pattern |= 1 << k
            row.append(label(pattern))
        out.append(row)
    return out


def block_histograms_loop(codes, n_bins, bw, bh, overlap=0):
    h, w = len(codes), len(codes[0])
    sx, sy = bw - overlap, bh - overlap
    feats = []
    top = 0
    while top + bh <= h:
        left = 0
        while left + bw <= w:
            hist = [0.0] * n_bins
            for y in range(top, top + bh):
                for x in range(left, left + bw):
                    hist[codes[y][x]] += 1
            total = sum(hist)
            feats.extend(v / total for v in hist)
            left += sx
        top += sy
    return feats


def chi_square_naive(a, b):
    total = 0.0
    for x, y in zip(a, b):
        if x + y > 0:
            total += (x - y) ** 2 / (x + y)
    return total


def eer_sweep(genuine, impostor):
    """min over thresholds of max(FAR, FRR), accept iff score <= t."""
    best = 1.0
    for t in [-math.inf] + sorted(set(genuine) | set(impostor)):
        far = sum(1 for s in impostor if s <= t) / len(impostor)
        frr = sum(1 for s in genuine if s > t) / len(genuine)
        best = min(best, max(far, frr))
    return best


def roc_sweep(genuine, impostor):
    pts = []
    for t in [-math.inf] + sorted(set(genuine) | set(impostor)):
        far = sum(1 for s in impostor if s <= t) / len(impostor)
        vr = sum(1 for s in genuine if s <= t) / len(genuine)
        pts.append((far, vr))
    return pts


def rank1_argmin(scores, probe_labels, gallery_labels):
    hits = 0
    for i, row in enumerate(scores):
        j = min(range(len(row)), key=lambda c: row[c])
        hits += gallery_labels[j] == probe_labels[i]
    return hits / len(scores)
