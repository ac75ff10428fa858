"""String similarity kernels, pure-Python implementation.

Scores are fixed-point hundredths in [0, 10000], rounded half-up. The
compiled twin in _kernels.pyx implements the same arithmetic expressions so
both backends agree bit for bit.
"""

from __future__ import annotations


def levenshtein(a: str, b: str) -> int:
    """Edit distance (insert, delete, substitute)."""
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    if la < lb:
        a, b, la, lb = b, a, lb, la
    prev = list(range(lb + 1))
    cur = [0] * (lb + 1)
    for i in range(1, la + 1):
        ca = a[i - 1]
        cur[0] = i
        for j in range(1, lb + 1):
            cost = 0 if ca == b[j - 1] else 1
            best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            if prev[j - 1] + cost < best:
                best = prev[j - 1] + cost
            cur[j] = best
        prev, cur = cur, prev
    return prev[lb]


def lev_score(a: str, b: str) -> int:
    """10000 * (1 - editdist / max(len)), rounded half-up."""
    if a == b:
        return 10000
    m = max(len(a), len(b))
    return int((1.0 - levenshtein(a, b) / m) * 10000.0 + 0.5)


def _jaro(a: str, b: str) -> float:
    la, lb = len(a), len(b)
    if la == 0 and lb == 0:
        return 1.0
    if la == 0 or lb == 0:
        return 0.0
    window = max(la, lb) // 2 - 1
    if window < 0:
        window = 0
    amatch = [False] * la
    bmatch = [False] * lb
    m = 0
    for i in range(la):
        lo = i - window if i > window else 0
        hi = i + window + 1
        if hi > lb:
            hi = lb
        for j in range(lo, hi):
            if not bmatch[j] and a[i] == b[j]:
                amatch[i] = True
                bmatch[j] = True
                m += 1
                break
    if m == 0:
        return 0.0
    mismatched = 0
    k = 0
    for i in range(la):
        if amatch[i]:
            while not bmatch[k]:
                k += 1
            if a[i] != b[k]:
                mismatched += 1
            k += 1
    t = mismatched // 2
    return (m / la + m / lb + (m - t) / m) / 3.0


def jw_score(a: str, b: str) -> int:
    """Jaro-Winkler similarity in hundredths; the common-prefix boost
    (factor 0.1, prefix capped at 4) is applied unconditionally."""
    j = _jaro(a, b)
    p = 0
    for i in range(min(4, len(a), len(b))):
        if a[i] != b[i]:
            break
        p += 1
    return int((j + p * 0.1 * (1.0 - j)) * 10000.0 + 0.5)
