"""Pure-Python scoring kernels.

Fallback used when the compiled extension is unavailable. Operation order
matches the compiled kernels exactly, so both backends produce bit-identical
float64 results.
"""

import math

COND_EQ = 0
COND_LT = 1
COND_GT = 2


def phi_scalar(cond, vx, vi):
    """Condition score of one sentence value vi against query value vx.

    EQ decays with absolute distance. LT/GT score 0 unless the strict bound
    holds; satisfying values score the ratio toward 1 when both operands are
    positive, else the same exponential decay.
    """
    if cond == COND_EQ:
        return math.exp(-abs(vx - vi))
    if cond == COND_LT:
        if vi < vx:
            if vi > 0.0:
                return vi / vx
            return math.exp(-abs(vx - vi))
        return 0.0
    if vi > vx:
        if vx > 0.0:
            return vx / vi
        return math.exp(-abs(vx - vi))
    return 0.0


def phi_batch(cond, vx, values, out):
    for i in range(len(values)):
        out[i] = phi_scalar(cond, vx, float(values[i]))


def qs_batch(cond, vx, unit_id, values, unit_ids, offsets, out):
    # out[i] = unit-gated phi summed over sentence i's quantity slice in
    # storage order, one division by the full quantity count at the end.
    # The brute-force oracle follows the same shape, so results must agree
    # bit for bit.
    for i in range(len(out)):
        start = offsets[i]
        end = offsets[i + 1]
        total = 0.0
        for j in range(start, end):
            if unit_ids[j] == unit_id:
                total += phi_scalar(cond, vx, float(values[j]))
        count = end - start
        out[i] = total / count if count else 0.0


def bm25_accumulate(idf, k1p1, doc_ords, tfs, norms, scores):
    for j in range(len(doc_ords)):
        d = doc_ords[j]
        tf = float(tfs[j])
        scores[d] += idf * tf * k1p1 / (tf + float(norms[d]))
