"""Exact-rational evaluation of the three-frame toy set.

Prints maxF, its threshold, avgF, AUC and MAE plus a few curve samples, all
computed with fractions.Fraction and a literal per-threshold loop. The C++
tests hold the printed values as constants.
"""
from fractions import Fraction as Fr

EPS = Fr(1, 10**8)
BETA2 = Fr(3, 10)

# (map bytes, ground truth) per frame, row-major.
FRAMES = [
    (
        [[250, 200, 10, 0],
         [180, 128, 40, 5],
         [90, 128, 127, 60],
         [0, 30, 255, 220]],
        [[1, 1, 0, 0],
         [1, 0, 0, 0],
         [0, 1, 0, 0],
         [0, 0, 1, 1]],
    ),
    (
        [[0, 64, 128, 192, 255],
         [17, 34, 51, 68, 85],
         [200, 200, 200, 3, 3]],
        [[0, 0, 0, 0, 0],
         [0, 0, 0, 0, 0],
         [0, 0, 0, 0, 0]],
    ),
    (
        [[255, 254, 1, 0, 100, 101],
         [99, 150, 150, 149, 7, 8]],
        [[1, 1, 0, 0, 1, 0],
         [0, 1, 1, 0, 0, 1]],
    ),
]


def flat(rows):
    return [v for r in rows for v in r]


def curves(s, g):
    pos = sum(g)
    neg = len(g) - pos
    out = []
    for t in range(256):
        m = [1 if v >= t else 0 for v in s]
        tp = sum(1 for a, b in zip(m, g) if a and b)
        fp = sum(1 for a, b in zip(m, g) if a and not b)
        p = Fr(tp) / (Fr(tp + fp) + EPS)
        r = Fr(tp, pos) if pos else Fr(0)
        fpr = Fr(fp, neg) if neg else Fr(0)
        out.append((p, r, r, fpr))
    mae = sum(abs(Fr(v, 255) - b) for v, b in zip(s, g)) / len(s)
    return out, mae


def main():
    per = [curves(flat(s), flat(g)) for s, g in FRAMES]
    n = len(per)
    P, R, TPR, FPR, F = [], [], [], [], []
    for t in range(256):
        p = sum(c[0][t][0] for c in per) / n
        r = sum(c[0][t][1] for c in per) / n
        P.append(p)
        R.append(r)
        TPR.append(sum(c[0][t][2] for c in per) / n)
        FPR.append(sum(c[0][t][3] for c in per) / n)
        den = BETA2 * p + r
        F.append((1 + BETA2) * p * r / den if den > 0 else Fr(0))
    max_f = max(F)
    arg = F.index(max_f)
    avg_f = sum(F) / 256
    pts = sorted([(f, t) for t, f in zip(TPR, FPR)] + [(Fr(0), Fr(0)), (Fr(1), Fr(1))])
    auc = sum((pts[i][0] - pts[i - 1][0]) * (pts[i][1] + pts[i - 1][1]) / 2 for i in range(1, len(pts)))
    mae = sum(c[1] for c in per) / n
    print(f"max_f {float(max_f):.15f}")
    print(f"max_f_threshold {arg}")
    print(f"avg_f {float(avg_f):.15f}")
    print(f"auc {float(auc):.15f}")
    print(f"mae {float(mae):.15f}")
    for t in (0, 1, 100, 128, 200, 255):
        print(f"t{t} P {float(P[t]):.15f} R {float(R[t]):.15f} F {float(F[t]):.15f} FPR {float(FPR[t]):.15f}")


if __name__ == "__main__":
    main()
