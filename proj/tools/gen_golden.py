#!/usr/bin/env python3
"""Generate golden conformance vectors for the vector MAC datapath.

Independent integer-exact model: per lane the exponents add and signs xor,
the unit value 2^F >> quotient is summed per remainder bin, each bin sum is
multiplied by round(2^F * 2^(-r/gamma)) and truncated toward zero after the
F-bit shift, and the per-bin contributions accumulate into a saturating
signed accumulator.
"""
import argparse
import math
import random


def lut_entry(r, gamma, F):
    # round-half-even on an exact computation via Fraction would be overkill;
    # 2^F * 2^(-r/gamma) is irrational for r>0 so ties cannot occur.
    return round(2.0**F * 2.0 ** (-r / gamma))


def mac(lanes, gamma, b, F=23, acc_bits=26):
    bins = [0] * gamma
    for sa, ea, sb, eb in lanes:
        if ea is None or eb is None:
            continue
        psum = ea + eb
        q, r = psum >> b, psum & (gamma - 1)
        unit = (1 << F) >> q if q < F else 0
        bins[r] += (1 if sa == sb else -1) * unit
    acc = 0
    lim = (1 << (acc_bits - 1)) - 1
    sat = False
    for r in range(gamma):
        prod = bins[r] * lut_entry(r, gamma, F)
        contrib = prod >> F if prod >= 0 else -((-prod) >> F)  # toward zero
        acc += contrib
        if acc > lim:
            acc, sat = lim, True
        elif acc < -lim:
            acc, sat = -lim, True
    return acc, sat


def fmt_lane(sign, exp):
    return "z" if exp is None else str(exp)


def fmt_signs(lanes, idx):
    return " ".join("+" if l[idx] >= 0 else "-" for l in lanes)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--bitwidth", type=int, default=8)
    ap.add_argument("--gamma", type=int, default=8)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--lanes", type=int, default=32)
    ap.add_argument("--seed", type=int, default=20260823)
    args = ap.parse_args()

    gamma, b = args.gamma, int(math.log2(args.gamma))
    emax = (1 << (args.bitwidth - 1)) - 1
    rng = random.Random(args.seed)

    print(f"# golden MAC vectors  B={args.bitwidth} gamma={gamma} "
          f"VS={args.lanes} F=23")
    # widen the accumulator so full-scale lane products do not saturate
    print("# accumulator_bits 26")
    # hand-picked pair: lane exponents (0,0) and (8,0), all positive
    lanes = [(+1, 0, +1, 0), (+1, 8, +1, 0)]
    emit(lanes, gamma, b)
    for _ in range(args.count):
        lanes = []
        for _ in range(args.lanes):
            if rng.random() < 0.1:
                lanes.append((+1, None, +1, rng.randrange(emax + 1)))
            elif rng.random() < 0.1:
                lanes.append((rng.choice((1, -1)), rng.randrange(emax + 1), +1, None))
            else:
                lanes.append((rng.choice((1, -1)), rng.randrange(emax + 1),
                              rng.choice((1, -1)), rng.randrange(emax + 1)))
        emit(lanes, gamma, b)


def emit(lanes, gamma, b):
    acc, _ = mac(lanes, gamma, b)
    ea = " ".join(fmt_lane(l[0], l[1]) for l in lanes)
    eb = " ".join(fmt_lane(l[2], l[3]) for l in lanes)
    hexv = f"-0x{-acc:x}" if acc < 0 else f"0x{acc:x}"
    print(f"{ea} | {fmt_signs(lanes, 0)} | {eb} | {fmt_signs(lanes, 2)} | {hexv}")


if __name__ == "__main__":
    main()
