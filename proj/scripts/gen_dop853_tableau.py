#!/usr/bin/env python3
"""Regenerate include/jcsense/dop853_tableau.hpp from SciPy's DOP853 coefficients."""
import pathlib
import sys

import scipy.integrate._ivp.dop853_coefficients as c


def arr(name, a):
    body = ",\n".join("    " + repr(float(x)) for x in a)
    return f"inline constexpr double {name}[{len(a)}] = {{\n{body}}};\n"


def mat(name, m):
    rows = ",\n".join("    {" + ", ".join(repr(float(x)) for x in row) + "}" for row in m)
    return f"inline constexpr double {name}[{m.shape[0]}][{m.shape[1]}] = {{\n{rows}}};\n"


def main():
    out = [
        "// Dormand-Prince 8(5,3) tableau with the three extra stages used by the\n"
        "// seventh-order dense output. Generated by scripts/gen_dop853_tableau.py.\n"
        "#pragma once\n\nnamespace jcsense::ode::dop853 {\n",
        f"inline constexpr int kStages = {c.N_STAGES};\n"
        f"inline constexpr int kStagesExtended = {c.N_STAGES_EXTENDED};\n"
        f"inline constexpr int kInterpolatorPower = {c.INTERPOLATOR_POWER};\n",
        arr("C", c.C),
        mat("A", c.A),
        arr("B", c.B),
        arr("E3", c.E3),
        arr("E5", c.E5),
        mat("D", c.D),
        "\n}  // namespace jcsense::ode::dop853\n",
    ]
    root = pathlib.Path(__file__).resolve().parent.parent
    target = root / "include" / "jcsense" / "dop853_tableau.hpp"
    target.write_text("\n".join(out))
    print(f"wrote {target}", file=sys.stderr)


if __name__ == "__main__":
    main()
