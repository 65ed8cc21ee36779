#!/usr/bin/env python3
"""Regenerates src/unicode_tables.inc from Python's unicodedata.

Emits two tables:
  kPunctuationRanges  code point ranges whose general category is P*
  kWideFoldings       <wide> compatibility decompositions (full-width -> half-width)
"""
import sys
import unicodedata


def punctuation_ranges():
    ranges = []
    start = prev = None
    for cp in range(0x110000):
        if unicodedata.category(chr(cp)).startswith("P"):
            if start is None:
                start = prev = cp
            elif cp == prev + 1:
                prev = cp
            else:
                ranges.append((start, prev))
                start = prev = cp
    if start is not None:
        ranges.append((start, prev))
    return ranges


def wide_foldings():
    out = []
    for cp in range(0x110000):
        d = unicodedata.decomposition(chr(cp))
        if d.startswith("<wide>"):
            parts = d.split()[1:]
            assert len(parts) == 1
            out.append((cp, int(parts[0], 16)))
    return out


def main():
    w = sys.stdout.write
    w("// Generated by scripts/gen_unicode_tables.py (Unicode %s). Do not edit.\n\n"
      % unicodedata.unidata_version)
    w("inline constexpr CodePointRange kPunctuationRanges[] = {\n")
    for a, b in punctuation_ranges():
        w("    {0x%04X, 0x%04X},\n" % (a, b))
    w("};\n\n")
    w("inline constexpr WideFolding kWideFoldings[] = {\n")
    for a, b in wide_foldings():
        w("    {0x%04X, 0x%04X},\n" % (a, b))
    w("};\n")


if __name__ == "__main__":
    main()
