#!/usr/bin/env python3
"""Regenerate the shipped corpus/ model files (canonical JSON)."""

import os
import sys

from fgkit.corpus import write_corpus


def main():
    target = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "corpus"
    )
    for path in write_corpus(target):
        print(path)


if __name__ == "__main__":
    main()
