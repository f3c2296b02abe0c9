#!/usr/bin/env python3
"""Regenerate the model corpus under models/ from the seeded builders."""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from nn2c.fixtures import write_fixture_corpus  # noqa: E402


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else \
        os.path.join(os.path.dirname(__file__), "..", "models")
    for path in write_fixture_corpus(out):
        print(path)


if __name__ == "__main__":
    main()
