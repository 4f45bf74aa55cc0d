import argparse
from pathlib import Path


def parser(desc, default_out):
    ap = argparse.ArgumentParser(description=desc)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results") / default_out)
    return ap
