"""
gmmb: Gaussian mixture clustering of bounded data.

Usage:
    python main.py fit --config enzyme/config.json
    python main.py sweep --data data.csv --bounds "*:lower=0" --model E,V --G 1..5
    python main.py --help
"""
import sys

from gmmb.cli import main

if __name__ == "__main__":
    sys.exit(main())
